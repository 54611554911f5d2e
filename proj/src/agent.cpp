#include "packtree/agent.hpp"

namespace packtree {

int Agent::pick(const BinSpec& bin, std::span<const InternalNode> internals,
                const std::vector<LeafPlacement>& leaves, const ItemSpec& item) {
    const std::vector<double> s = leaf_scores(bin, internals, leaves, item);
    int best = 0;
    for (int i = 1; i < static_cast<int>(s.size()); ++i)
        if (s[i] > s[best]) best = i;
    return best;
}

std::vector<double> PolicyAgent::leaf_scores(const BinSpec& bin,
                                             std::span<const InternalNode> internals,
                                             const std::vector<LeafPlacement>& leaves,
                                             const ItemSpec& item) {
    const ForwardCache c =
        policy_forward(params_, make_state_input(bin, internals, leaves, item, params_.dims));
    return c.pi;
}

double PolicyAgent::state_value(const BinSpec& bin, std::span<const InternalNode> internals,
                                const ItemSpec& item) {
    const ForwardCache c =
        policy_forward(params_, make_state_input(bin, internals, {}, item, params_.dims));
    return c.value;
}

std::vector<double> ProxyAgent::leaf_scores(const BinSpec& bin,
                                            std::span<const InternalNode> internals,
                                            const std::vector<LeafPlacement>& leaves,
                                            const ItemSpec& item) {
    // low, snugly supported placements that hug walls and neighbors
    std::vector<double> out(leaves.size());
    for (size_t i = 0; i < leaves.size(); ++i) {
        const Box3 box = leaves[i].box();
        const double ztop = box.top() / bin.size.z;
        const double y = box.flb.y / bin.size.y;
        const double x = box.flb.x / bin.size.x;
        double contact = 0;  // supported footprint fraction below the box
        if (box.flb.z <= bin.eps()) {
            contact = 1;
        } else {
            for (const InternalNode& n : internals) {
                if (std::abs(n.box.top() - box.flb.z) > 1e-9) continue;
                const Scalar ox = std::min(box.hi(0), n.box.hi(0)) - std::max(box.lo(0), n.box.lo(0));
                const Scalar oy = std::min(box.hi(1), n.box.hi(1)) - std::max(box.lo(1), n.box.lo(1));
                if (ox > 0 && oy > 0) contact += ox * oy;
            }
            contact = std::min(1.0, contact / (box.size.x * box.size.y));
        }
        // fraction of the four side faces flush against walls or neighbors
        auto side_touch = [&](int axis, bool high) {
            const double plane = high ? box.hi(axis) : box.lo(axis);
            if (!high && plane <= bin.eps()) return 1.0;
            if (high && plane >= bin.size[axis] - bin.eps()) return 1.0;
            double frac = 0;
            const int other = axis == 0 ? 1 : 0;
            for (const InternalNode& n : internals) {
                const double np = high ? n.box.lo(axis) : n.box.hi(axis);
                if (std::abs(np - plane) > 1e-9) continue;
                const Scalar o1 =
                    std::min(box.hi(other), n.box.hi(other)) - std::max(box.lo(other), n.box.lo(other));
                const Scalar o2 = std::min(box.hi(2), n.box.hi(2)) - std::max(box.lo(2), n.box.lo(2));
                if (o1 > 0 && o2 > 0) frac += (o1 * o2) / (box.size[other] * box.size.z);
            }
            return std::min(1.0, frac);
        };
        const double hug = side_touch(0, false) + side_touch(0, true) + side_touch(1, false) +
                           side_touch(1, true);
        out[i] = contact + 0.5 * hug - 6.0 * ztop - 0.3 * (x + y);
    }
    // Stand-in for a policy trained on sizes in [0.1, 0.5] of the bin:
    // preferences degrade toward arbitrary (but reproducible) orderings as
    // the normalized item leaves that range.
    double familiarity = 1;
    for (int d = 0; d < 3; ++d) {
        const double s = item.size[d] / bin.size[d];
        if (s > 0.5) familiarity *= 0.5 / s;
        if (s < 0.1) familiarity *= s / 0.1;
    }
    if (familiarity < 1 && leaves.size() > 1) {
        double lo = out[0], hi = out[0];
        for (double v : out) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double span = hi - lo + 1e-12;
        for (size_t i = 0; i < leaves.size(); ++i) {
            // hash of the placement geometry -> deterministic pseudo-noise
            uint64_t h = 0xcbf29ce484222325ull;
            const Box3 box = leaves[i].box();
            const unsigned char* bytes = reinterpret_cast<const unsigned char*>(&box);
            for (size_t b = 0; b < sizeof(Box3); ++b) {
                h ^= bytes[b];
                h *= 0x100000001b3ull;
            }
            const double noise = lo + span * (static_cast<double>(h >> 11) * 0x1.0p-53);
            out[i] = familiarity * out[i] + (1 - familiarity) * noise;
        }
    }
    return out;
}

double ProxyAgent::state_value(const BinSpec& bin, std::span<const InternalNode> internals,
                               const ItemSpec& item) {
    (void)item;
    Scalar packed = 0;
    for (const InternalNode& n : internals) packed += n.box.volume();
    return (bin.volume() - packed) / bin.volume();
}

}  // namespace packtree
