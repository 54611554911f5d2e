#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "packtree/policy.hpp"

namespace packtree {

std::string heuristic_name(HeuristicKind k) {
    switch (k) {
        case HeuristicKind::Dbl: return "dbl";
        case HeuristicKind::OnlineBph: return "bph";
        case HeuristicKind::Lsah: return "lsah";
        case HeuristicKind::Hm: return "hm";
        case HeuristicKind::Random: return "random";
    }
    return "random";
}

HeuristicKind heuristic_from_name(const std::string& name) {
    for (HeuristicKind k : {HeuristicKind::Dbl, HeuristicKind::OnlineBph, HeuristicKind::Lsah,
                            HeuristicKind::Hm, HeuristicKind::Random})
        if (heuristic_name(k) == name) return k;
    throw std::invalid_argument("unknown heuristic: " + name);
}

namespace {

// Deep-bottom-left key: deepest (lowest z), then bottom (y), then left (x).
std::array<Scalar, 3> dbl_key(const Vec3& p) { return {p.z, p.y, p.x}; }

int pick_min(const std::vector<LeafPlacement>& leaves,
             const std::function<Scalar(const LeafPlacement&)>& score) {
    int best = 0;
    Scalar best_score = score(leaves[0]);
    auto best_key = dbl_key(leaves[0].flb);
    for (int i = 1; i < static_cast<int>(leaves.size()); ++i) {
        const Scalar s = score(leaves[i]);
        const auto key = dbl_key(leaves[i].flb);
        if (s < best_score || (s == best_score && key < best_key)) {
            best = i;
            best_score = s;
            best_key = key;
        }
    }
    return best;
}

int online_bph(const PackingTree& tree, const std::vector<LeafPlacement>& leaves,
               const ItemSpec& item) {
    // sort the empty spaces in DBL order and take the first fit
    const Scalar eps = tree.bin().eps();
    std::vector<const EmsSpace*> order;
    for (const EmsSpace& e : tree.ems_set()) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](const EmsSpace* a, const EmsSpace* b) {
        return dbl_key(a->box.flb) < dbl_key(b->box.flb);
    });
    for (const EmsSpace* e : order) {
        for (int o = 0; o < tree.orientations(); ++o) {
            const Vec3 s = oriented_size(item.size, o);
            if (e->box.size.x < s.x - eps || e->box.size.y < s.y - eps ||
                e->box.size.z < s.z - eps)
                continue;
            for (int i = 0; i < static_cast<int>(leaves.size()); ++i) {
                const LeafPlacement& l = leaves[i];
                if (l.orientation == o && l.source_ems == e->arena_idx &&
                    l.flb == e->box.flb)
                    return i;  // the left-bottom corner of this space
            }
        }
    }
    return -1;
}

}  // namespace

int heuristic_policy(HeuristicKind kind, const PackingTree& tree,
                     const std::vector<LeafPlacement>& leaves, const ItemSpec& item,
                     std::mt19937_64& rng) {
    if (leaves.empty()) throw std::logic_error("heuristic_policy: no leaves");
    switch (kind) {
        case HeuristicKind::Random:
            return static_cast<int>(rng() % leaves.size());
        case HeuristicKind::Dbl:
            return pick_min(leaves, [](const LeafPlacement&) { return 0.0; });
        case HeuristicKind::OnlineBph: {
            const int i = online_bph(tree, leaves, item);
            if (i >= 0) return i;
            return pick_min(leaves, [](const LeafPlacement&) { return 0.0; });
        }
        case HeuristicKind::Lsah: {
            // least exposed surface of the stack extents after the placement
            // (top face plus the four sides; the bottom rests on the floor)
            Scalar ex = 0, ey = 0, ez = 0;
            for (const InternalNode& n : tree.internals()) {
                ex = std::max(ex, n.box.hi(0));
                ey = std::max(ey, n.box.hi(1));
                ez = std::max(ez, n.box.hi(2));
            }
            return pick_min(leaves, [&](const LeafPlacement& l) {
                const Scalar x = std::max(ex, l.box().hi(0));
                const Scalar y = std::max(ey, l.box().hi(1));
                const Scalar z = std::max(ez, l.box().hi(2));
                return x * y + 2 * z * (x + y);
            });
        }
        case HeuristicKind::Hm: {
            // minimize packed volume as seen from the loading direction
            std::vector<Box3> boxes;
            for (const InternalNode& n : tree.internals()) boxes.push_back(n.box);
            return pick_min(leaves, [&](const LeafPlacement& l) {
                boxes.push_back(l.box());
                const Scalar v = heightmap(boxes, tree.bin()).total_volume();
                boxes.pop_back();
                return v;
            });
        }
    }
    return 0;
}

BphFreeSpaceHeuristic::BphFreeSpaceHeuristic(const BinSpec& bin) : bin_(bin) {
    spaces_.push_back(bin.as_box());
}

std::optional<Box3> BphFreeSpaceHeuristic::place(const ItemSpec& item, const LeafFilter& extra) {
    const Scalar eps = std::max(bin_.eps(), 1e-9);
    // deepest into the container first, then bottom, then left
    std::sort(spaces_.begin(), spaces_.end(), [](const Box3& a, const Box3& b) {
        const auto ka = std::array{-a.flb.y, a.flb.z, a.flb.x};
        const auto kb = std::array{-b.flb.y, b.flb.z, b.flb.x};
        return ka < kb;
    });
    for (size_t i = 0; i < spaces_.size(); ++i) {
        const Box3& e = spaces_[i];
        const Vec3& s = item.size;
        if (e.size.x < s.x - eps || e.size.y < s.y - eps || e.size.z < s.z - eps) continue;
        const Box3 box{e.flb, s};
        bool ok = contains(bin_, box);
        for (const Box3& b : packed_)
            if (ok && overlaps(b, box, eps)) ok = false;  // stale space, skip
        if (ok && extra && !extra(LeafPlacement{s, e.flb, 0, -1})) ok = false;
        if (!ok) continue;
        // guillotine residuals of the hosting space only
        const Box3 host = e;
        spaces_.erase(spaces_.begin() + static_cast<long>(i));
        if (host.size.x - s.x > eps)
            spaces_.push_back({{host.flb.x + s.x, host.flb.y, host.flb.z},
                               {host.size.x - s.x, host.size.y, host.size.z}});
        if (host.size.y - s.y > eps)
            spaces_.push_back({{host.flb.x, host.flb.y + s.y, host.flb.z},
                               {host.size.x, host.size.y - s.y, host.size.z}});
        if (host.size.z - s.z > eps)
            spaces_.push_back({{host.flb.x, host.flb.y, host.flb.z + s.z},
                               {host.size.x, host.size.y, host.size.z - s.z}});
        packed_.push_back(box);
        return box;
    }
    return std::nullopt;
}

}  // namespace packtree
