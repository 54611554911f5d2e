#include "packtree/pct.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace packtree {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::CornerPoint: return "cp";
        case Scheme::ExtremePoint: return "ep";
        case Scheme::Ems: return "ems";
        case Scheme::EventPoint: return "ev";
    }
    return "ems";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "cp") return Scheme::CornerPoint;
    if (name == "ep") return Scheme::ExtremePoint;
    if (name == "ems") return Scheme::Ems;
    if (name == "ev") return Scheme::EventPoint;
    throw std::invalid_argument("unknown expansion scheme: " + name);
}

PackingTree::PackingTree(BinSpec bin, Scheme scheme, int orientations)
    : bin_(bin), scheme_(scheme), orientations_(orientations) {
    if (orientations != 1 && orientations != 2 && orientations != 6)
        throw std::invalid_argument("orientations must be 1, 2 or 6");
    arena_.push_back({bin_.as_box(), -1, -1});
    ems_.push_back({bin_.as_box(), 0});
}

Scalar PackingTree::packed_volume() const {
    Scalar v = 0;
    for (const InternalNode& n : internals_) v += n.box.volume();
    return v;
}

bool PackingTree::placement_ok(const Box3& box) const {
    const Scalar eps = bin_.eps();
    if (!contains(bin_, box)) return false;
    for (const InternalNode& n : internals_)
        if (overlaps(n.box, box, eps)) return false;
    return true;
}

std::vector<Scalar> PackingTree::candidate_planes() const {
    std::vector<Scalar> zs{0};
    for (const InternalNode& n : internals_) zs.push_back(n.box.top());
    std::sort(zs.begin(), zs.end());
    const Scalar eps = bin_.eps();
    std::vector<Scalar> out;
    for (Scalar z : zs) {
        if (z >= bin_.size.z - eps) continue;
        if (out.empty() || z - out.back() > eps) out.push_back(z);
    }
    return out;
}

std::vector<const InternalNode*> PackingTree::blocking_at(Scalar z) const {
    const Scalar eps = bin_.eps();
    std::vector<const InternalNode*> out;
    for (const InternalNode& n : internals_)
        if (n.box.lo(2) <= z + eps && n.box.hi(2) > z + eps) out.push_back(&n);
    return out;
}

void PackingTree::gen_ems_candidates(const ItemSpec& item, std::vector<LeafPlacement>& out) const {
    const Scalar eps = bin_.eps();
    for (const EmsSpace& e : ems_) {
        for (int o = 0; o < orientations_; ++o) {
            const Vec3 s = oriented_size(item.size, o);
            if (e.box.size.x < s.x - eps || e.box.size.y < s.y - eps || e.box.size.z < s.z - eps)
                continue;
            const Vec3 p = e.box.flb;
            const Scalar dx = e.box.size.x - s.x, dy = e.box.size.y - s.y;
            const Vec3 corners[4] = {
                {p.x, p.y, p.z},            // left-bottom
                {p.x + dx, p.y, p.z},       // right-bottom
                {p.x, p.y + dy, p.z},       // left-up
                {p.x + dx, p.y + dy, p.z},  // right-up
            };
            for (const Vec3& c : corners) out.push_back({s, c, o, e.arena_idx});
        }
    }
}

void PackingTree::gen_corner_candidates(const ItemSpec& item, std::vector<LeafPlacement>& out) const {
    for (Scalar z : candidate_planes()) {
        const auto blocking = blocking_at(z);
        // non-dominated top-right corners of the xy footprints, x ascending
        std::vector<std::pair<Scalar, Scalar>> corners;
        for (const InternalNode* n : blocking) corners.push_back({n->box.hi(0), n->box.hi(1)});
        std::sort(corners.begin(), corners.end());
        std::vector<std::pair<Scalar, Scalar>> stairs;  // x asc, y desc
        for (auto it = corners.rbegin(); it != corners.rend(); ++it) {
            if (stairs.empty() || it->second > stairs.back().second) stairs.push_back(*it);
        }
        std::reverse(stairs.begin(), stairs.end());
        // envelope switches from vertical to horizontal at these points
        std::vector<std::pair<Scalar, Scalar>> pts;
        if (stairs.empty()) {
            pts.push_back({0, 0});
        } else {
            pts.push_back({0, stairs.front().second});
            for (size_t i = 0; i + 1 < stairs.size(); ++i)
                pts.push_back({stairs[i].first, stairs[i + 1].second});
            pts.push_back({stairs.back().first, 0});
        }
        for (int o = 0; o < orientations_; ++o) {
            const Vec3 s = oriented_size(item.size, o);
            for (const auto& [x, y] : pts) out.push_back({s, {x, y, z}, o, -1});
        }
    }
}

void PackingTree::gen_extreme_candidates(const ItemSpec& item, std::vector<LeafPlacement>& out) const {
    const Scalar eps = bin_.eps();
    for (Scalar z : candidate_planes()) {
        const auto blocking = blocking_at(z);
        std::vector<std::pair<Scalar, Scalar>> pts{{0, 0}};
        for (const InternalNode* n : blocking) {
            const Box3& b = n->box;
            // right-bottom corner projected toward y = 0
            Scalar yhit = 0;
            for (const InternalNode* m : blocking) {
                const Box3& c = m->box;
                if (c.lo(0) <= b.hi(0) + eps && c.hi(0) > b.hi(0) + eps &&
                    c.hi(1) <= b.lo(1) + eps)
                    yhit = std::max(yhit, c.hi(1));
            }
            pts.push_back({b.hi(0), yhit});
            // left-top corner projected toward x = 0
            Scalar xhit = 0;
            for (const InternalNode* m : blocking) {
                const Box3& c = m->box;
                if (c.lo(1) <= b.hi(1) + eps && c.hi(1) > b.hi(1) + eps &&
                    c.hi(0) <= b.lo(0) + eps)
                    xhit = std::max(xhit, c.hi(0));
            }
            pts.push_back({xhit, b.hi(1)});
        }
        for (int o = 0; o < orientations_; ++o) {
            const Vec3 s = oriented_size(item.size, o);
            for (const auto& [x, y] : pts) out.push_back({s, {x, y, z}, o, -1});
        }
    }
}

void PackingTree::gen_event_candidates(const ItemSpec& item, std::vector<LeafPlacement>& out) const {
    const Scalar eps = bin_.eps();
    for (Scalar z : candidate_planes()) {
        for (int o = 0; o < orientations_; ++o) {
            const Vec3 s = oriented_size(item.size, o);
            // boundary values of everything the item would share heights with
            std::vector<Scalar> xb{0, bin_.size.x}, yb{0, bin_.size.y};
            for (const InternalNode& n : internals_) {
                if (n.box.lo(2) >= z + s.z - eps || n.box.hi(2) <= z + eps) continue;
                xb.push_back(n.box.lo(0));
                xb.push_back(n.box.hi(0));
                yb.push_back(n.box.lo(1));
                yb.push_back(n.box.hi(1));
            }
            // align the item start or end to every boundary value
            std::set<Scalar> xs, ys;
            for (Scalar v : xb) {
                xs.insert(v);
                xs.insert(v - s.x);
            }
            for (Scalar v : yb) {
                ys.insert(v);
                ys.insert(v - s.y);
            }
            for (Scalar x : xs)
                for (Scalar y : ys) out.push_back({s, {x, y, z}, o, -1});
        }
    }
}

std::vector<LeafPlacement> PackingTree::candidates_for(const ItemSpec& item,
                                                       const LeafFilter& extra) const {
    if (!(item.size.x > 0 && item.size.y > 0 && item.size.z > 0))
        throw std::invalid_argument("item sizes must be positive");
    std::vector<LeafPlacement> raw;
    switch (scheme_) {
        case Scheme::Ems: gen_ems_candidates(item, raw); break;
        case Scheme::CornerPoint: gen_corner_candidates(item, raw); break;
        case Scheme::ExtremePoint: gen_extreme_candidates(item, raw); break;
        case Scheme::EventPoint: gen_event_candidates(item, raw); break;
    }
    std::vector<LeafPlacement> out;
    std::set<std::tuple<int, Scalar, Scalar, Scalar>> seen;
    for (const LeafPlacement& l : raw) {
        if (!placement_ok(l.box())) continue;
        if (!seen.insert({l.orientation, l.flb.x, l.flb.y, l.flb.z}).second) continue;
        if (extra && !extra(l)) continue;
        out.push_back(l);
    }
    return out;
}

const std::vector<LeafPlacement>& PackingTree::refresh_leaves(const ItemSpec& item,
                                                              const LeafFilter& extra) {
    leaves_ = candidates_for(item, extra);
    return leaves_;
}

void PackingTree::insert(const ItemSpec& item, const LeafPlacement& leaf) {
    const Scalar eps = bin_.eps();
    const Box3 box = leaf.box();
    if (!placement_ok(box)) throw std::invalid_argument("placement violates packing constraints");

    const int item_idx = static_cast<int>(internals_.size());
    InternalNode node;
    node.box = box;
    node.density = item.density;
    node.category = item.category;
    node.mass = item.mass();
    node.source_ems = leaf.source_ems;
    node.parent_item = leaf.source_ems >= 0 ? arena_[leaf.source_ems].creator_item : -1;
    internals_.push_back(node);

    // Split every EMS the item intersects into the up-to-six residual slabs.
    last_split_inspections_ = 0;
    struct Candidate {
        Box3 box;
        int arena_idx;  // -1 for new children not yet registered
        int parent;
    };
    std::vector<Candidate> cands;
    for (const EmsSpace& e : ems_) {
        ++last_split_inspections_;
        const auto cut = intersect(e.box, box, eps);
        if (!cut) {
            cands.push_back({e.box, e.arena_idx, arena_[e.arena_idx].parent});
            continue;
        }
        for (int d = 0; d < 3; ++d) {
            Box3 lo = e.box;
            lo.size[d] = cut->lo(d) - e.box.lo(d);
            if (lo.size[d] > eps) cands.push_back({lo, -1, e.arena_idx});
            Box3 hi = e.box;
            hi.flb[d] = cut->hi(d);
            hi.size[d] = e.box.hi(d) - cut->hi(d);
            if (hi.size[d] > eps) cands.push_back({hi, -1, e.arena_idx});
        }
    }

    // Dominance removal: drop spaces contained in another candidate; equal
    // boxes keep the earliest occurrence.
    std::vector<bool> dead(cands.size(), false);
    for (size_t i = 0; i < cands.size(); ++i) {
        if (dead[i]) continue;
        for (size_t j = 0; j < cands.size(); ++j) {
            if (i == j || dead[j]) continue;
            if (box_contains(cands[j].box, cands[i].box, eps) &&
                (!box_contains(cands[i].box, cands[j].box, eps) || j < i)) {
                dead[i] = true;
                break;
            }
        }
    }
    ems_.clear();
    for (size_t i = 0; i < cands.size(); ++i) {
        if (dead[i]) continue;
        int idx = cands[i].arena_idx;
        if (idx < 0) {
            idx = static_cast<int>(arena_.size());
            arena_.push_back({cands[i].box, cands[i].parent, item_idx});
        }
        ems_.push_back({cands[i].box, idx});
    }
    leaves_.clear();
}

std::vector<LeafPlacement> intercept_leaves(const std::vector<LeafPlacement>& leaves,
                                            int max_len, std::mt19937_64& rng) {
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    const int n = static_cast<int>(leaves.size());
    if (n <= max_len) return leaves;
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < max_len; ++i) {
        const int j = i + static_cast<int>(rng() % static_cast<uint64_t>(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(max_len);
    std::sort(idx.begin(), idx.end());
    std::vector<LeafPlacement> out;
    out.reserve(max_len);
    for (int i : idx) out.push_back(leaves[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Text snapshots

std::string PackingTree::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "bin " << bin_.size.x << ' ' << bin_.size.y << ' ' << bin_.size.z << ' '
       << (bin_.mode == BinMode::Discrete ? "discrete" : "continuous") << ' ' << bin_.grid_step
       << '\n';
    os << "tree " << scheme_name(scheme_) << ' ' << orientations_ << '\n';
    for (const EmsRecord& r : arena_)
        os << "arena " << r.box.flb.x << ' ' << r.box.flb.y << ' ' << r.box.flb.z << ' '
           << r.box.size.x << ' ' << r.box.size.y << ' ' << r.box.size.z << ' ' << r.parent << ' '
           << r.creator_item << '\n';
    for (const InternalNode& n : internals_)
        os << "item " << n.box.flb.x << ' ' << n.box.flb.y << ' ' << n.box.flb.z << ' '
           << n.box.size.x << ' ' << n.box.size.y << ' ' << n.box.size.z << ' ' << n.density << ' '
           << n.category << ' ' << n.mass << ' ' << n.source_ems << ' ' << n.parent_item << '\n';
    for (const EmsSpace& e : ems_)
        os << "ems " << e.box.flb.x << ' ' << e.box.flb.y << ' ' << e.box.flb.z << ' '
           << e.box.size.x << ' ' << e.box.size.y << ' ' << e.box.size.z << ' ' << e.arena_idx
           << '\n';
    for (const LeafPlacement& l : leaves_)
        os << "leaf " << l.flb.x << ' ' << l.flb.y << ' ' << l.flb.z << ' ' << l.oriented_size.x
           << ' ' << l.oriented_size.y << ' ' << l.oriented_size.z << ' ' << l.orientation << ' '
           << l.source_ems << '\n';
    return os.str();
}

PackingTree PackingTree::from_text(const std::string& text) {
    std::istringstream is(text);
    std::string kind;
    PackingTree t;
    bool have_bin = false;
    while (is >> kind) {
        if (kind == "bin") {
            Vec3 s;
            std::string mode;
            Scalar step;
            is >> s.x >> s.y >> s.z >> mode >> step;
            t.bin_ = BinSpec(s, mode == "discrete" ? BinMode::Discrete : BinMode::Continuous, step);
            have_bin = true;
        } else if (kind == "tree") {
            std::string sch;
            is >> sch >> t.orientations_;
            t.scheme_ = scheme_from_name(sch);
        } else if (kind == "arena") {
            EmsRecord r;
            is >> r.box.flb.x >> r.box.flb.y >> r.box.flb.z >> r.box.size.x >> r.box.size.y >>
                r.box.size.z >> r.parent >> r.creator_item;
            t.arena_.push_back(r);
        } else if (kind == "item") {
            InternalNode n;
            is >> n.box.flb.x >> n.box.flb.y >> n.box.flb.z >> n.box.size.x >> n.box.size.y >>
                n.box.size.z >> n.density >> n.category >> n.mass >> n.source_ems >> n.parent_item;
            t.internals_.push_back(n);
        } else if (kind == "ems") {
            EmsSpace e;
            is >> e.box.flb.x >> e.box.flb.y >> e.box.flb.z >> e.box.size.x >> e.box.size.y >>
                e.box.size.z >> e.arena_idx;
            t.ems_.push_back(e);
        } else if (kind == "leaf") {
            LeafPlacement l;
            is >> l.flb.x >> l.flb.y >> l.flb.z >> l.oriented_size.x >> l.oriented_size.y >>
                l.oriented_size.z >> l.orientation >> l.source_ems;
            t.leaves_.push_back(l);
        } else {
            throw std::invalid_argument("bad tree record kind: " + kind);
        }
    }
    if (!have_bin) throw std::invalid_argument("tree snapshot missing bin record");
    return t;
}

}  // namespace packtree
