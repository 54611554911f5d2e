#pragma once

#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "packtree/geometry.hpp"

namespace packtree {

// Incoming item descriptor. Density is 1 unless the environment samples one;
// mass is always volume * density.
struct ItemSpec {
    Vec3 size;
    Scalar density = 1.0;
    int category = 0;

    Scalar volume() const { return size.x * size.y * size.z; }
    Scalar mass() const { return volume() * density; }
};

// The six axis-aligned orientations as permutations of (sx, sy, sz).
// Two-orientation settings use indices {0, 1} (identity, swap-x-y).
constexpr int kOrientationTable[6][3] = {
    {0, 1, 2}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1},
};

inline Vec3 oriented_size(const Vec3& s, int orientation) {
    const auto& p = kOrientationTable[orientation];
    return {s[p[0]], s[p[1]], s[p[2]]};
}

enum class Scheme { CornerPoint, ExtremePoint, Ems, EventPoint };

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

struct InternalNode {
    Box3 box;
    Scalar density = 1.0;
    int category = 0;
    Scalar mass = 0;
    int source_ems = -1;   // arena index of the EMS the item was placed into
    int parent_item = -1;  // internal index whose insertion created that EMS
};

struct LeafPlacement {
    Vec3 oriented_size;
    Vec3 flb;
    int orientation = 0;
    int source_ems = -1;  // arena index (EMS/EV bookkeeping; -1 when unknown)

    Box3 box() const { return {flb, oriented_size}; }
    bool operator==(const LeafPlacement& o) const = default;
};

struct EmsSpace {
    Box3 box;
    int arena_idx = 0;
};

// Append-only record of every EMS that ever existed, used to walk the
// split lineage (child EMS boxes are contained in their parents).
struct EmsRecord {
    Box3 box;
    int parent = -1;
    int creator_item = -1;
};

using LeafFilter = std::function<bool(const LeafPlacement&)>;

class PackingTree {
public:
    PackingTree() = default;
    PackingTree(BinSpec bin, Scheme scheme, int orientations);

    const BinSpec& bin() const { return bin_; }
    Scheme scheme() const { return scheme_; }
    int orientations() const { return orientations_; }
    const std::vector<InternalNode>& internals() const { return internals_; }
    const std::vector<EmsSpace>& ems_set() const { return ems_; }
    const std::vector<EmsRecord>& ems_arena() const { return arena_; }
    const std::vector<LeafPlacement>& leaves() const { return leaves_; }

    Scalar packed_volume() const;
    Scalar utilization() const { return packed_volume() / bin_.volume(); }

    // Candidate placements for the item under the configured expansion
    // scheme, restricted to packable ones. An extra filter (stability
    // pre-check in settings 1/3) prunes further when provided.
    std::vector<LeafPlacement> candidates_for(const ItemSpec& item,
                                              const LeafFilter& extra = {}) const;

    // Convenience: recompute and cache the leaf set for the current item.
    const std::vector<LeafPlacement>& refresh_leaves(const ItemSpec& item,
                                                     const LeafFilter& extra = {});

    // Insert the item at the given placement. Re-checks non-overlap and
    // containment and throws std::invalid_argument on violation. Splits
    // every intersecting EMS and prunes dominated spaces.
    void insert(const ItemSpec& item, const LeafPlacement& leaf);

    // Geometric packability (containment + non-overlap) of a placement box.
    bool placement_ok(const Box3& box) const;

    // EMS-item intersection inspections performed by the last insert call.
    int last_split_inspections() const { return last_split_inspections_; }

    std::string to_text() const;
    static PackingTree from_text(const std::string& text);

private:
    BinSpec bin_;
    Scheme scheme_ = Scheme::Ems;
    int orientations_ = 1;
    std::vector<InternalNode> internals_;
    std::vector<EmsSpace> ems_;
    std::vector<EmsRecord> arena_;
    std::vector<LeafPlacement> leaves_;
    int last_split_inspections_ = 0;

    void gen_ems_candidates(const ItemSpec& item, std::vector<LeafPlacement>& out) const;
    void gen_corner_candidates(const ItemSpec& item, std::vector<LeafPlacement>& out) const;
    void gen_extreme_candidates(const ItemSpec& item, std::vector<LeafPlacement>& out) const;
    void gen_event_candidates(const ItemSpec& item, std::vector<LeafPlacement>& out) const;
    std::vector<Scalar> candidate_planes() const;
    std::vector<const InternalNode*> blocking_at(Scalar z) const;
};

// Uniformly random subset of at most max_len leaves; identity when the set
// already fits. Deterministic for a fixed generator state.
std::vector<LeafPlacement> intercept_leaves(const std::vector<LeafPlacement>& leaves,
                                            int max_len, std::mt19937_64& rng);

}  // namespace packtree
