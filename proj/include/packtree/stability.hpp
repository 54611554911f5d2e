#pragma once

#include <vector>

#include "packtree/geometry.hpp"
#include "packtree/pct.hpp"

namespace packtree {

struct ContactRect {
    int supporter = -1;  // internal-node index, -1 for the bin floor
    Rect2 rect;
};

struct SupportReport {
    bool stable = false;
    Scalar support_ratio = 0;  // supported fraction of the footprint area
    std::vector<ContactRect> contacts;
};

// Quasi-static feasibility of a placement: the item rests on the floor, or
// its center of mass projects strictly inside the convex hull of the union
// of its top-contact rectangles, and every support ancestor remains stable
// with the transmitted weight accounted for.
SupportReport check_stable(const PackingTree& tree, const Box3& placement, Scalar mass);

struct BearingReport {
    std::vector<Scalar> item_load;  // own mass plus weight received from above
    std::vector<Scalar> floor_load; // share of each floor-resting item's load
    Scalar floor_total = 0;
    Scalar mass_total = 0;
};

// Analytic load propagation: each item passes its full load to its
// supporters proportionally to contact area; the floor absorbs the rest.
// Internally computed in fixed-point so that floor_total == mass_total holds
// exactly.
BearingReport bearing_forces(const PackingTree& tree);

// Contact rectangles supporting `box` at its bottom plane (positive area,
// supporter top coincides with the box bottom within tolerance).
std::vector<ContactRect> support_contacts(const PackingTree& tree, const Box3& box);

}  // namespace packtree
