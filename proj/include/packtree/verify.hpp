#pragma once

// Brute-force reference implementations used by the test suites and the
// `verify` subcommand. Everything here recomputes results from first
// principles and stays independent of the incremental code paths it checks.

#include <cstdint>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "packtree/geometry.hpp"
#include "packtree/pct.hpp"

namespace packtree::verify {

// All maximal empty boxes of a unit-voxel occupancy grid. Discrete bins only.
std::vector<Box3> voxel_maximal_empty_boxes(std::span<const Box3> occupied, const BinSpec& bin);

// Integer FLB positions where an fx-by-fy footprint fits without overlapping
// any obstacle footprint, scanned exhaustively.
std::set<std::pair<int, int>> grid_feasible_positions(int fx, int fy,
                                                      std::span<const Rect2> obstacles,
                                                      int bin_x, int bin_y);

// Strict interior test for a point against the convex hull of a point set,
// decided by exhaustive separating-line search over all point pairs.
bool point_strictly_in_hull(Scalar px, Scalar py,
                            std::span<const std::pair<Scalar, Scalar>> pts);

// Per-voxel-cell top heights (discrete bins, unit cells).
std::vector<std::vector<Scalar>> rasterize_heights(std::span<const Box3> packed,
                                                   const BinSpec& bin);

// Event-point candidate enumeration by full-coordinate scan: every integer
// position whose x/y lie on start/end-aligned boundary values and whose z is
// a resting plane, filtered to packable placements.
std::vector<LeafPlacement> scan_event_candidates(const PackingTree& tree, const ItemSpec& item);

// Sorted boxes for order-insensitive set comparison.
std::vector<Box3> sorted_boxes(std::vector<Box3> boxes);
bool same_box_set(std::vector<Box3> a, std::vector<Box3> b, Scalar eps);

}  // namespace packtree::verify
