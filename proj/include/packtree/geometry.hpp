#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace packtree {

using Scalar = double;

// Tolerance for coordinate comparisons. Discrete bins use exact arithmetic
// (eps = 0, all coordinates integral); continuous bins use a fixed absolute
// tolerance.
constexpr Scalar kContinuousEps = 1e-9;

inline bool approx_eq(Scalar a, Scalar b, Scalar eps) { return a >= b - eps && a <= b + eps; }
inline bool approx_le(Scalar a, Scalar b, Scalar eps) { return a <= b + eps; }
inline bool approx_ge(Scalar a, Scalar b, Scalar eps) { return a >= b - eps; }
inline bool strictly_less(Scalar a, Scalar b, Scalar eps) { return a < b - eps; }

struct Vec3 {
    Scalar x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    bool operator==(const Vec3& o) const = default;
    Scalar operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
    Scalar& operator[](int axis) { return axis == 0 ? x : axis == 1 ? y : z; }
};

// Axis-aligned cuboid anchored at its front-left-bottom corner.
struct Box3 {
    Vec3 flb;
    Vec3 size;

    Scalar volume() const { return size.x * size.y * size.z; }
    Scalar lo(int axis) const { return flb[axis]; }
    Scalar hi(int axis) const { return flb[axis] + size[axis]; }
    Scalar top() const { return flb.z + size.z; }
    Vec3 center() const { return {flb.x + size.x / 2, flb.y + size.y / 2, flb.z + size.z / 2}; }
    bool valid() const { return size.x > 0 && size.y > 0 && size.z > 0; }
    bool operator==(const Box3& o) const = default;
};

enum class BinMode { Discrete, Continuous };

struct BinSpec {
    Vec3 size;
    BinMode mode = BinMode::Discrete;
    Scalar grid_step = 1.0;

    BinSpec() = default;
    BinSpec(Vec3 s, BinMode m, Scalar step = 1.0) : size(s), mode(m), grid_step(step) {
        if (!(size.x > 0 && size.y > 0 && size.z > 0))
            throw std::invalid_argument("BinSpec: sizes must be strictly positive");
        if (mode == BinMode::Discrete && step <= 0)
            throw std::invalid_argument("BinSpec: grid_step must be positive");
    }

    Scalar eps() const { return mode == BinMode::Discrete ? 0.0 : kContinuousEps; }
    Scalar volume() const { return size.x * size.y * size.z; }
    Box3 as_box() const { return {{0, 0, 0}, size}; }
};

// True iff the open interiors of a and b intersect. Face or edge contact
// does not count as overlap.
bool overlaps(const Box3& a, const Box3& b, Scalar eps = 0.0);

// True iff b lies within the bin: 0 <= p^d and p^d + s^d <= S^d on all axes.
bool contains(const BinSpec& bin, const Box3& b);
bool box_contains(const Box3& outer, const Box3& inner, Scalar eps = 0.0);

// Positive-volume intersection cuboid, or nullopt when interiors are disjoint.
std::optional<Box3> intersect(const Box3& a, const Box3& b, Scalar eps = 0.0);

// ---------------------------------------------------------------------------
// Height field: per-patch maximum top height over the bin floor.

struct HeightField {
    std::vector<Scalar> xs;   // x breakpoints, ascending, first=0 last=Sx
    std::vector<Scalar> ys;   // y breakpoints
    std::vector<Scalar> top;  // (xs-1) x (ys-1) cells, row-major over x

    int nx() const { return static_cast<int>(xs.size()) - 1; }
    int ny() const { return static_cast<int>(ys.size()) - 1; }
    Scalar& cell(int ix, int iy) { return top[static_cast<size_t>(ix) * ny() + iy]; }
    Scalar cell(int ix, int iy) const { return top[static_cast<size_t>(ix) * ny() + iy]; }

    // Height at an interior point (cells are half-open on the high side).
    Scalar at(Scalar x, Scalar y) const;
    Scalar mean() const;       // area-weighted
    Scalar variance() const;   // area-weighted population variance
    Scalar total_volume() const;
};

HeightField heightmap(std::span<const Box3> packed, const BinSpec& bin);

// ---------------------------------------------------------------------------
// 2D feasible-region machinery for one z-plane.

struct Interval {
    Scalar lo = 0, hi = 0;  // closed; lo == hi is a degenerate (point) interval
    bool operator==(const Interval& o) const = default;
};

struct Slab {
    Scalar y0 = 0, y1 = 0;          // closed y-range; y0 == y1 is a degenerate line
    std::vector<Interval> xs;       // disjoint, ascending
    bool operator==(const Slab& o) const = default;
};

// Canonical disjoint decomposition of a rectilinear point set into maximal
// horizontal slabs. Degenerate slabs capture zero-width corridors that arise
// when a footprint fits exactly between obstacles.
class RectRegion2 {
public:
    RectRegion2() = default;
    explicit RectRegion2(std::vector<Slab> slabs, Scalar eps = 0.0);

    bool empty() const { return slabs_.empty(); }
    const std::vector<Slab>& slabs() const { return slabs_; }
    Scalar eps() const { return eps_; }

    bool contains(Scalar x, Scalar y) const;
    Scalar area() const;
    bool operator==(const RectRegion2& o) const;

    // Rebuild the canonical form from the current slabs (union semantics).
    RectRegion2 recanonicalized() const;

private:
    std::vector<Slab> slabs_;
    Scalar eps_ = 0.0;
};

struct Rect2 {
    Scalar x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // closed rectangle, x0<=x1, y0<=y1
};

// Canonical region from a union of closed rectangles.
RectRegion2 make_region(std::span<const Rect2> rects, Scalar eps = 0.0);

// All FLB positions (x, y) where an fx-by-fy footprint fits at one z-plane:
// inside the bin footprint and not overlapping any obstacle footprint.
// Obstacles are the xy footprints of boxes blocking that plane.
RectRegion2 feasible_region_xy(Scalar fx, Scalar fy, std::span<const Rect2> obstacles,
                               Scalar bin_x, Scalar bin_y, Scalar eps = 0.0);

// Convenience wrapper: keeps obstacles whose vertical span covers plane_z.
RectRegion2 feasible_region(Scalar plane_z, Scalar fx, Scalar fy,
                            std::span<const Box3> obstacles, const BinSpec& bin);

struct PlaneVertex {
    Scalar x = 0, y = 0;
    Scalar interior_angle = 0;  // radians; pi/2 for reported convex vertices
    Scalar tightness = 0;       // psi = pi - interior_angle for convex vertices
};

// Boundary vertices with interior angle pi/2 (tightness pi/2). Concave
// vertices and degenerate-feature points carry no normal cone of interest
// here and are not reported.
std::vector<PlaneVertex> convex_vertices(const RectRegion2& region);

// Spanning angle of the normal cone at an arbitrary point (0 when none, or
// when the point is interior). Used by local-optimality property checks.
Scalar tightness_at(const RectRegion2& region, Scalar x, Scalar y);

}  // namespace packtree
