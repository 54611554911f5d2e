#include "packtree/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace packtree::verify {

std::vector<Box3> voxel_maximal_empty_boxes(std::span<const Box3> occupied, const BinSpec& bin) {
    const int X = static_cast<int>(std::llround(bin.size.x));
    const int Y = static_cast<int>(std::llround(bin.size.y));
    const int Z = static_cast<int>(std::llround(bin.size.z));
    // occupancy prefix sums over unit voxels
    std::vector<int> pre(static_cast<size_t>(X + 1) * (Y + 1) * (Z + 1), 0);
    auto P = [&](int x, int y, int z) -> int& {
        return pre[(static_cast<size_t>(x) * (Y + 1) + y) * (Z + 1) + z];
    };
    for (int x = 1; x <= X; ++x)
        for (int y = 1; y <= Y; ++y)
            for (int z = 1; z <= Z; ++z) {
                int occ = 0;
                const Scalar cx = x - 0.5, cy = y - 0.5, cz = z - 0.5;
                for (const Box3& b : occupied)
                    if (cx > b.lo(0) && cx < b.hi(0) && cy > b.lo(1) && cy < b.hi(1) &&
                        cz > b.lo(2) && cz < b.hi(2)) {
                        occ = 1;
                        break;
                    }
                P(x, y, z) = occ + P(x - 1, y, z) + P(x, y - 1, z) + P(x, y, z - 1) -
                             P(x - 1, y - 1, z) - P(x - 1, y, z - 1) - P(x, y - 1, z - 1) +
                             P(x - 1, y - 1, z - 1);
            }
    auto count = [&](int x0, int y0, int z0, int x1, int y1, int z1) {
        return P(x1, y1, z1) - P(x0, y1, z1) - P(x1, y0, z1) - P(x1, y1, z0) + P(x0, y0, z1) +
               P(x0, y1, z0) + P(x1, y0, z0) - P(x0, y0, z0);
    };
    std::vector<Box3> out;
    for (int x0 = 0; x0 < X; ++x0)
        for (int x1 = x0 + 1; x1 <= X; ++x1)
            for (int y0 = 0; y0 < Y; ++y0)
                for (int y1 = y0 + 1; y1 <= Y; ++y1)
                    for (int z0 = 0; z0 < Z; ++z0)
                        for (int z1 = z0 + 1; z1 <= Z; ++z1) {
                            if (count(x0, y0, z0, x1, y1, z1) != 0) continue;
                            // maximal: no 1-voxel extension stays empty
                            if (x0 > 0 && count(x0 - 1, y0, z0, x0, y1, z1) == 0) continue;
                            if (x1 < X && count(x1, y0, z0, x1 + 1, y1, z1) == 0) continue;
                            if (y0 > 0 && count(x0, y0 - 1, z0, x1, y0, z1) == 0) continue;
                            if (y1 < Y && count(x0, y1, z0, x1, y1 + 1, z1) == 0) continue;
                            if (z0 > 0 && count(x0, y0, z0 - 1, x1, y1, z0) == 0) continue;
                            if (z1 < Z && count(x0, y0, z1, x1, y1, z1 + 1) == 0) continue;
                            out.push_back({{static_cast<Scalar>(x0), static_cast<Scalar>(y0),
                                            static_cast<Scalar>(z0)},
                                           {static_cast<Scalar>(x1 - x0),
                                            static_cast<Scalar>(y1 - y0),
                                            static_cast<Scalar>(z1 - z0)}});
                        }
    return out;
}

std::set<std::pair<int, int>> grid_feasible_positions(int fx, int fy,
                                                      std::span<const Rect2> obstacles,
                                                      int bin_x, int bin_y) {
    std::set<std::pair<int, int>> out;
    for (int x = 0; x + fx <= bin_x; ++x)
        for (int y = 0; y + fy <= bin_y; ++y) {
            bool ok = true;
            for (const Rect2& o : obstacles) {
                if (x < o.x1 && x + fx > o.x0 && y < o.y1 && y + fy > o.y0) {
                    ok = false;
                    break;
                }
            }
            if (ok) out.insert({x, y});
        }
    return out;
}

bool point_strictly_in_hull(Scalar px, Scalar py,
                            std::span<const std::pair<Scalar, Scalar>> pts) {
    if (pts.size() < 3) return false;
    // p is strictly inside conv(S) iff no line through two points of S (or
    // any direction through p) has all of S weakly on one side with p on the
    // line or on the other side.
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const Scalar ax = pts[i].first, ay = pts[i].second;
            const Scalar dx = pts[j].first - ax, dy = pts[j].second - ay;
            if (dx == 0 && dy == 0) continue;
            bool all_right = true;
            for (size_t k = 0; k < n && all_right; ++k) {
                const Scalar c = dx * (pts[k].second - ay) - dy * (pts[k].first - ax);
                if (c > 0) all_right = false;
            }
            if (!all_right) continue;
            const Scalar cp = dx * (py - ay) - dy * (px - ax);
            if (cp >= 0) return false;  // p on or outside a supporting line
        }
    // degenerate hulls (all points collinear) have no strict interior
    bool collinear = true;
    for (size_t k = 2; k < n && collinear; ++k) {
        const Scalar c = (pts[1].first - pts[0].first) * (pts[k].second - pts[0].second) -
                         (pts[1].second - pts[0].second) * (pts[k].first - pts[0].first);
        if (c != 0) collinear = false;
    }
    return !collinear;
}

std::vector<std::vector<Scalar>> rasterize_heights(std::span<const Box3> packed,
                                                   const BinSpec& bin) {
    const int X = static_cast<int>(std::llround(bin.size.x));
    const int Y = static_cast<int>(std::llround(bin.size.y));
    std::vector<std::vector<Scalar>> h(X, std::vector<Scalar>(Y, 0));
    for (int x = 0; x < X; ++x)
        for (int y = 0; y < Y; ++y) {
            const Scalar cx = x + 0.5, cy = y + 0.5;
            for (const Box3& b : packed)
                if (cx > b.lo(0) && cx < b.hi(0) && cy > b.lo(1) && cy < b.hi(1))
                    h[x][y] = std::max(h[x][y], b.top());
        }
    return h;
}

std::vector<LeafPlacement> scan_event_candidates(const PackingTree& tree, const ItemSpec& item) {
    const BinSpec& bin = tree.bin();
    std::vector<LeafPlacement> out;
    // resting planes: floor and item tops
    std::set<Scalar> zs{0};
    for (const InternalNode& n : tree.internals()) {
        if (n.box.top() < bin.size.z) zs.insert(n.box.top());
    }
    for (Scalar z : zs) {
        for (int o = 0; o < tree.orientations(); ++o) {
            const Vec3 s = oriented_size(item.size, o);
            // boundary values of items sharing heights with the placement span
            std::set<Scalar> xb{0, bin.size.x}, yb{0, bin.size.y};
            for (const InternalNode& n : tree.internals())
                if (n.box.lo(2) < z + s.z && n.box.hi(2) > z) {
                    xb.insert(n.box.lo(0));
                    xb.insert(n.box.hi(0));
                    yb.insert(n.box.lo(1));
                    yb.insert(n.box.hi(1));
                }
            // full scan over every position; keep event intersections
            for (Scalar x = 0; x + s.x <= bin.size.x; x += 1)
                for (Scalar y = 0; y + s.y <= bin.size.y; y += 1) {
                    const bool xe = xb.count(x) || xb.count(x + s.x);
                    const bool ye = yb.count(y) || yb.count(y + s.y);
                    if (!xe || !ye) continue;
                    const Box3 box{{x, y, z}, s};
                    if (!tree.placement_ok(box)) continue;
                    out.push_back({s, {x, y, z}, o, -1});
                }
        }
    }
    return out;
}

std::vector<Box3> sorted_boxes(std::vector<Box3> boxes) {
    std::sort(boxes.begin(), boxes.end(), [](const Box3& a, const Box3& b) {
        const auto ka = std::array{a.flb.x, a.flb.y, a.flb.z, a.size.x, a.size.y, a.size.z};
        const auto kb = std::array{b.flb.x, b.flb.y, b.flb.z, b.size.x, b.size.y, b.size.z};
        return ka < kb;
    });
    return boxes;
}

bool same_box_set(std::vector<Box3> a, std::vector<Box3> b, Scalar eps) {
    if (a.size() != b.size()) return false;
    a = sorted_boxes(std::move(a));
    b = sorted_boxes(std::move(b));
    for (size_t i = 0; i < a.size(); ++i) {
        for (int d = 0; d < 3; ++d) {
            if (!approx_eq(a[i].lo(d), b[i].lo(d), eps)) return false;
            if (!approx_eq(a[i].size[d], b[i].size[d], eps)) return false;
        }
    }
    return true;
}

}  // namespace packtree::verify
