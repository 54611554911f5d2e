#include "packtree/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace packtree {

bool overlaps(const Box3& a, const Box3& b, Scalar eps) {
    for (int d = 0; d < 3; ++d) {
        const Scalar lo = std::max(a.lo(d), b.lo(d));
        const Scalar hi = std::min(a.hi(d), b.hi(d));
        if (hi - lo <= eps) return false;
    }
    return true;
}

bool contains(const BinSpec& bin, const Box3& b) {
    const Scalar eps = bin.eps();
    for (int d = 0; d < 3; ++d) {
        if (b.lo(d) < -eps) return false;
        if (b.hi(d) > bin.size[d] + eps) return false;
    }
    return true;
}

bool box_contains(const Box3& outer, const Box3& inner, Scalar eps) {
    for (int d = 0; d < 3; ++d) {
        if (inner.lo(d) < outer.lo(d) - eps) return false;
        if (inner.hi(d) > outer.hi(d) + eps) return false;
    }
    return true;
}

std::optional<Box3> intersect(const Box3& a, const Box3& b, Scalar eps) {
    Box3 r;
    for (int d = 0; d < 3; ++d) {
        const Scalar lo = std::max(a.lo(d), b.lo(d));
        const Scalar hi = std::min(a.hi(d), b.hi(d));
        if (hi - lo <= eps) return std::nullopt;
        r.flb[d] = lo;
        r.size[d] = hi - lo;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Height field

namespace {

std::vector<Scalar> snap_unique(std::vector<Scalar> vals, Scalar eps) {
    std::sort(vals.begin(), vals.end());
    std::vector<Scalar> out;
    for (Scalar v : vals) {
        if (out.empty() || v - out.back() > eps) out.push_back(v);
    }
    return out;
}

// Index of the lattice value matching v (within eps).
int snap_index(const std::vector<Scalar>& lattice, Scalar v, Scalar eps) {
    auto it = std::lower_bound(lattice.begin(), lattice.end(), v - eps);
    return static_cast<int>(it - lattice.begin());
}

}  // namespace

Scalar HeightField::at(Scalar x, Scalar y) const {
    auto locate = [](const std::vector<Scalar>& bp, Scalar v) {
        auto it = std::upper_bound(bp.begin(), bp.end(), v);
        int i = static_cast<int>(it - bp.begin()) - 1;
        return std::clamp(i, 0, static_cast<int>(bp.size()) - 2);
    };
    return cell(locate(xs, x), locate(ys, y));
}

Scalar HeightField::mean() const {
    Scalar s = 0, area = 0;
    for (int ix = 0; ix < nx(); ++ix)
        for (int iy = 0; iy < ny(); ++iy) {
            const Scalar a = (xs[ix + 1] - xs[ix]) * (ys[iy + 1] - ys[iy]);
            s += cell(ix, iy) * a;
            area += a;
        }
    return area > 0 ? s / area : 0;
}

Scalar HeightField::variance() const {
    const Scalar m = mean();
    Scalar s = 0, area = 0;
    for (int ix = 0; ix < nx(); ++ix)
        for (int iy = 0; iy < ny(); ++iy) {
            const Scalar a = (xs[ix + 1] - xs[ix]) * (ys[iy + 1] - ys[iy]);
            const Scalar d = cell(ix, iy) - m;
            s += d * d * a;
            area += a;
        }
    return area > 0 ? s / area : 0;
}

Scalar HeightField::total_volume() const {
    Scalar s = 0;
    for (int ix = 0; ix < nx(); ++ix)
        for (int iy = 0; iy < ny(); ++iy)
            s += cell(ix, iy) * (xs[ix + 1] - xs[ix]) * (ys[iy + 1] - ys[iy]);
    return s;
}

HeightField heightmap(std::span<const Box3> packed, const BinSpec& bin) {
    const Scalar eps = bin.eps();
    std::vector<Scalar> xv{0, bin.size.x}, yv{0, bin.size.y};
    for (const Box3& b : packed) {
        xv.push_back(b.lo(0));
        xv.push_back(b.hi(0));
        yv.push_back(b.lo(1));
        yv.push_back(b.hi(1));
    }
    HeightField hf;
    hf.xs = snap_unique(std::move(xv), eps);
    hf.ys = snap_unique(std::move(yv), eps);
    hf.top.assign(static_cast<size_t>(hf.nx()) * hf.ny(), 0.0);
    for (const Box3& b : packed) {
        const int x0 = snap_index(hf.xs, b.lo(0), eps);
        const int x1 = snap_index(hf.xs, b.hi(0), eps);
        const int y0 = snap_index(hf.ys, b.lo(1), eps);
        const int y1 = snap_index(hf.ys, b.hi(1), eps);
        for (int ix = x0; ix < x1; ++ix)
            for (int iy = y0; iy < y1; ++iy)
                hf.cell(ix, iy) = std::max(hf.cell(ix, iy), b.top());
    }
    return hf;
}

// ---------------------------------------------------------------------------
// Rectilinear region sweep

namespace {

using Intervals = std::vector<Interval>;

// Union of closed intervals, merged when touching or overlapping.
Intervals merge_closed(Intervals in, Scalar eps) {
    std::sort(in.begin(), in.end(), [](const Interval& a, const Interval& b) {
        return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
    });
    Intervals out;
    for (const Interval& iv : in) {
        if (!out.empty() && iv.lo <= out.back().hi + eps)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}

// Complement of a union of OPEN intervals within the closed span [x0, x1].
// Touching open intervals leave a degenerate point between them.
Intervals open_complement(Intervals holes, Scalar x0, Scalar x1, Scalar eps) {
    if (x1 < x0) return {};
    // merge open intervals: only strict overlap merges
    std::sort(holes.begin(), holes.end(), [](const Interval& a, const Interval& b) {
        return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
    });
    Intervals merged;
    for (const Interval& h : holes) {
        if (h.hi - h.lo <= eps) continue;  // empty open interval
        if (!merged.empty() && h.lo < merged.back().hi - eps)
            merged.back().hi = std::max(merged.back().hi, h.hi);
        else
            merged.push_back(h);
    }
    Intervals out;
    Scalar cur = x0;
    bool done = false;
    for (const Interval& h : merged) {
        if (h.hi <= cur + eps) continue;
        if (h.lo >= cur - eps) {
            const Scalar piece_hi = std::min(h.lo, x1);
            if (piece_hi >= cur - eps) out.push_back({cur, std::max(cur, piece_hi)});
        }
        cur = std::max(cur, h.hi);
        if (cur > x1 + eps) {
            done = true;
            break;
        }
    }
    if (!done && cur <= x1 + eps) out.push_back({cur, std::max(cur, x1)});
    return out;
}

bool intervals_equal(const Intervals& a, const Intervals& b, Scalar eps) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!approx_eq(a[i].lo, b[i].lo, eps) || !approx_eq(a[i].hi, b[i].hi, eps)) return false;
    return true;
}

bool intervals_cover_point(const Intervals& xs, Scalar x, Scalar eps) {
    for (const Interval& iv : xs)
        if (x >= iv.lo - eps && x <= iv.hi + eps) return true;
    return false;
}

// Does the interval set cover a small segment to the right (dir=+1) or left
// (dir=-1) of x?
bool intervals_cover_germ(const Intervals& xs, Scalar x, int dir, Scalar eps) {
    for (const Interval& iv : xs) {
        if (dir > 0 && iv.lo <= x + eps && iv.hi > x + eps) return true;
        if (dir < 0 && iv.lo < x - eps && iv.hi >= x - eps) return true;
    }
    return false;
}

// Probe callback: given (y_lo, y_hi) with y_lo == y_hi meaning the point
// probe at that y, return the x-interval set there.
template <typename Probe>
std::vector<Slab> sweep_slabs(const std::vector<Scalar>& ybp, Probe&& probe, Scalar eps) {
    std::vector<Slab> slabs;
    const int k = static_cast<int>(ybp.size());
    if (k == 0) return slabs;
    if (k == 1) {
        Intervals xs = probe(ybp[0], ybp[0]);
        if (!xs.empty()) slabs.push_back({ybp[0], ybp[0], std::move(xs)});
        return slabs;
    }
    std::vector<Intervals> open_xs(k - 1), point_xs(k);
    for (int i = 0; i + 1 < k; ++i) open_xs[i] = probe(ybp[i], ybp[i + 1]);
    for (int i = 0; i < k; ++i) point_xs[i] = probe(ybp[i], ybp[i]);

    // maximal groups of equal consecutive bands
    int i = 0;
    while (i + 1 < k) {
        int j = i;
        while (j + 2 < k && intervals_equal(point_xs[j + 1], open_xs[i], eps) &&
               intervals_equal(open_xs[j + 1], open_xs[i], eps))
            ++j;
        if (!open_xs[i].empty()) slabs.push_back({ybp[i], ybp[j + 1], open_xs[i]});
        i = j + 1;
    }
    // degenerate lines wherever the point set exceeds what slabs already cover
    std::vector<Slab> extra;
    for (int c = 0; c < k; ++c) {
        if (point_xs[c].empty()) continue;
        Intervals covered;
        for (const Slab& s : slabs)
            if (s.y0 <= ybp[c] + eps && s.y1 >= ybp[c] - eps)
                covered.insert(covered.end(), s.xs.begin(), s.xs.end());
        covered = merge_closed(std::move(covered), eps);
        if (!intervals_equal(covered, point_xs[c], eps))
            extra.push_back({ybp[c], ybp[c], point_xs[c]});
    }
    slabs.insert(slabs.end(), extra.begin(), extra.end());
    std::sort(slabs.begin(), slabs.end(), [](const Slab& a, const Slab& b) {
        return a.y0 < b.y0 || (a.y0 == b.y0 && a.y1 < b.y1);
    });
    return slabs;
}

}  // namespace

RectRegion2::RectRegion2(std::vector<Slab> slabs, Scalar eps) : slabs_(std::move(slabs)), eps_(eps) {}

bool RectRegion2::contains(Scalar x, Scalar y) const {
    for (const Slab& s : slabs_) {
        if (y < s.y0 - eps_ || y > s.y1 + eps_) continue;
        if (intervals_cover_point(s.xs, x, eps_)) return true;
    }
    return false;
}

Scalar RectRegion2::area() const {
    Scalar a = 0;
    for (const Slab& s : slabs_)
        for (const Interval& iv : s.xs) a += (s.y1 - s.y0) * (iv.hi - iv.lo);
    return a;
}

bool RectRegion2::operator==(const RectRegion2& o) const {
    if (slabs_.size() != o.slabs_.size()) return false;
    const Scalar eps = std::max(eps_, o.eps_);
    for (size_t i = 0; i < slabs_.size(); ++i) {
        if (!approx_eq(slabs_[i].y0, o.slabs_[i].y0, eps)) return false;
        if (!approx_eq(slabs_[i].y1, o.slabs_[i].y1, eps)) return false;
        if (!intervals_equal(slabs_[i].xs, o.slabs_[i].xs, eps)) return false;
    }
    return true;
}

RectRegion2 RectRegion2::recanonicalized() const {
    std::vector<Rect2> rects;
    for (const Slab& s : slabs_)
        for (const Interval& iv : s.xs) rects.push_back({iv.lo, s.y0, iv.hi, s.y1});
    return make_region(rects, eps_);
}

RectRegion2 make_region(std::span<const Rect2> rects, Scalar eps) {
    if (rects.empty()) return RectRegion2({}, eps);
    std::vector<Scalar> yv;
    for (const Rect2& r : rects) {
        yv.push_back(r.y0);
        yv.push_back(r.y1);
    }
    const std::vector<Scalar> ybp = snap_unique(std::move(yv), eps);
    auto probe = [&](Scalar ylo, Scalar yhi) {
        Intervals xs;
        for (const Rect2& r : rects) {
            const bool active = (ylo == yhi) ? (r.y0 <= ylo + eps && r.y1 >= ylo - eps)
                                             : (r.y0 <= ylo + eps && r.y1 >= yhi - eps);
            if (active) xs.push_back({r.x0, r.x1});
        }
        return merge_closed(std::move(xs), eps);
    };
    return RectRegion2(sweep_slabs(ybp, probe, eps), eps);
}

RectRegion2 feasible_region_xy(Scalar fx, Scalar fy, std::span<const Rect2> obstacles,
                               Scalar bin_x, Scalar bin_y, Scalar eps) {
    const Scalar X1 = bin_x - fx, Y1 = bin_y - fy;
    if (X1 < -eps || Y1 < -eps) return RectRegion2({}, eps);

    struct Hole {
        Scalar x0, y0, x1, y1;  // open rectangle of blocked FLB positions
    };
    std::vector<Hole> holes;
    holes.reserve(obstacles.size());
    std::vector<Scalar> yv{0, std::max<Scalar>(0, Y1)};
    for (const Rect2& o : obstacles) {
        Hole h{o.x0 - fx, o.y0 - fy, o.x1, o.y1};
        holes.push_back(h);
        yv.push_back(std::clamp<Scalar>(h.y0, 0, Y1));
        yv.push_back(std::clamp<Scalar>(h.y1, 0, Y1));
    }
    const std::vector<Scalar> ybp = snap_unique(std::move(yv), eps);
    auto probe = [&](Scalar ylo, Scalar yhi) {
        Intervals open;
        for (const Hole& h : holes) {
            const bool active = (ylo == yhi) ? (h.y0 < ylo - eps && h.y1 > ylo + eps)
                                             : (h.y0 < yhi - eps && h.y1 > ylo + eps);
            if (active) open.push_back({h.x0, h.x1});
        }
        return open_complement(std::move(open), 0, std::max<Scalar>(0, X1), eps);
    };
    return RectRegion2(sweep_slabs(ybp, probe, eps), eps);
}

RectRegion2 feasible_region(Scalar plane_z, Scalar fx, Scalar fy,
                            std::span<const Box3> obstacles, const BinSpec& bin) {
    const Scalar eps = bin.eps();
    std::vector<Rect2> rects;
    for (const Box3& b : obstacles) {
        if (b.lo(2) <= plane_z + eps && b.hi(2) > plane_z + eps)
            rects.push_back({b.lo(0), b.lo(1), b.hi(0), b.hi(1)});
    }
    return feasible_region_xy(fx, fy, rects, bin.size.x, bin.size.y, eps);
}

// ---------------------------------------------------------------------------
// Vertex extraction

namespace {

struct LocalProbe {
    bool member = false;
    bool quad[2][2] = {{false, false}, {false, false}};  // [x>0][y>0]
    bool germ_xp = false, germ_xm = false, germ_yp = false, germ_ym = false;
};

LocalProbe probe_point(const RectRegion2& region, Scalar x, Scalar y) {
    const Scalar eps = region.eps();
    Intervals at, above, below;
    for (const Slab& s : region.slabs()) {
        const bool covers_at = s.y0 <= y + eps && s.y1 >= y - eps;
        const bool covers_above = s.y0 <= y + eps && s.y1 > y + eps;
        const bool covers_below = s.y0 < y - eps && s.y1 >= y - eps;
        if (covers_at) at.insert(at.end(), s.xs.begin(), s.xs.end());
        if (covers_above) above.insert(above.end(), s.xs.begin(), s.xs.end());
        if (covers_below) below.insert(below.end(), s.xs.begin(), s.xs.end());
    }
    at = merge_closed(std::move(at), eps);
    above = merge_closed(std::move(above), eps);
    below = merge_closed(std::move(below), eps);

    LocalProbe p;
    p.member = intervals_cover_point(at, x, eps);
    p.quad[1][1] = intervals_cover_germ(above, x, +1, eps);
    p.quad[0][1] = intervals_cover_germ(above, x, -1, eps);
    p.quad[1][0] = intervals_cover_germ(below, x, +1, eps);
    p.quad[0][0] = intervals_cover_germ(below, x, -1, eps);
    p.germ_xp = intervals_cover_germ(at, x, +1, eps);
    p.germ_xm = intervals_cover_germ(at, x, -1, eps);
    p.germ_yp = intervals_cover_point(above, x, eps);
    p.germ_ym = intervals_cover_point(below, x, eps);
    return p;
}

}  // namespace

std::vector<PlaneVertex> convex_vertices(const RectRegion2& region) {
    const Scalar eps = region.eps();
    std::vector<Scalar> xv, yv;
    for (const Slab& s : region.slabs()) {
        yv.push_back(s.y0);
        yv.push_back(s.y1);
        for (const Interval& iv : s.xs) {
            xv.push_back(iv.lo);
            xv.push_back(iv.hi);
        }
    }
    const std::vector<Scalar> xbp = snap_unique(std::move(xv), eps);
    const std::vector<Scalar> ybp = snap_unique(std::move(yv), eps);

    std::vector<PlaneVertex> out;
    for (Scalar y : ybp)
        for (Scalar x : xbp) {
            const LocalProbe p = probe_point(region, x, y);
            if (!p.member) continue;
            const int nq = p.quad[0][0] + p.quad[0][1] + p.quad[1][0] + p.quad[1][1];
            if (nq != 1) continue;
            // the two germs bounding the occupied quadrant, and nothing else
            const bool xp = p.quad[1][0] || p.quad[1][1];
            const bool yp = p.quad[0][1] || p.quad[1][1];
            if (p.germ_xp != xp || p.germ_xm != !xp) continue;
            if (p.germ_yp != yp || p.germ_ym != !yp) continue;
            out.push_back({x, y, std::numbers::pi / 2, std::numbers::pi / 2});
        }
    return out;
}

Scalar tightness_at(const RectRegion2& region, Scalar x, Scalar y) {
    const LocalProbe p = probe_point(region, x, y);
    if (!p.member) return 0;
    // Constraints on normal-cone direction components: -1 => d <= 0,
    // +1 => d >= 0, 0 => unconstrained, 2 => pinned to zero.
    int cx = 0, cy = 0;
    auto add = [](int& c, int sign) {
        if (c == 0)
            c = sign;
        else if (c != sign)
            c = 2;
    };
    for (int qx = 0; qx < 2; ++qx)
        for (int qy = 0; qy < 2; ++qy)
            if (p.quad[qx][qy]) {
                add(cx, qx ? -1 : +1);
                add(cy, qy ? -1 : +1);
            }
    if (p.germ_xp) add(cx, -1);
    if (p.germ_xm) add(cx, +1);
    if (p.germ_yp) add(cy, -1);
    if (p.germ_ym) add(cy, +1);

    const bool x_free = cx == 0, y_free = cy == 0;
    const bool x_pinned = cx == 2, y_pinned = cy == 2;
    if (x_free && y_free) return 2 * std::numbers::pi;  // isolated point
    if (x_pinned && y_pinned) return 0;                 // pinch / concave
    if (x_pinned || y_pinned) {
        // a line if the other axis is free, otherwise a single ray
        return (x_free || y_free) ? std::numbers::pi : 0;
    }
    if (x_free || y_free) return std::numbers::pi;  // half-plane
    return std::numbers::pi / 2;                    // quarter-plane
}

}  // namespace packtree
