#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "packtree/geometry.hpp"
#include "packtree/verify.hpp"

using namespace packtree;

namespace {
Box3 box(Scalar x, Scalar y, Scalar z, Scalar sx, Scalar sy, Scalar sz) {
    return {{x, y, z}, {sx, sy, sz}};
}
}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("overlaps: interiors, contact, disjoint") {
    CHECK(overlaps(box(0, 0, 0, 2, 2, 2), box(1, 1, 1, 2, 2, 2)));
    CHECK_FALSE(overlaps(box(0, 0, 0, 2, 2, 2), box(2, 0, 0, 2, 2, 2)));
    CHECK_FALSE(overlaps(box(0, 0, 0, 5, 5, 5), box(6, 6, 6, 1, 1, 1)));
}

TEST_CASE("overlaps: symmetric and reflexive on positive volume") {
    std::mt19937_64 rng(7);
    auto rnd = [&](Scalar lo, Scalar hi) {
        return lo + (hi - lo) * std::uniform_real_distribution<Scalar>(0, 1)(rng);
    };
    for (int t = 0; t < 200; ++t) {
        Box3 a = box(rnd(0, 8), rnd(0, 8), rnd(0, 8), rnd(0.1, 3), rnd(0.1, 3), rnd(0.1, 3));
        Box3 b = box(rnd(0, 8), rnd(0, 8), rnd(0, 8), rnd(0.1, 3), rnd(0.1, 3), rnd(0.1, 3));
        CHECK(overlaps(a, b) == overlaps(b, a));
        CHECK(overlaps(a, a));
    }
}

TEST_CASE("contains: boundary and overflow") {
    BinSpec bin({10, 10, 10}, BinMode::Discrete);
    CHECK(contains(bin, box(8, 8, 8, 2, 2, 2)));
    CHECK_FALSE(contains(bin, box(9, 9, 9, 2, 2, 2)));
    CHECK(contains(bin, box(0, 0, 0, 10, 10, 10)));
}

TEST_CASE("intersect: partial, touching, nested") {
    auto r = intersect(box(0, 0, 0, 4, 4, 4), box(2, 2, 2, 4, 4, 4));
    REQUIRE(r.has_value());
    CHECK(*r == box(2, 2, 2, 2, 2, 2));
    CHECK_FALSE(intersect(box(0, 0, 0, 2, 2, 2), box(2, 0, 0, 2, 2, 2)).has_value());
    auto inner = intersect(box(0, 0, 0, 6, 6, 6), box(1, 1, 1, 2, 2, 2));
    REQUIRE(inner.has_value());
    CHECK(*inner == box(1, 1, 1, 2, 2, 2));
}

TEST_CASE("heightmap: empty bin and single box") {
    BinSpec bin({10, 10, 10}, BinMode::Discrete);
    auto hf0 = heightmap({}, bin);
    CHECK(hf0.variance() == 0);
    CHECK(hf0.mean() == 0);

    std::vector<Box3> one{box(0, 0, 0, 3, 3, 2)};
    auto hf = heightmap(one, bin);
    CHECK(hf.at(1.5, 1.5) == 2);
    CHECK(hf.at(5, 5) == 0);
    CHECK(hf.total_volume() == doctest::Approx(3 * 3 * 2));
}

TEST_CASE("heightmap matches voxel rasterization on random stacks") {
    BinSpec bin({10, 10, 10}, BinMode::Discrete);
    std::mt19937_64 rng(11);
    for (int t = 0; t < 30; ++t) {
        std::vector<Box3> boxes;
        for (int i = 0; i < 6; ++i) {
            const int sx = 1 + static_cast<int>(rng() % 5), sy = 1 + static_cast<int>(rng() % 5),
                      sz = 1 + static_cast<int>(rng() % 5);
            const int x = static_cast<int>(rng() % (11 - sx)), y = static_cast<int>(rng() % (11 - sy)),
                      z = static_cast<int>(rng() % (11 - sz));
            boxes.push_back(box(x, y, z, sx, sy, sz));
        }
        auto hf = heightmap(boxes, bin);
        auto ref = verify::rasterize_heights(boxes, bin);
        for (int x = 0; x < 10; ++x)
            for (int y = 0; y < 10; ++y) CHECK(hf.at(x + 0.5, y + 0.5) == ref[x][y]);
    }
}

TEST_CASE("heightmap is monotone under box insertion") {
    BinSpec bin({10, 10, 10}, BinMode::Discrete);
    std::mt19937_64 rng(13);
    std::vector<Box3> boxes;
    auto snapshot = heightmap(boxes, bin);
    for (int i = 0; i < 12; ++i) {
        const int sx = 1 + static_cast<int>(rng() % 4), sy = 1 + static_cast<int>(rng() % 4),
                  sz = 1 + static_cast<int>(rng() % 4);
        boxes.push_back(box(static_cast<int>(rng() % (11 - sx)), static_cast<int>(rng() % (11 - sy)),
                            static_cast<int>(rng() % (11 - sz)), sx, sy, sz));
        auto next = heightmap(boxes, bin);
        for (int x = 0; x < 10; ++x)
            for (int y = 0; y < 10; ++y)
                CHECK(next.at(x + 0.5, y + 0.5) >= snapshot.at(x + 0.5, y + 0.5));
        snapshot = next;
    }
}

TEST_CASE("feasible_region: empty plane and oversized footprint") {
    RectRegion2 free = feasible_region_xy(3, 3, {}, 10, 10);
    REQUIRE(free.slabs().size() == 1);
    CHECK(free.slabs()[0].y0 == 0);
    CHECK(free.slabs()[0].y1 == 7);
    REQUIRE(free.slabs()[0].xs.size() == 1);
    CHECK(free.slabs()[0].xs[0] == Interval{0, 7});

    CHECK(feasible_region_xy(3, 3, {}, 2, 2).empty());
}

TEST_CASE("feasible_region equals brute-force scan") {
    SUBCASE("single obstacle at origin") {
        std::vector<Rect2> obs{{0, 0, 4, 4}};
        RectRegion2 r = feasible_region_xy(3, 3, obs, 10, 10);
        auto ref = verify::grid_feasible_positions(3, 3, obs, 10, 10);
        for (int x = 0; x <= 10; ++x)
            for (int y = 0; y <= 10; ++y)
                CHECK(r.contains(x, y) == (ref.count({x, y}) > 0));
    }
    SUBCASE("random obstacle sets") {
        std::mt19937_64 rng(23);
        for (int t = 0; t < 50; ++t) {
            std::vector<Rect2> obs;
            for (int i = 0; i < 4; ++i) {
                const int sx = 1 + static_cast<int>(rng() % 5), sy = 1 + static_cast<int>(rng() % 5);
                const int x = static_cast<int>(rng() % (11 - sx)), y = static_cast<int>(rng() % (11 - sy));
                obs.push_back({static_cast<Scalar>(x), static_cast<Scalar>(y),
                               static_cast<Scalar>(x + sx), static_cast<Scalar>(y + sy)});
            }
            const int fx = 1 + static_cast<int>(rng() % 4), fy = 1 + static_cast<int>(rng() % 4);
            RectRegion2 r = feasible_region_xy(fx, fy, obs, 10, 10);
            auto ref = verify::grid_feasible_positions(fx, fy, obs, 10, 10);
            for (int x = 0; x <= 10; ++x)
                for (int y = 0; y <= 10; ++y)
                    CHECK(r.contains(x, y) == (ref.count({x, y}) > 0));
        }
    }
}

TEST_CASE("region recanonicalization is stable") {
    std::mt19937_64 rng(29);
    for (int t = 0; t < 40; ++t) {
        std::vector<Rect2> obs;
        for (int i = 0; i < 3 + static_cast<int>(rng() % 3); ++i) {
            const int sx = 1 + static_cast<int>(rng() % 6), sy = 1 + static_cast<int>(rng() % 6);
            const int x = static_cast<int>(rng() % (11 - sx)), y = static_cast<int>(rng() % (11 - sy));
            obs.push_back({static_cast<Scalar>(x), static_cast<Scalar>(y),
                           static_cast<Scalar>(x + sx), static_cast<Scalar>(y + sy)});
        }
        RectRegion2 r = feasible_region_xy(2, 2, obs, 10, 10);
        CHECK(r.recanonicalized() == r);
    }
}

TEST_CASE("convex_vertices: rectangle corners") {
    RectRegion2 r = feasible_region_xy(3, 3, {}, 10, 10);
    auto vs = convex_vertices(r);
    REQUIRE(vs.size() == 4);
    for (const auto& v : vs) {
        CHECK(v.interior_angle == doctest::Approx(std::numbers::pi / 2));
        CHECK(v.tightness == doctest::Approx(std::numbers::pi / 2));
    }
    CHECK(convex_vertices(RectRegion2{}).empty());
}

TEST_CASE("convex_vertices: L-shaped region has five") {
    // [0,7]x[0,7] minus the open top-right quadrant leaves an L with five
    // convex corners and one concave corner.
    std::vector<Slab> slabs{{0, 3, {{0, 7}}}, {3, 7, {{0, 3}}}};
    RectRegion2 L(slabs, 0.0);
    auto vs = convex_vertices(L);
    CHECK(vs.size() == 5);
    // the concave corner (3,3) reports no tightness
    CHECK(tightness_at(L, 3, 3) == 0);
}

TEST_CASE("convex vertices are strict local optima of tightness") {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 25; ++t) {
        std::vector<Rect2> obs;
        for (int i = 0; i < 4; ++i) {
            const int sx = 1 + static_cast<int>(rng() % 5), sy = 1 + static_cast<int>(rng() % 5);
            const int x = static_cast<int>(rng() % (11 - sx)), y = static_cast<int>(rng() % (11 - sy));
            obs.push_back({static_cast<Scalar>(x), static_cast<Scalar>(y),
                           static_cast<Scalar>(x + sx), static_cast<Scalar>(y + sy)});
        }
        const int fx = 1 + static_cast<int>(rng() % 3), fy = 1 + static_cast<int>(rng() % 3);
        RectRegion2 r = feasible_region_xy(fx, fy, obs, 10, 10);
        for (const PlaneVertex& v : convex_vertices(r)) {
            const Scalar psi = tightness_at(r, v.x, v.y);
            CHECK(psi == doctest::Approx(std::numbers::pi / 2));
            // punctured neighborhood along the boundary: step along both axes
            for (const auto& [dx, dy] :
                 {std::pair{0.25, 0.0}, {-0.25, 0.0}, {0.0, 0.25}, {0.0, -0.25}}) {
                if (!r.contains(v.x + dx, v.y + dy)) continue;
                CHECK(tightness_at(r, v.x + dx, v.y + dy) < psi);
            }
        }
    }
}

TEST_CASE("degenerate corridor membership survives exactly-fitting gaps") {
    // two obstacles exactly 3 apart leave a zero-width feasible corridor
    std::vector<Rect2> obs{{0, 0, 2, 10}, {5, 0, 10, 10}};
    RectRegion2 r = feasible_region_xy(3, 10, obs, 10, 10);
    CHECK(r.contains(2, 0));
    CHECK_FALSE(r.contains(1, 0));
    CHECK_FALSE(r.contains(3, 0));
    auto ref = verify::grid_feasible_positions(3, 10, obs, 10, 10);
    for (int x = 0; x <= 10; ++x)
        for (int y = 0; y <= 10; ++y) CHECK(r.contains(x, y) == (ref.count({x, y}) > 0));
}

TEST_CASE("bin spec rejects degenerate sizes") {
    CHECK_THROWS_AS(BinSpec({0, 10, 10}, BinMode::Discrete), std::invalid_argument);
    CHECK_THROWS_AS(BinSpec({10, 10, -1}, BinMode::Continuous), std::invalid_argument);
}

}  // TEST_SUITE
