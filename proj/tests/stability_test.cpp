#include <doctest.h>

#include <random>

#include "packtree/stability.hpp"
#include "packtree/verify.hpp"

using namespace packtree;

namespace {

PackingTree tree10() { return PackingTree(BinSpec({10, 10, 10}, BinMode::Discrete), Scheme::Ems, 2); }

void place(PackingTree& t, Box3 box, Scalar density = 1.0) {
    ItemSpec item{box.size, density, 0};
    t.insert(item, {box.size, box.flb, 0, -1});
}

}  // namespace

TEST_SUITE("stability") {

TEST_CASE("item on the floor is stable with full support") {
    PackingTree t = tree10();
    const auto r = check_stable(t, {{2, 2, 0}, {3, 3, 3}}, 27);
    CHECK(r.stable);
    CHECK(r.support_ratio == doctest::Approx(1.0));
}

TEST_CASE("overhang with COM beyond the supporter edge is unstable") {
    PackingTree t = tree10();
    place(t, {{0, 0, 0}, {2, 2, 2}});
    // item sticks out so far its center is past x = 2
    const auto r = check_stable(t, {{1, 0, 2}, {4, 2, 1}}, 8);
    CHECK_FALSE(r.stable);
    // modest overhang keeps the center above the supporter
    const auto ok = check_stable(t, {{1, 0, 2}, {1.5, 2, 1}}, 3);
    CHECK(ok.stable);
}

TEST_CASE("bridging two pillars with COM between them is stable") {
    PackingTree t = tree10();
    place(t, {{0, 0, 0}, {2, 2, 4}});
    place(t, {{6, 0, 0}, {2, 2, 4}});
    const auto r = check_stable(t, {{0, 0, 4}, {8, 2, 1}}, 16);
    CHECK(r.stable);
    CHECK(r.contacts.size() == 2);
}

TEST_CASE("stability verdicts match the hull oracle on random stacks") {
    std::mt19937_64 rng(3);
    int checked = 0;
    for (int rep = 0; rep < 200; ++rep) {
        PackingTree t = tree10();
        // floor layer
        place(t, {{0, 0, 0}, {static_cast<Scalar>(2 + rng() % 4), static_cast<Scalar>(2 + rng() % 4), 2}});
        if (rng() % 2) place(t, {{6, 0, 0}, {2, static_cast<Scalar>(2 + rng() % 4), 2}});
        // candidate second-level placement
        const Box3 probe{{static_cast<Scalar>(rng() % 6), static_cast<Scalar>(rng() % 3), 2},
                         {static_cast<Scalar>(1 + rng() % 5), static_cast<Scalar>(1 + rng() % 3),
                          static_cast<Scalar>(1 + rng() % 3)}};
        if (!t.placement_ok(probe)) continue;
        const auto contacts = support_contacts(t, probe);
        std::vector<std::pair<Scalar, Scalar>> corners;
        for (const auto& c : contacts) {
            if (c.supporter < 0) continue;
            corners.push_back({c.rect.x0, c.rect.y0});
            corners.push_back({c.rect.x1, c.rect.y0});
            corners.push_back({c.rect.x0, c.rect.y1});
            corners.push_back({c.rect.x1, c.rect.y1});
        }
        const Vec3 c = probe.center();
        const bool oracle = verify::point_strictly_in_hull(c.x, c.y, corners);
        const auto r = check_stable(t, probe, probe.volume());
        CHECK(r.stable == oracle);
        ++checked;
    }
    CHECK(checked > 100);
}

TEST_CASE("floor loads conserve total mass exactly") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 40; ++rep) {
        PackingTree t = tree10();
        std::uniform_real_distribution<Scalar> dens(0.05, 1.0);
        for (int i = 0; i < 10; ++i) {
            const ItemSpec item{{static_cast<Scalar>(1 + rng() % 4),
                                 static_cast<Scalar>(1 + rng() % 4),
                                 static_cast<Scalar>(1 + rng() % 3)},
                                dens(rng)};
            auto leaves = t.candidates_for(
                item, [&](const LeafPlacement& l) { return check_stable(t, l.box(), item.mass()).stable; });
            if (leaves.empty()) break;
            t.insert(item, leaves[rng() % leaves.size()]);
        }
        const auto r = bearing_forces(t);
        CHECK(r.floor_total == r.mass_total);  // fixed-point exact
    }
}

TEST_CASE("two-item stack transmits the full weight") {
    PackingTree t = tree10();
    place(t, {{0, 0, 0}, {3, 3, 2}});
    place(t, {{0, 0, 2}, {3, 3, 2}});
    const auto r = bearing_forces(t);
    CHECK(r.item_load[0] == doctest::Approx(36));
    CHECK(r.item_load[1] == doctest::Approx(18));
    CHECK(r.floor_total == doctest::Approx(36));
}

TEST_CASE("half-on-half split follows contact areas") {
    PackingTree t = tree10();
    place(t, {{0, 0, 0}, {2, 4, 2}});
    place(t, {{2, 0, 0}, {2, 4, 2}});
    place(t, {{0, 0, 2}, {4, 4, 1}});  // rests half on each pillar
    const auto r = bearing_forces(t);
    CHECK(r.item_load[0] == doctest::Approx(16 + 8).epsilon(1e-5));
    CHECK(r.item_load[1] == doctest::Approx(16 + 8).epsilon(1e-5));
    // single item alone carries only its own mass
    PackingTree s = tree10();
    place(s, {{0, 0, 0}, {2, 2, 2}});
    CHECK(bearing_forces(s).item_load[0] == doctest::Approx(8));
}

TEST_CASE("enlarging a contact never flips stable to unstable") {
    for (int w = 2; w <= 6; ++w) {
        PackingTree t = tree10();
        place(t, {{2, 2, 0}, {static_cast<Scalar>(w), 2, 2}});
        const Box3 probe{{3, 2, 2}, {2, 2, 1}};
        if (!t.placement_ok(probe)) continue;
        const bool narrow = check_stable(t, probe, 4).stable;
        if (narrow) {
            PackingTree wide = tree10();
            place(wide, {{2, 2, 0}, {static_cast<Scalar>(w + 1), 2, 2}});
            CHECK(check_stable(wide, probe, 4).stable);
        }
    }
}

TEST_CASE("stability of disjoint stacks is unaffected by new items") {
    PackingTree t = tree10();
    place(t, {{0, 0, 0}, {2, 2, 2}});
    place(t, {{0, 0, 2}, {2, 2, 1}});
    const bool before = check_stable(t, {{0, 0, 3}, {2, 2, 1}}, 4).stable;
    place(t, {{7, 7, 0}, {3, 3, 3}});  // far away
    CHECK(check_stable(t, {{0, 0, 3}, {2, 2, 1}}, 4).stable == before);
}

}  // TEST_SUITE
