#include "packtree/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace packtree {

namespace {

// Contact tolerance: exact in discrete mode, 1e-6 in continuous mode.
Scalar contact_tol(const BinSpec& bin) { return bin.mode == BinMode::Discrete ? 0.0 : 1e-6; }

constexpr int64_t kMassScale = 1 << 20;

struct P2 {
    Scalar x, y;
};

Scalar cross(const P2& o, const P2& a, const P2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<P2> convex_hull(std::vector<P2> pts) {
    std::sort(pts.begin(), pts.end(), [](const P2& a, const P2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const P2& a, const P2& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const int n = static_cast<int>(pts.size());
    if (n < 3) return pts;
    std::vector<P2> hull(2 * n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const int lower = k + 1;
    for (int i = n - 2; i >= 0; --i) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

bool strictly_inside_hull(const P2& p, const std::vector<P2>& corners, Scalar tol) {
    const std::vector<P2> hull = convex_hull(corners);
    if (hull.size() < 3) return false;  // degenerate support line or point
    for (size_t i = 0; i < hull.size(); ++i) {
        const P2& a = hull[i];
        const P2& b = hull[(i + 1) % hull.size()];
        if (cross(a, b, p) <= tol) return false;
    }
    return true;
}

struct ItemState {
    Box3 box;
    Scalar mass = 0;
    std::vector<ContactRect> contacts;
    Scalar incoming_mass = 0;
    Scalar incoming_wx = 0, incoming_wy = 0;  // mass-weighted positions
};

std::vector<ContactRect> contacts_for(const Box3& box, std::span<const ItemState> items,
                                      int self, Scalar ctol) {
    std::vector<ContactRect> out;
    if (box.flb.z <= ctol) {
        out.push_back({-1, {box.lo(0), box.lo(1), box.hi(0), box.hi(1)}});
        return out;
    }
    for (int k = 0; k < static_cast<int>(items.size()); ++k) {
        if (k == self) continue;
        const Box3& s = items[k].box;
        if (std::abs(s.top() - box.flb.z) > ctol) continue;
        const Scalar x0 = std::max(box.lo(0), s.lo(0)), x1 = std::min(box.hi(0), s.hi(0));
        const Scalar y0 = std::max(box.lo(1), s.lo(1)), y1 = std::min(box.hi(1), s.hi(1));
        if (x1 - x0 > ctol && y1 - y0 > ctol) out.push_back({k, {x0, y0, x1, y1}});
    }
    return out;
}

}  // namespace

std::vector<ContactRect> support_contacts(const PackingTree& tree, const Box3& box) {
    const Scalar ctol = contact_tol(tree.bin());
    std::vector<ItemState> items(tree.internals().size());
    for (size_t i = 0; i < items.size(); ++i) items[i].box = tree.internals()[i].box;
    return contacts_for(box, items, -1, ctol);
}

SupportReport check_stable(const PackingTree& tree, const Box3& placement, Scalar mass) {
    const Scalar ctol = contact_tol(tree.bin());
    const Scalar cross_tol = tree.bin().mode == BinMode::Discrete ? 0.0 : 1e-12;

    std::vector<ItemState> items;
    items.reserve(tree.internals().size() + 1);
    for (const InternalNode& n : tree.internals()) items.push_back({n.box, n.mass, {}, 0, 0, 0});
    items.push_back({placement, mass, {}, 0, 0, 0});
    const int self = static_cast<int>(items.size()) - 1;

    for (int i = 0; i < static_cast<int>(items.size()); ++i)
        items[i].contacts = contacts_for(items[i].box, items, i, ctol);

    // Top-down pass: every item's load and its effective center of mass must
    // stay supported once the new weight is transmitted through the stack.
    std::vector<int> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return items[a].box.flb.z > items[b].box.flb.z; });

    SupportReport report;
    bool all_stable = true;
    for (int i : order) {
        ItemState& it = items[i];
        const Scalar load = it.mass + it.incoming_mass;
        const Vec3 c = it.box.center();
        const Scalar ex = (it.mass * c.x + it.incoming_wx) / load;
        const Scalar ey = (it.mass * c.y + it.incoming_wy) / load;

        bool on_floor = false;
        Scalar contact_area = 0;
        std::vector<P2> corners;
        for (const ContactRect& cr : it.contacts) {
            if (cr.supporter < 0) on_floor = true;
            contact_area += (cr.rect.x1 - cr.rect.x0) * (cr.rect.y1 - cr.rect.y0);
            corners.push_back({cr.rect.x0, cr.rect.y0});
            corners.push_back({cr.rect.x1, cr.rect.y0});
            corners.push_back({cr.rect.x0, cr.rect.y1});
            corners.push_back({cr.rect.x1, cr.rect.y1});
        }
        const bool stable = on_floor || strictly_inside_hull({ex, ey}, corners, cross_tol);
        if (!stable) all_stable = false;

        if (i == self) {
            report.contacts = it.contacts;
            const Scalar footprint = it.box.size.x * it.box.size.y;
            report.support_ratio = std::min<Scalar>(1.0, contact_area / footprint);
        }

        // transmit the load downward, proportional to contact area
        if (!it.contacts.empty() && contact_area > 0) {
            for (const ContactRect& cr : it.contacts) {
                if (cr.supporter < 0) continue;
                const Scalar a = (cr.rect.x1 - cr.rect.x0) * (cr.rect.y1 - cr.rect.y0);
                const Scalar share = load * (a / contact_area);
                ItemState& s = items[cr.supporter];
                s.incoming_mass += share;
                s.incoming_wx += share * (cr.rect.x0 + cr.rect.x1) / 2;
                s.incoming_wy += share * (cr.rect.y0 + cr.rect.y1) / 2;
            }
        }
    }
    report.stable = all_stable;
    return report;
}

BearingReport bearing_forces(const PackingTree& tree) {
    const Scalar ctol = contact_tol(tree.bin());
    const auto& nodes = tree.internals();
    const int n = static_cast<int>(nodes.size());

    std::vector<ItemState> items(n);
    for (int i = 0; i < n; ++i) items[i] = {nodes[i].box, nodes[i].mass, {}, 0, 0, 0};
    for (int i = 0; i < n; ++i) items[i].contacts = contacts_for(items[i].box, items, i, ctol);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return items[a].box.flb.z > items[b].box.flb.z; });

    std::vector<int64_t> load(n, 0), floor_fp(n, 0);
    int64_t mass_total = 0;
    for (int i = 0; i < n; ++i) {
        load[i] = llround(nodes[i].mass * kMassScale);
        mass_total += load[i];
    }

    for (int i : order) {
        const ItemState& it = items[i];
        Scalar area = 0;
        bool on_floor = false;
        for (const ContactRect& cr : it.contacts) {
            if (cr.supporter < 0) {
                on_floor = true;
                continue;
            }
            area += (cr.rect.x1 - cr.rect.x0) * (cr.rect.y1 - cr.rect.y0);
        }
        if (on_floor || it.contacts.empty() || area <= 0) {
            // resting on the floor, or unsupported: the floor absorbs it all
            floor_fp[i] = load[i];
            continue;
        }
        std::vector<const ContactRect*> sup;
        for (const ContactRect& cr : it.contacts)
            if (cr.supporter >= 0) sup.push_back(&cr);
        const int64_t total = load[i];
        int64_t remaining = total;
        for (size_t k = 0; k < sup.size(); ++k) {
            const ContactRect& cr = *sup[k];
            int64_t share;
            if (k + 1 == sup.size()) {
                share = remaining;  // last supporter takes the exact remainder
            } else {
                const Scalar a = (cr.rect.x1 - cr.rect.x0) * (cr.rect.y1 - cr.rect.y0);
                share = static_cast<int64_t>(static_cast<long double>(total) * a / area);
                share = std::clamp<int64_t>(share, 0, remaining);
            }
            load[cr.supporter] += share;
            remaining -= share;
        }
    }

    BearingReport r;
    r.item_load.resize(n);
    r.floor_load.resize(n);
    int64_t floor_total = 0;
    for (int i = 0; i < n; ++i) {
        r.item_load[i] = static_cast<Scalar>(load[i]) / kMassScale;
        r.floor_load[i] = static_cast<Scalar>(floor_fp[i]) / kMassScale;
        floor_total += floor_fp[i];
    }
    r.floor_total = static_cast<Scalar>(floor_total) / kMassScale;
    r.mass_total = static_cast<Scalar>(mass_total) / kMassScale;
    return r;
}

}  // namespace packtree
