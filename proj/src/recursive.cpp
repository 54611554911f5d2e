#include "packtree/recursive.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <stdexcept>

#include "packtree/env.hpp"

namespace packtree {

std::string integrator_name(IntegratorKind k) {
    switch (k) {
        case IntegratorKind::SpatialEnsemble: return "spatial-ensemble";
        case IntegratorKind::MaxStateValue: return "max-state-value";
        case IntegratorKind::MaxVolume: return "max-volume";
        case IntegratorKind::MaxReturn: return "max-return";
        case IntegratorKind::MinSurfaceArea: return "min-surface-area";
    }
    return "spatial-ensemble";
}

IntegratorKind integrator_from_name(const std::string& name) {
    for (IntegratorKind k :
         {IntegratorKind::SpatialEnsemble, IntegratorKind::MaxStateValue, IntegratorKind::MaxVolume,
          IntegratorKind::MaxReturn, IntegratorKind::MinSurfaceArea})
        if (integrator_name(k) == name) return k;
    throw std::invalid_argument("unknown integrator: " + name);
}

namespace {

int count_intersecting(const PackingTree& tree, const Box3& box) {
    int n = 0;
    for (const InternalNode& it : tree.internals())
        if (overlaps(it.box, box, tree.bin().eps())) ++n;
    return n;
}

// Sub-problem view after optional leaf interception: global ids and the
// matching normalized state.
struct SubView {
    std::vector<int> leaf_ids;
    NormalizedSub normed;
};

SubView make_view(const SubProblem& sub, const std::vector<LeafPlacement>& leaves,
                  const ItemSpec& item, const BinSpec& bin, int leaf_cap,
                  std::mt19937_64* rng) {
    SubView view;
    view.leaf_ids = sub.leaf_ids;
    if (leaf_cap > 0 && rng && static_cast<int>(view.leaf_ids.size()) > leaf_cap) {
        const int n = static_cast<int>(view.leaf_ids.size());
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < leaf_cap; ++i) {
            const int j = i + static_cast<int>((*rng)() % static_cast<uint64_t>(n - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(leaf_cap);
        std::sort(idx.begin(), idx.end());
        std::vector<int> subset;
        subset.reserve(leaf_cap);
        for (int i : idx) subset.push_back(view.leaf_ids[i]);
        view.leaf_ids = std::move(subset);
    }
    SubProblem capped = sub;
    capped.leaf_ids = view.leaf_ids;
    view.normed = normalize(capped, leaves, item, bin);
    return view;
}

}  // namespace

std::vector<SubProblem> decompose(const PackingTree& tree,
                                  const std::vector<LeafPlacement>& leaves, int tau,
                                  std::mt19937_64& rng) {
    const Scalar eps = tree.bin().eps();
    const auto& arena = tree.ems_arena();

    std::vector<SubProblem> subs;
    std::map<std::array<Scalar, 6>, int> seen;  // sub-bin box -> sub index
    std::vector<char> assigned(leaves.size(), 0);
    std::vector<int> pending(leaves.size());
    std::iota(pending.begin(), pending.end(), 0);

    auto carve = [&](const Box3& sub_bin) -> int {
        const std::array<Scalar, 6> key{sub_bin.flb.x,  sub_bin.flb.y,  sub_bin.flb.z,
                                        sub_bin.size.x, sub_bin.size.y, sub_bin.size.z};
        if (auto it = seen.find(key); it != seen.end()) return it->second;
        SubProblem sub;
        sub.sub_bin = sub_bin;
        for (const InternalNode& n : tree.internals()) {
            if (const auto cut = intersect(n.box, sub_bin, eps)) {
                InternalNode clipped = n;
                clipped.box = *cut;
                sub.internals.push_back(clipped);
            }
        }
        for (size_t li = 0; li < leaves.size(); ++li) {
            if (box_contains(sub_bin, leaves[li].box(), std::max(eps, 1e-9))) {
                sub.leaf_ids.push_back(static_cast<int>(li));
                assigned[li] = 1;
            }
        }
        subs.push_back(std::move(sub));
        const int idx = static_cast<int>(subs.size()) - 1;
        seen[key] = idx;
        return idx;
    };

    if (tau <= 0) {
        carve(tree.bin().as_box());
        return subs;
    }

    std::vector<int> count_cache(arena.size(), -1);
    auto scale_of = [&](int arena_idx) {
        int& c = count_cache[arena_idx];
        if (c < 0) c = count_intersecting(tree, arena[arena_idx].box);
        return c;
    };

    while (!pending.empty()) {
        // random unassigned leaf
        const size_t pick = rng() % pending.size();
        const int li = pending[pick];
        if (assigned[li]) {
            pending[pick] = pending.back();
            pending.pop_back();
            continue;
        }
        // walk the split lineage upward; stop at the first ancestor whose
        // sub-tree scale exceeds tau and treat its space as the sub-bin
        int cur = leaves[li].source_ems >= 0 ? leaves[li].source_ems : 0;
        while (scale_of(cur) <= tau && arena[cur].parent >= 0) cur = arena[cur].parent;
        const Box3 chosen = arena[cur].box;
        carve(chosen);
        if (!assigned[li]) {
            // numeric edge: force-contain the picked leaf in its own space
            SubProblem& sub = subs[carve(leaves[li].box())];
            if (sub.leaf_ids.empty()) sub.leaf_ids.push_back(li);
            assigned[li] = 1;
        }
    }
    return subs;
}

NormalizedSub normalize(const SubProblem& sub, const std::vector<LeafPlacement>& leaves,
                        const ItemSpec& item, const BinSpec& bin) {
    NormalizedSub out;
    out.offset = sub.sub_bin.flb;
    for (int d = 0; d < 3; ++d) {
        if (sub.sub_bin.size[d] <= 0)
            throw std::invalid_argument("normalize: degenerate sub-bin axis");
        out.scale[d] = bin.size[d] / sub.sub_bin.size[d];
    }
    auto map_box = [&](const Box3& b) {
        Box3 m;
        for (int d = 0; d < 3; ++d) {
            m.flb[d] = (b.flb[d] - out.offset[d]) * out.scale[d];
            m.size[d] = b.size[d] * out.scale[d];
        }
        return m;
    };
    out.internals = sub.internals;
    for (InternalNode& n : out.internals) n.box = map_box(n.box);
    out.leaves.reserve(sub.leaf_ids.size());
    for (int li : sub.leaf_ids) {
        LeafPlacement l = leaves[li];
        const Box3 m = map_box(l.box());
        l.flb = m.flb;
        l.oriented_size = m.size;
        out.leaves.push_back(l);
    }
    out.item = item;
    for (int d = 0; d < 3; ++d) out.item.size[d] = item.size[d] * out.scale[d];
    return out;
}

std::vector<double> ascending_ranks(const std::vector<double>& scores) {
    const int n = static_cast<int>(scores.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });
    std::vector<double> ranks(n, 0);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double shared = (static_cast<double>(i) + j) / 2.0 + 1.0;  // midpoint rank
        for (int k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

int integrate(const PackingTree& tree, const std::vector<LeafPlacement>& leaves,
              const std::vector<SubProblem>& subs, const ItemSpec& item, Agent& agent,
              IntegratorKind kind, int leaf_cap, std::mt19937_64* rng) {
    if (leaves.empty()) return -1;
    const BinSpec& bin = tree.bin();

    std::vector<SubView> views;
    views.reserve(subs.size());
    for (const SubProblem& s : subs) views.push_back(make_view(s, leaves, item, bin, leaf_cap, rng));

    if (kind == IntegratorKind::SpatialEnsemble) {
        std::vector<double> worst_rank(leaves.size(), 0);
        std::vector<char> covered(leaves.size(), 0);
        for (const SubView& v : views) {
            if (v.leaf_ids.empty()) continue;
            const std::vector<double> scores =
                agent.leaf_scores(bin, v.normed.internals, v.normed.leaves, v.normed.item);
            const std::vector<double> ranks = ascending_ranks(scores);
            for (size_t k = 0; k < v.leaf_ids.size(); ++k) {
                const int li = v.leaf_ids[k];
                if (!covered[li]) {
                    worst_rank[li] = ranks[k];
                    covered[li] = 1;
                } else {
                    worst_rank[li] = std::min(worst_rank[li], ranks[k]);
                }
            }
        }
        int best = -1;
        for (int li = 0; li < static_cast<int>(leaves.size()); ++li) {
            if (!covered[li]) continue;
            if (best < 0 || worst_rank[li] > worst_rank[best]) best = li;
        }
        return best;
    }

    // sub-bin pick integrators
    int best_sub = -1;
    double best_score = 0;
    std::vector<int> local_pick(subs.size(), -1);
    for (size_t si = 0; si < views.size(); ++si) {
        if (views[si].leaf_ids.empty()) continue;
        const NormalizedSub& ns = views[si].normed;
        double phi = 0;
        switch (kind) {
            case IntegratorKind::MaxStateValue:
                phi = agent.state_value(bin, ns.internals, ns.item);
                break;
            case IntegratorKind::MaxVolume: {
                for (const InternalNode& n : ns.internals) phi += n.box.volume();
                break;
            }
            case IntegratorKind::MaxReturn: {
                phi = agent.state_value(bin, ns.internals, ns.item);
                for (const InternalNode& n : ns.internals) phi += n.box.volume();
                break;
            }
            case IntegratorKind::MinSurfaceArea: {
                const std::vector<double> scores =
                    agent.leaf_scores(bin, ns.internals, ns.leaves, ns.item);
                int pick = 0;
                for (int i = 1; i < static_cast<int>(scores.size()); ++i)
                    if (scores[i] > scores[pick]) pick = i;
                local_pick[si] = pick;
                const Box3 placed = leaves[views[si].leaf_ids[pick]].box();
                Scalar ex = placed.hi(0), ey = placed.hi(1), ez = placed.hi(2);
                for (const InternalNode& n : tree.internals()) {
                    ex = std::max(ex, n.box.hi(0));
                    ey = std::max(ey, n.box.hi(1));
                    ez = std::max(ez, n.box.hi(2));
                }
                phi = -(ex * ey + ex * ez + ey * ez);
                break;
            }
            case IntegratorKind::SpatialEnsemble: break;  // handled above
        }
        if (best_sub < 0 || phi > best_score) {
            best_sub = static_cast<int>(si);
            best_score = phi;
        }
    }
    if (best_sub < 0) return -1;
    int pick = local_pick[best_sub];
    if (pick < 0) {
        const NormalizedSub& ns = views[best_sub].normed;
        const std::vector<double> scores = agent.leaf_scores(bin, ns.internals, ns.leaves, ns.item);
        pick = 0;
        for (int i = 1; i < static_cast<int>(scores.size()); ++i)
            if (scores[i] > scores[pick]) pick = i;
    }
    return views[best_sub].leaf_ids[pick];
}

EpisodeMetrics run_large_scale_sequence(const LargeScaleConfig& cfg, Agent& agent,
                                        const std::vector<ItemSpec>& sequence) {
    const BinSpec bin({1, 1, 1}, BinMode::Continuous);
    PackingTree tree(bin, Scheme::Ems, 6);
    std::mt19937_64 rng(mix_seed(cfg.seed, 0xDEC0));

    EpisodeMetrics m;
    const auto t0 = std::chrono::steady_clock::now();
    int decisions = 0;
    const int cap = cfg.leaf_cap > 0 ? cfg.leaf_cap : 150;
    for (const ItemSpec& item : sequence) {
        std::vector<LeafPlacement> leaves = tree.candidates_for(item);
        if (leaves.empty()) break;
        const auto subs = decompose(tree, leaves, cfg.tau, rng);
        const int pick = integrate(tree, leaves, subs, item, agent, cfg.integrator, cap, &rng);
        if (pick < 0) break;
        tree.insert(item, leaves[pick]);
        ++decisions;
        if (decisions >= cfg.max_items) break;
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.uti = tree.utilization();
    m.num = static_cast<int>(tree.internals().size());
    m.seconds_per_decision = decisions > 0 ? elapsed / decisions : 0;
    return m;
}

EpisodeMetrics run_large_scale(const LargeScaleConfig& cfg, Agent& agent) {
    SamplerSpec spec;
    spec.kind = SamplerSpec::Kind::LargeScale;
    spec.nbar = cfg.nbar;
    spec.categories = 0;
    const BinSpec bin({1, 1, 1}, BinMode::Continuous);
    ItemSampler sampler(spec, bin);
    std::mt19937_64 rng(cfg.seed);
    sampler.on_episode_start(rng);
    std::vector<ItemSpec> seq;
    const int cap = std::min<int>(cfg.max_items, static_cast<int>(cfg.nbar * 8));
    seq.reserve(cap);
    for (int i = 0; i < cap; ++i) seq.push_back(sampler.sample(rng));
    return run_large_scale_sequence(cfg, agent, seq);
}

}  // namespace packtree
