#include "packtree/topplan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "packtree/stability.hpp"

namespace packtree {

namespace {

uint64_t fnv1a(uint64_t h, const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t factorial_capped(int n, uint64_t cap) {
    uint64_t f = 1;
    for (int i = 2; i <= n; ++i) {
        f *= i;
        if (f >= cap) return cap;
    }
    return f;
}

}  // namespace

uint64_t tree_digest(const PackingTree& tree) {
    // sorted internals so the digest is insertion-order independent
    std::vector<Box3> boxes;
    for (const InternalNode& n : tree.internals()) boxes.push_back(n.box);
    std::sort(boxes.begin(), boxes.end(), [](const Box3& a, const Box3& b) {
        const auto ka = std::array{a.flb.x, a.flb.y, a.flb.z, a.size.x, a.size.y, a.size.z};
        const auto kb = std::array{b.flb.x, b.flb.y, b.flb.z, b.size.x, b.size.y, b.size.z};
        return ka < kb;
    });
    uint64_t h = 0xcbf29ce484222325ull;
    const size_t n = boxes.size();
    h = fnv1a(h, &n, sizeof(n));
    for (const Box3& b : boxes) h = fnv1a(h, &b, sizeof(Box3));
    return h;
}

size_t PathCache::KeyHash::operator()(const Key& k) const {
    uint64_t h = k.digest;
    for (int v : k.prefix) h = fnv1a(h, &v, sizeof(v));
    return static_cast<size_t>(h);
}

const PathCache::Entry* PathCache::lookup(uint64_t digest, std::span<const int> prefix) {
    Key key{digest, {prefix.begin(), prefix.end()}};
    auto it = map_.find(key);
    if (it == map_.end()) {
        ++misses_;
        return nullptr;
    }
    ++hits_;
    lru_.splice(lru_.begin(), lru_, it->second);  // move to front
    return &it->second->second;
}

void PathCache::store(uint64_t digest, std::span<const int> prefix, Entry entry) {
    Key key{digest, {prefix.begin(), prefix.end()}};
    auto it = map_.find(key);
    if (it != map_.end()) {
        it->second->second = std::move(entry);
        lru_.splice(lru_.begin(), lru_, it->second);
        return;
    }
    lru_.emplace_front(key, std::move(entry));
    map_[key] = lru_.begin();
    if (map_.size() > capacity_) {
        map_.erase(lru_.back().first);
        lru_.pop_back();
    }
}

std::vector<std::vector<int>> mcts_sample_orders(const OperandSet& operands, int m,
                                                 std::mt19937_64& rng) {
    if (m < 1) throw std::invalid_argument("order budget must be >= 1");
    const int n = operands.known();
    std::vector<int> arrival(n);
    std::iota(arrival.begin(), arrival.end(), 0);

    std::vector<std::vector<int>> orders;
    if (factorial_capped(n, static_cast<uint64_t>(m) + 1) <= static_cast<uint64_t>(m)) {
        std::vector<int> perm = arrival;
        do {
            orders.push_back(perm);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return orders;
    }
    std::set<std::vector<int>> seen;
    orders.push_back(arrival);  // the arrival order is always explored
    seen.insert(arrival);
    int attempts = 0;
    while (static_cast<int>(orders.size()) < m && attempts < 20 * m) {
        std::vector<int> perm = arrival;
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
            std::swap(perm[i], perm[j]);
        }
        if (seen.insert(perm).second) orders.push_back(std::move(perm));
        ++attempts;
    }
    return orders;
}

namespace {

struct Simulator {
    const OperandSet& ops;
    Agent& agent;
    const PlannerConfig& cfg;
    std::mt19937_64& rng;

    bool above_any(const Box3& box, const std::vector<Box3>& footprints, Scalar eps) const {
        for (const Box3& f : footprints) {
            const Scalar ox = std::min(box.hi(0), f.hi(0)) - std::max(box.lo(0), f.lo(0));
            const Scalar oy = std::min(box.hi(1), f.hi(1)) - std::max(box.lo(1), f.lo(1));
            if (ox > eps && oy > eps && box.flb.z >= f.top() - eps) return true;
        }
        return false;
    }

    // extend a prefix entry by one operand; returns false when the item
    // cannot be placed (path truncates)
    bool extend(PathCache::Entry& e, int operand) const {
        PackingTree& tree = e.tree;
        const bool preview = operand >= ops.s();
        const ItemSpec& item = preview ? ops.previewed[operand - ops.s()]
                                       : ops.selectable[operand];
        const Scalar eps = std::max(tree.bin().eps(), 1e-9);

        std::vector<Box3> preview_boxes, selectable_boxes;
        for (const PlannedStep& st : e.steps)
            (st.is_preview ? preview_boxes : selectable_boxes).push_back(st.placement.box());

        auto filter = [&](const LeafPlacement& l) {
            const Box3 box = l.box();
            if (!preview && above_any(box, preview_boxes, eps))
                return false;  // selectable items never rest above previews
            if (preview) {
                // previews arrive later: they may not slip beneath a
                // selectable item already planned in this path
                for (const Box3& s : selectable_boxes) {
                    const Scalar ox = std::min(box.hi(0), s.hi(0)) - std::max(box.lo(0), s.lo(0));
                    const Scalar oy = std::min(box.hi(1), s.hi(1)) - std::max(box.lo(1), s.lo(1));
                    if (ox > eps && oy > eps && box.top() <= s.flb.z + eps) return false;
                }
            }
            if (cfg.stability && !check_stable(tree, box, item.mass()).stable) return false;
            return true;
        };
        std::vector<LeafPlacement> leaves = tree.candidates_for(item, filter);
        if (leaves.empty()) return false;
        if (cfg.leaf_cap > 0 && static_cast<int>(leaves.size()) > cfg.leaf_cap) {
            std::mt19937_64 local(tree_digest(tree) ^ (0x9e37u + operand));
            leaves = intercept_leaves(leaves, cfg.leaf_cap, local);
        }
        const std::vector<double> scores = agent.leaf_scores(tree.bin(), tree.internals(), leaves, item);
        int pick = 0;
        for (int i = 1; i < static_cast<int>(scores.size()); ++i)
            if (scores[i] > scores[pick]) pick = i;
        tree.insert(item, leaves[pick]);
        e.steps.push_back({operand, preview, leaves[pick], scores[pick]});
        e.volume_sum += item.volume();
        return true;
    }
};

}  // namespace

PlanResult plan(const PackingTree& tree, const OperandSet& operands, Agent& agent,
                const PlannerConfig& cfg, PathCache* cache, std::mt19937_64& rng) {
    if (operands.s() < 1) throw std::invalid_argument("plan requires a selectable item");
    PlanResult result;
    const uint64_t digest = tree_digest(tree);
    const auto orders = mcts_sample_orders(operands, cfg.budget, rng);
    Simulator sim{operands, agent, cfg, rng};

    bool have_best = false;
    PlanPath best;
    double best_first_score = 0;

    for (size_t oi = 0; oi < orders.size(); ++oi) {
        const std::vector<int>& order = orders[oi];
        int depth = static_cast<int>(order.size());
        if (!cfg.full_depth) depth = std::min(depth, operands.known() + cfg.horizon_extra);

        // resume from the longest cached prefix of this order
        PathCache::Entry cur;
        int start = 0;
        if (cache) {
            for (int k = depth; k >= 1; --k) {
                if (const PathCache::Entry* hit =
                        cache->lookup(digest, std::span<const int>(order.data(), k))) {
                    cur = *hit;
                    start = k;
                    ++result.cache_hits;
                    break;
                }
            }
        }
        if (start == 0) {
            cur.tree = tree;
            cur.volume_sum = 0;
            cur.truncated = false;
        }
        for (int k = start; k < depth && !cur.truncated; ++k) {
            if (!sim.extend(cur, order[k])) cur.truncated = true;
            ++result.fresh_simulation_steps;
            if (cache)
                cache->store(digest, std::span<const int>(order.data(), k + 1), cur);
        }

        PlanPath path;
        path.steps = cur.steps;
        path.volume_sum = cur.volume_sum;
        path.value = cur.volume_sum;
        if (operands.unknown_present) {
            const ItemSpec probe = operands.selectable[0];
            path.value += agent.state_value(cur.tree.bin(), cur.tree.internals(), probe);
        }

        // first selectable node of the path is what would execute
        const PlannedStep* first_sel = nullptr;
        for (const PlannedStep& st : path.steps)
            if (!st.is_preview) {
                first_sel = &st;
                break;
            }
        if (!first_sel) continue;  // nothing executable on this path

        // ties go to the path whose first action the agent prefers most
        const double first_score = first_sel->score;
        const bool better = !have_best || path.value > best.value ||
                            (path.value == best.value && first_score > best_first_score);
        if (better) {
            have_best = true;
            best = path;
            best_first_score = first_score;
            result.selectable_index = first_sel->operand;
            result.placement = first_sel->placement;
        }
    }
    result.best_path = best;
    return result;
}

}  // namespace packtree
