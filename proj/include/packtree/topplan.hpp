#pragma once

#include <cstdint>
#include <list>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "packtree/agent.hpp"
#include "packtree/pct.hpp"

namespace packtree {

// One planning step's operands: items the robot can pick now, items visible
// but out of reach, and whether unseen items will keep arriving.
struct OperandSet {
    std::vector<ItemSpec> selectable;
    std::vector<ItemSpec> previewed;
    bool unknown_present = true;

    int s() const { return static_cast<int>(selectable.size()); }
    int p() const { return static_cast<int>(previewed.size()); }
    int known() const { return s() + p(); }
};

struct PlannedStep {
    int operand = 0;  // 0..s-1 selectable, s..s+p-1 previewed
    bool is_preview = false;
    LeafPlacement placement;
    double score = 0;  // agent preference of the chosen leaf at decision time
};

struct PlanPath {
    std::vector<PlannedStep> steps;
    double volume_sum = 0;
    double value = 0;  // volume_sum plus V(.) when unknown items exist
};

struct PlannerConfig {
    int budget = 64;        // m sampled item orders
    int horizon_extra = 8;  // simulate at most s+p+extra deep
    bool full_depth = false;
    bool stability = false;  // settings 1/3 pre-check during simulation
    int leaf_cap = 0;        // intercept candidate sets when > 0
};

// Sampled item orders over the known operands: exhaustive when the
// permutation count fits the budget, otherwise the arrival order plus
// duplicate-free random permutations.
std::vector<std::vector<int>> mcts_sample_orders(const OperandSet& operands, int m,
                                                 std::mt19937_64& rng);

// Global prefix cache: (state digest, item-order prefix) -> simulated tree
// snapshot and accumulated volume. LRU-evicted, exact key comparison.
class PathCache {
public:
    explicit PathCache(size_t capacity = 4096) : capacity_(capacity) {}

    struct Entry {
        PackingTree tree;
        std::vector<PlannedStep> steps;
        double volume_sum = 0;
        bool truncated = false;  // an item failed to place inside this prefix
    };

    const Entry* lookup(uint64_t digest, std::span<const int> prefix);
    void store(uint64_t digest, std::span<const int> prefix, Entry entry);
    size_t size() const { return map_.size(); }
    int hits() const { return hits_; }
    int misses() const { return misses_; }

private:
    struct Key {
        uint64_t digest;
        std::vector<int> prefix;
        bool operator==(const Key& o) const = default;
    };
    struct KeyHash {
        size_t operator()(const Key& k) const;
    };
    using Lru = std::list<std::pair<Key, Entry>>;
    Lru lru_;
    std::unordered_map<Key, Lru::iterator, KeyHash> map_;
    size_t capacity_;
    int hits_ = 0, misses_ = 0;
};

uint64_t tree_digest(const PackingTree& tree);

struct PlanResult {
    int selectable_index = -1;  // -1: no feasible selectable placement
    LeafPlacement placement;
    PlanPath best_path;
    int fresh_simulation_steps = 0;
    int cache_hits = 0;
};

// Unified planner: samples item orders, simulates each path with the agent
// choosing placements (previewed items only constrain, never execute), and
// returns the first selectable node of the best path.
PlanResult plan(const PackingTree& tree, const OperandSet& operands, Agent& agent,
                const PlannerConfig& cfg, PathCache* cache, std::mt19937_64& rng);

}  // namespace packtree
