#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "packtree/pct.hpp"
#include "packtree/stability.hpp"

namespace packtree {

enum class ConstraintKind { None, Isle, Balance, Bearing, Kinematic, Bridge, HeightVar };

std::string constraint_name(ConstraintKind k);
ConstraintKind constraint_from_name(const std::string& name);

struct SamplerSpec {
    enum class Kind {
        DiscreteUniform,    // integer sizes in [1, S^d/2]
        ContinuousUniform,  // U(0.1, S^d/2) per axis
        FiniteZ,            // x,y ~ U(0.1, 0.5); z from {0.1,...,0.5}
        Normal,             // N(mu, sigma^2) rejected to [0.1, 0.5]
        MultiScaleNormal,   // per-episode pick among the three training normals
        DisturbedDiscrete,  // discrete with per-sequence probability disturbance
        LargeScale,         // U(0, (8/nbar)^(1/3)) per axis
    };
    Kind kind = Kind::DiscreteUniform;
    Scalar mu = 0.3, sigma = 0.1;
    Scalar nbar = 200;
    Scalar delta_max = 0.5;  // DisturbedDiscrete amplitude
    int categories = 4;
    bool with_density = false;  // setting 3

    std::string to_string() const;
    static SamplerSpec parse(const std::string& text);
};

// Stateful item source. Episode-scoped randomness (mixture component,
// probability disturbance) is drawn in on_episode_start.
class ItemSampler {
public:
    ItemSampler(SamplerSpec spec, BinSpec bin);
    void on_episode_start(std::mt19937_64& rng);
    ItemSpec sample(std::mt19937_64& rng) const;
    const SamplerSpec& spec() const { return spec_; }

private:
    SamplerSpec spec_;
    BinSpec bin_;
    Scalar episode_mu_ = 0.3, episode_sigma_ = 0.1;
    std::vector<Scalar> disturbed_weights_;
};

struct EnvConfig {
    BinSpec bin{{10, 10, 10}, BinMode::Discrete};
    int setting = 2;  // 1: stability, 2 orientations; 2: free, 6; 3: 1 + density
    SamplerSpec sampler;
    Scheme scheme = Scheme::Ems;
    ConstraintKind constraint = ConstraintKind::None;
    Scalar constraint_weight = 0.1;  // c
    Scalar f_bar = 1.0;              // random-policy normalizer for f

    int orientations() const { return setting == 2 ? 6 : 2; }
    bool stability_checked() const { return setting == 1 || setting == 3; }
    Scalar reward_const() const { return 10.0 / bin.volume(); }
};

struct StepResult {
    Scalar reward = 0;
    bool done = false;
    ItemSpec next_item;
    std::vector<LeafPlacement> leaves;
};

// Raw constraint objective f for the most recently inserted item (index
// `placed` in the internal list). Larger is better.
Scalar constraint_reward(ConstraintKind kind, const PackingTree& tree, int placed);

class PackingEnv {
public:
    PackingEnv(EnvConfig config, uint64_t seed);

    // Replay a fixed item sequence instead of sampling (paired evaluation).
    void set_sequence(std::vector<ItemSpec> seq);
    void set_log(std::ostream* os) { log_ = os; }

    void reset();
    StepResult step(int action);

    const EnvConfig& config() const { return cfg_; }
    const PackingTree& tree() const { return tree_; }
    const ItemSpec& current_item() const { return item_; }
    const std::vector<LeafPlacement>& leaves() const { return leaves_; }
    bool done() const { return done_; }
    int steps() const { return steps_; }
    Scalar episode_return() const { return episode_return_; }
    Scalar utilization() const { return tree_.utilization(); }
    std::mt19937_64& rng() { return rng_; }

    // Stability pre-check used to filter leaves in settings 1 and 3.
    bool placement_allowed(const LeafPlacement& leaf, const ItemSpec& item) const;

private:
    EnvConfig cfg_;
    ItemSampler sampler_;
    std::mt19937_64 rng_;
    PackingTree tree_;
    ItemSpec item_;
    std::vector<LeafPlacement> leaves_;
    bool done_ = true;
    int steps_ = 0;
    Scalar episode_return_ = 0;
    std::vector<ItemSpec> sequence_;
    size_t seq_pos_ = 0;
    std::ostream* log_ = nullptr;

    std::optional<ItemSpec> next_item();
    void compute_leaves();
};

// Monte-Carlo estimate of f_bar: mean |episode constraint total| under a
// random policy; defaults to 1 when the constraint is None or the estimate
// degenerates.
Scalar estimate_f_bar(const EnvConfig& config, int episodes, uint64_t seed);

uint64_t mix_seed(uint64_t base, uint64_t stream);

}  // namespace packtree
