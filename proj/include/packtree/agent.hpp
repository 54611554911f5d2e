#pragma once

#include <memory>
#include <span>

#include "packtree/policy.hpp"

namespace packtree {

// Scoring interface shared by the recursive integrator and the planner:
// per-leaf packing preferences (higher is better) and a state-value
// estimate for unknown futures.
class Agent {
public:
    virtual ~Agent() = default;
    virtual std::vector<double> leaf_scores(const BinSpec& bin,
                                            std::span<const InternalNode> internals,
                                            const std::vector<LeafPlacement>& leaves,
                                            const ItemSpec& item) = 0;
    virtual double state_value(const BinSpec& bin, std::span<const InternalNode> internals,
                               const ItemSpec& item) = 0;

    // argmax placement with ties toward the lowest index
    int pick(const BinSpec& bin, std::span<const InternalNode> internals,
             const std::vector<LeafPlacement>& leaves, const ItemSpec& item);
};

// Trained (or freshly initialized) network: action probabilities as scores,
// critic output as the state value.
class PolicyAgent : public Agent {
public:
    explicit PolicyAgent(PolicyParams params) : params_(std::move(params)) {}
    const PolicyParams& params() const { return params_; }

    std::vector<double> leaf_scores(const BinSpec& bin, std::span<const InternalNode> internals,
                                    const std::vector<LeafPlacement>& leaves,
                                    const ItemSpec& item) override;
    double state_value(const BinSpec& bin, std::span<const InternalNode> internals,
                       const ItemSpec& item) override;

private:
    PolicyParams params_;
};

// Training-free stand-in: deep-bottom-left style leaf preferences evaluated
// in the (normalized) bin frame, and remaining-free-volume fraction as the
// value estimate.
class ProxyAgent : public Agent {
public:
    std::vector<double> leaf_scores(const BinSpec& bin, std::span<const InternalNode> internals,
                                    const std::vector<LeafPlacement>& leaves,
                                    const ItemSpec& item) override;
    double state_value(const BinSpec& bin, std::span<const InternalNode> internals,
                       const ItemSpec& item) override;
};

}  // namespace packtree
