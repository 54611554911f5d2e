#pragma once

#include <random>
#include <string>
#include <vector>

#include "packtree/agent.hpp"
#include "packtree/pct.hpp"

namespace packtree {

// A sub-bin carved out of the tree: a historical EMS, the packed nodes that
// intersect it (clipped to its frame), and the global leaves it contains.
struct SubProblem {
    Box3 sub_bin;
    std::vector<InternalNode> internals;  // clipped to sub_bin, original frame
    std::vector<int> leaf_ids;            // indices into the global leaf list
};

enum class IntegratorKind {
    SpatialEnsemble,
    MaxStateValue,
    MaxVolume,
    MaxReturn,
    MinSurfaceArea,
};

std::string integrator_name(IntegratorKind k);
IntegratorKind integrator_from_name(const std::string& name);

// Backtracks the EMS split lineage from (randomly chosen) unassigned leaves
// until the sub-tree scale would exceed tau, carving one sub-problem per
// stop. tau <= 0 means unbounded: a single whole-bin sub-problem. Every
// leaf ends up in at least one sub-problem.
std::vector<SubProblem> decompose(const PackingTree& tree,
                                  const std::vector<LeafPlacement>& leaves, int tau,
                                  std::mt19937_64& rng);

// Affine frame change of one sub-problem onto the original bin: positions
// shift by the sub-bin FLB and every length scales per axis by S / s^v.
struct NormalizedSub {
    std::vector<InternalNode> internals;
    std::vector<LeafPlacement> leaves;  // aligned with SubProblem::leaf_ids
    ItemSpec item;
    Vec3 offset;  // FLB(c^v)
    Vec3 scale;   // S / s^v per axis
};

NormalizedSub normalize(const SubProblem& sub, const std::vector<LeafPlacement>& leaves,
                        const ItemSpec& item, const BinSpec& bin);

// Chooses the global leaf to execute.  Spatial ensemble converts per-sub
// scores to ascending ranks and takes the leaf whose worst rank is best;
// the ablation integrators pick the best sub-bin by a scalar score and let
// the agent place inside it.  leaf_cap > 0 intercepts each sub-problem's
// leaf set before evaluation, mirroring test-time policy interception (and
// keeping rank ranges comparable across sub-bins).
int integrate(const PackingTree& tree, const std::vector<LeafPlacement>& leaves,
              const std::vector<SubProblem>& subs, const ItemSpec& item, Agent& agent,
              IntegratorKind kind, int leaf_cap = 0, std::mt19937_64* rng = nullptr);

// Per-sub-bin ascending ranks with midpoint tie sharing (1 = worst).
std::vector<double> ascending_ranks(const std::vector<double>& scores);

struct LargeScaleConfig {
    Scalar nbar = 200;
    int tau = 30;  // <= 0: single sub-problem (direct transfer)
    IntegratorKind integrator = IntegratorKind::SpatialEnsemble;
    uint64_t seed = 0;
    int max_items = 1 << 20;
    int leaf_cap = 0;  // intercept the leaf set when > 0
};

struct EpisodeMetrics {
    double uti = 0;
    int num = 0;
    double seconds_per_decision = 0;
};

// One online episode in the unit bin under the large-scale item
// distribution, running decompose / normalize / integrate each step.
EpisodeMetrics run_large_scale(const LargeScaleConfig& cfg, Agent& agent);

// Episode driven by a pre-generated sequence (paired comparisons).
EpisodeMetrics run_large_scale_sequence(const LargeScaleConfig& cfg, Agent& agent,
                                        const std::vector<ItemSpec>& sequence);

}  // namespace packtree
