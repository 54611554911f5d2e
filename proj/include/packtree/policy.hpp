#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "packtree/env.hpp"
#include "packtree/pct.hpp"

namespace packtree {

// Row-major matrix; biases are 1-row matrices.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
};

constexpr int kFeatureDim = 64;   // d_h = d_k = d_v
constexpr double kClip = 10.0;    // pointer logit clipping constant
constexpr int kInternalCap = 80;  // fixed internal-node length for batching
constexpr int kLeafCapPerOrientation = 25;

struct PolicyDims {
    int internal_desc = 6;
    int leaf_desc = 6;
    int item_desc = 3;
    bool operator==(const PolicyDims& o) const = default;
};

// Descriptor widths: positions and sizes, plus a density column in setting 3
// and a category column under the isle constraint.
PolicyDims dims_for(const EnvConfig& cfg);

struct PolicyParams {
    PolicyDims dims;
    Mat bW1, bb1, bW2, bb2;  // internal-node embedding MLP
    Mat lW1, lb1, lW2, lb2;  // leaf embedding MLP
    Mat nW1, nb1, nW2, nb2;  // item embedding MLP
    Mat Wq, Wk, Wv, Wo;      // attention projections
    Mat F1, f1, F2, f2;      // feed-forward block
    Mat Pq, Pk;              // pointer projections
    Mat C1, c1, C2, c2;      // critic head

    std::vector<std::pair<std::string, Mat*>> tensors();
    std::vector<std::pair<std::string, const Mat*>> tensors() const;
};

PolicyParams init_params(PolicyDims dims, uint64_t seed);
PolicyParams zeros_like(const PolicyParams& p);

void save_checkpoint(const PolicyParams& p, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);

// Raw node descriptors for one state: internals, leaves, then the item row.
// Padding rows (all-zero descriptors) are masked out of every computation.
struct StateInput {
    PolicyDims dims;
    Mat internal_desc;  // nb x internal_desc (eligible rows first)
    Mat leaf_desc;      // nl x leaf_desc
    Mat item_desc;      // 1 x item_desc
    int eligible_internals = 0;
    int eligible_leaves = 0;

    int total_rows() const { return internal_desc.rows + leaf_desc.rows + 1; }
    int leaf_row_begin() const { return internal_desc.rows; }
    int item_row() const { return internal_desc.rows + leaf_desc.rows; }
    bool eligible(int row) const;
};

StateInput make_state_input(const PackingTree& tree, const std::vector<LeafPlacement>& leaves,
                            const ItemSpec& item, const PolicyDims& dims, int pad_internals = 0,
                            int pad_leaves = 0);
StateInput make_state_input(const BinSpec& bin, std::span<const InternalNode> internals,
                            const std::vector<LeafPlacement>& leaves, const ItemSpec& item,
                            const PolicyDims& dims, int pad_internals = 0, int pad_leaves = 0);

struct ForwardCache {
    StateInput in;
    Mat x_b, x_l, x_n;          // descriptor copies per segment
    Mat a1_b, z1_b, a1_l, z1_l, a1_n, z1_n;
    Mat h0;                      // N x 64 embedded nodes
    Mat q, k, v;                 // attention projections
    Mat alpha;                   // N x N attention weights (0 on dummies)
    Mat att, gat;                // weighted values, output projection
    Mat h1;                      // skip connection
    Mat fa, fz, ff, h2;          // feed-forward block
    std::vector<double> hbar;    // pooled context
    std::vector<double> pq, pk;  // pointer query / keys (keys per leaf row)
    std::vector<double> u, clip, pi;  // per eligible leaf
    std::vector<int> leaf_rows;       // eligible leaf row indices
    double ca_pre[kFeatureDim];
    double cz[kFeatureDim];
    double value = 0;
};

// Full network evaluation: embeddings, one GAT block, pointer distribution
// over eligible leaves, critic value.
ForwardCache policy_forward(const PolicyParams& p, StateInput in);

// Gradients of alpha * (-advantage * log pi[action]) + beta * (target - V)^2
// with the advantage and target held constant.
PolicyParams policy_backward(const PolicyParams& p, const ForwardCache& c, int action,
                             double advantage, double value_target, double alpha = 1.0,
                             double beta = 1.0);

double composite_loss(const ForwardCache& c, int action, double advantage, double value_target,
                      double alpha = 1.0, double beta = 1.0);

enum class ActMode { Sample, Argmax };

int act(const ForwardCache& c, ActMode mode, std::mt19937_64& rng);

// Convenience: evaluate the policy on a state and choose a leaf.
int act(const PackingTree& tree, const std::vector<LeafPlacement>& leaves, const ItemSpec& item,
        const PolicyParams& params, ActMode mode, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Heuristic baseline policies.

enum class HeuristicKind { Dbl, OnlineBph, Lsah, Hm, Random };

std::string heuristic_name(HeuristicKind k);
HeuristicKind heuristic_from_name(const std::string& name);

int heuristic_policy(HeuristicKind kind, const PackingTree& tree,
                     const std::vector<LeafPlacement>& leaves, const ItemSpec& item,
                     std::mt19937_64& rng);

// The container-loading first-fit heuristic behind the OnlineBPH baseline:
// a deep-bottom-left-sorted free-space list where only the hosting space is
// split (guillotine residuals) and items keep their arrival orientation.
// Stale spaces whose corner placement collides are skipped.
class BphFreeSpaceHeuristic {
public:
    explicit BphFreeSpaceHeuristic(const BinSpec& bin);

    // next placement, or nullopt when no space fits the item
    std::optional<Box3> place(const ItemSpec& item, const LeafFilter& extra = {});

private:
    BinSpec bin_;
    std::vector<Box3> spaces_;
    std::vector<Box3> packed_;
};

}  // namespace packtree
