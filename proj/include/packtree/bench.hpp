#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "packtree/agent.hpp"
#include "packtree/env.hpp"
#include "packtree/topplan.hpp"

namespace packtree {

// Policy source strings: "random", "heuristic:<dbl|bph|lsah|hm|random>",
// "checkpoint:<path>", "proxy".
struct ExperimentSpec {
    EnvConfig env;
    std::string policy = "random";
    int episodes = 100;
    uint64_t seed = 0;
    std::string sequence_file;  // paired evaluation when set
    int intercept = 0;          // test-time leaf cap for network policies
    int workers = 1;
    std::string label;
};

struct EpisodeRecord {
    int episode = 0;
    double uti = 0;
    int num = 0;
    double episode_return = 0;
    double sec_per_decision = 0;
};

struct MetricRow {
    std::string method;
    int episodes = 0;
    double uti = 0;
    double var_x1000 = 0;  // population variance of uti, reported x 10^3
    double num = 0;
    double gap = 0;  // (best - uti) / best within the comparison group
    double sec_per_decision = 0;
};

std::vector<EpisodeRecord> run_experiment(const ExperimentSpec& spec);
MetricRow summarize(const std::string& method, const std::vector<EpisodeRecord>& episodes);
void compute_gaps(std::vector<MetricRow>& rows);

std::string render_table(const std::vector<MetricRow>& rows);
void write_rows_csv(const std::vector<MetricRow>& rows, const std::string& path);
void write_rows_json(const std::vector<MetricRow>& rows, const std::string& path);
void write_episodes_csv(const std::vector<EpisodeRecord>& eps, const std::string& path);

// ---------------------------------------------------------------------------
// Item-sequence files: replayable inputs for method-paired comparisons.

std::vector<std::vector<ItemSpec>> generate_sequences(const SamplerSpec& sampler,
                                                      const BinSpec& bin, int episodes,
                                                      int length, uint64_t seed);
void write_sequences(const std::string& path, const BinSpec& bin,
                     const std::vector<std::vector<ItemSpec>>& seqs);
std::vector<std::vector<ItemSpec>> read_sequences(const std::string& path, BinSpec* bin_out);

// ---------------------------------------------------------------------------
// ToP variant episodes: a conveyor stream with s selectable and p previewed
// items, replanned each step (plan-once when offline).

struct VariantConfig {
    int s = 1;
    int p = 0;
    bool offline = false;  // s = |I|, plan once, execute the whole path
    int budget = 64;       // sampled orders per planning step
    int leaf_cap = 0;
    bool stability = false;
    bool use_cache = true;
};

struct VariantResult {
    double uti = 0;
    int num = 0;
    int lookahead_violations = 0;
    int cache_hits = 0;
    int fresh_steps = 0;
};

VariantResult run_variant_episode(const BinSpec& bin, int orientations,
                                  const std::vector<ItemSpec>& stream, const VariantConfig& cfg,
                                  Agent& agent, uint64_t seed);

// Agent factory shared by the CLI and tests.
std::unique_ptr<Agent> make_agent(const std::string& policy);

// ---------------------------------------------------------------------------
// Built-in oracle suites (exercised by the `verify` subcommand).

bool verify_suites(std::ostream& os);

}  // namespace packtree
