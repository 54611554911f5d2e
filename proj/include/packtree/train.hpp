#pragma once

#include <string>
#include <vector>

#include "packtree/policy.hpp"

namespace packtree {

struct TrainingConfig {
    EnvConfig env;
    int parallel_envs = 8;  // k_p
    int rollout_len = 5;    // k_s
    double lr = 3e-4;
    double alpha = 1.0, beta = 1.0;  // composite loss weights
    double gamma = 1.0;              // finite episodes
    double grad_clip = 0.5;
    int updates = 2000;
    double time_budget_sec = 0;  // stop after this many seconds when > 0
    uint64_t seed = 0;
    int intercept_len = 0;  // 0 -> 25 * |O|
    std::string optimizer = "sgd";  // sgd | momentum | adam
    int curve_every = 20;
    int threads = 2;
};

struct CurvePoint {
    int update = 0;
    double mean_uti = 0;
    double loss = 0;
};

struct TrainResult {
    PolicyParams params;
    std::vector<CurvePoint> curve;
    int episodes = 0;
    int updates_run = 0;
    double final_mean_uti = 0;
};

TrainResult train(const TrainingConfig& cfg);
TrainResult train(const TrainingConfig& cfg, PolicyParams start);

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path);

}  // namespace packtree
