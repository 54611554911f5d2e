#include "packtree/train.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <memory>
#include <thread>

namespace packtree {

namespace {

struct Transition {
    ForwardCache cache;
    int action = 0;
    double reward = 0;
    double value_next = 0;
};

void add_scaled(PolicyParams& dst, const PolicyParams& src, double scale) {
    auto d = dst.tensors();
    auto s = src.tensors();
    for (size_t i = 0; i < d.size(); ++i)
        for (size_t j = 0; j < d[i].second->v.size(); ++j)
            d[i].second->v[j] += scale * s[i].second->v[j];
}

double grad_norm(PolicyParams& g) {
    double s = 0;
    for (auto& [name, mat] : g.tensors()) {
        (void)name;
        for (double v : mat->v) s += v * v;
    }
    return std::sqrt(s);
}

void scale_params(PolicyParams& g, double scale) {
    for (auto& [name, mat] : g.tensors()) {
        (void)name;
        for (double& v : mat->v) v *= scale;
    }
}

struct Optimizer {
    std::string kind;
    double lr;
    PolicyParams m, v;  // momentum / adam state
    int t = 0;

    Optimizer(const std::string& k, double rate, const PolicyParams& shape)
        : kind(k), lr(rate), m(zeros_like(shape)), v(zeros_like(shape)) {}

    void step(PolicyParams& params, PolicyParams& grad) {
        ++t;
        auto tp = params.tensors();
        auto tg = grad.tensors();
        auto tm = m.tensors();
        auto tv = v.tensors();
        for (size_t i = 0; i < tp.size(); ++i) {
            auto& pv = tp[i].second->v;
            auto& gv = tg[i].second->v;
            auto& mv = tm[i].second->v;
            auto& vv = tv[i].second->v;
            for (size_t j = 0; j < pv.size(); ++j) {
                if (kind == "sgd") {
                    pv[j] -= lr * gv[j];
                } else if (kind == "momentum") {
                    mv[j] = 0.9 * mv[j] + gv[j];
                    pv[j] -= lr * mv[j];
                } else {  // adam
                    mv[j] = 0.9 * mv[j] + 0.1 * gv[j];
                    vv[j] = 0.999 * vv[j] + 0.001 * gv[j] * gv[j];
                    const double mhat = mv[j] / (1.0 - std::pow(0.9, t));
                    const double vhat = vv[j] / (1.0 - std::pow(0.999, t));
                    pv[j] -= lr * mhat / (std::sqrt(vhat) + 1e-8);
                }
            }
        }
    }
};

}  // namespace

TrainResult train(const TrainingConfig& cfg) {
    EnvConfig probe = cfg.env;
    return train(cfg, init_params(dims_for(probe), mix_seed(cfg.seed, 0xA11CE)));
}

TrainResult train(const TrainingConfig& cfg, PolicyParams start) {
    const auto t0 = std::chrono::steady_clock::now();
    const int kp = cfg.parallel_envs, ks = cfg.rollout_len;
    const int cap = cfg.intercept_len > 0
                        ? cfg.intercept_len
                        : kLeafCapPerOrientation * cfg.env.orientations();

    TrainResult result;
    result.params = std::move(start);
    if (result.params.dims != dims_for(cfg.env))
        throw std::invalid_argument("policy dims do not match the environment");

    struct EnvSlot {
        std::unique_ptr<PackingEnv> env;
        std::mt19937_64 agent_rng;
        std::vector<int> leaf_map;  // local leaf index -> env action index
        std::optional<ForwardCache> pending;
    };
    std::vector<EnvSlot> slots(kp);
    for (int i = 0; i < kp; ++i) {
        slots[i].env = std::make_unique<PackingEnv>(cfg.env, mix_seed(cfg.seed, i));
        slots[i].agent_rng.seed(mix_seed(cfg.seed, 0x5eed + i));
        slots[i].env->reset();
    }

    auto intercept = [&](EnvSlot& s) {
        const auto& leaves = s.env->leaves();
        const int n = static_cast<int>(leaves.size());
        s.leaf_map.clear();
        if (n <= cap) {
            for (int i = 0; i < n; ++i) s.leaf_map.push_back(i);
        } else {
            std::vector<int> idx(n);
            for (int i = 0; i < n; ++i) idx[i] = i;
            for (int i = 0; i < cap; ++i) {
                const int j = i + static_cast<int>(s.agent_rng() % static_cast<uint64_t>(n - i));
                std::swap(idx[i], idx[j]);
            }
            idx.resize(cap);
            std::sort(idx.begin(), idx.end());
            s.leaf_map = std::move(idx);
        }
    };
    auto forward_state = [&](EnvSlot& s) {
        intercept(s);
        std::vector<LeafPlacement> sub;
        sub.reserve(s.leaf_map.size());
        for (int i : s.leaf_map) sub.push_back(s.env->leaves()[i]);
        return policy_forward(result.params,
                              make_state_input(s.env->tree(), sub, s.env->current_item(),
                                               result.params.dims));
    };

    Optimizer opt(cfg.optimizer, cfg.lr, result.params);
    std::deque<double> window_utis;
    double window_loss = 0;
    int window_count = 0;

    for (int update = 0; update < cfg.updates; ++update) {
        if (cfg.time_budget_sec > 0) {
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (elapsed >= cfg.time_budget_sec) break;
        }

        std::vector<Transition> batch;
        batch.reserve(static_cast<size_t>(kp) * ks);
        for (int step = 0; step < ks; ++step) {
            for (int e = 0; e < kp; ++e) {
                EnvSlot& s = slots[e];
                if (s.env->done()) {
                    window_utis.push_back(s.env->utilization());
                    ++result.episodes;
                    s.env->reset();
                    s.pending.reset();
                    if (s.env->done()) continue;  // degenerate first item
                }
                Transition tr;
                // leaf_map must match the cached state; recompute only when
                // no pending cache carried over from the previous step
                if (s.pending) {
                    tr.cache = std::move(*s.pending);
                    s.pending.reset();
                } else {
                    tr.cache = forward_state(s);
                }
                tr.action = act(tr.cache, ActMode::Sample, s.agent_rng);
                const int env_action = s.leaf_map[tr.action];
                const StepResult sr = s.env->step(env_action);
                tr.reward = sr.reward;
                if (sr.done) {
                    tr.value_next = 0;
                } else {
                    s.pending = forward_state(s);
                    tr.value_next = s.pending->value;
                }
                batch.push_back(std::move(tr));
            }
        }
        if (batch.empty()) continue;

        // gradient of the composite loss, averaged over the batch
        const int nthreads = std::max(1, cfg.threads);
        std::vector<PolicyParams> partial;
        std::vector<double> partial_loss(nthreads, 0.0);
        partial.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) partial.push_back(zeros_like(result.params));
        {
            std::vector<std::thread> pool;
            const size_t chunk = (batch.size() + nthreads - 1) / nthreads;
            for (int t = 0; t < nthreads; ++t) {
                pool.emplace_back([&, t]() {
                    const size_t lo = t * chunk, hi = std::min(batch.size(), lo + chunk);
                    for (size_t i = lo; i < hi; ++i) {
                        const Transition& tr = batch[i];
                        const double target = tr.reward + cfg.gamma * tr.value_next;
                        const double adv = target - tr.cache.value;
                        partial_loss[t] += composite_loss(tr.cache, tr.action, adv, target,
                                                          cfg.alpha, cfg.beta);
                        const PolicyParams g = policy_backward(result.params, tr.cache, tr.action,
                                                               adv, target, cfg.alpha, cfg.beta);
                        add_scaled(partial[t], g, 1.0);
                    }
                });
            }
            for (auto& th : pool) th.join();
        }
        PolicyParams grad = std::move(partial[0]);
        for (int t = 1; t < nthreads; ++t) add_scaled(grad, partial[t], 1.0);
        scale_params(grad, 1.0 / static_cast<double>(batch.size()));
        double loss = 0;
        for (double l : partial_loss) loss += l;
        loss /= static_cast<double>(batch.size());
        if (!std::isfinite(loss)) throw std::runtime_error("training diverged: non-finite loss");

        if (cfg.grad_clip > 0) {
            const double norm = grad_norm(grad);
            if (norm > cfg.grad_clip) scale_params(grad, cfg.grad_clip / norm);
        }
        opt.step(result.params, grad);
        result.updates_run = update + 1;

        window_loss += loss;
        ++window_count;
        if ((update + 1) % cfg.curve_every == 0) {
            double mean_uti = result.curve.empty() ? 0.0 : result.curve.back().mean_uti;
            if (!window_utis.empty()) {
                double s = 0;
                for (double u : window_utis) s += u;
                mean_uti = s / static_cast<double>(window_utis.size());
            }
            result.curve.push_back({update + 1, mean_uti, window_loss / window_count});
            window_utis.clear();
            window_loss = 0;
            window_count = 0;
        }
    }

    if (!result.curve.empty()) {
        double s = 0;
        int c = 0;
        for (size_t i = result.curve.size() >= 5 ? result.curve.size() - 5 : 0;
             i < result.curve.size(); ++i) {
            s += result.curve[i].mean_uti;
            ++c;
        }
        result.final_mean_uti = s / std::max(1, c);
    }
    return result;
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write curve csv: " + path);
    os << "update,mean_uti,loss\n";
    for (const CurvePoint& p : curve) os << p.update << ',' << p.mean_uti << ',' << p.loss << '\n';
}

}  // namespace packtree
