#include <CLI11.hpp>

#include <iostream>

#include "packtree/bench.hpp"
#include "packtree/config.hpp"
#include "packtree/recursive.hpp"
#include "packtree/train.hpp"
#include "packtree/verify.hpp"

using namespace packtree;

namespace {

struct EnvFlags {
    std::string config_path;
    double bx = 10, by = 10, bz = 10;
    std::string mode = "discrete";
    int setting = 2;
    std::string sampler = "discrete";
    std::string scheme = "ems";
    std::string constraint = "none";
    double constraint_weight = 0.1;
    double f_bar = 1.0;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "flat key-value config file");
        app->add_option("--bin-x", bx);
        app->add_option("--bin-y", by);
        app->add_option("--bin-z", bz);
        app->add_option("--mode", mode, "discrete | continuous");
        app->add_option("--setting", setting, "1 | 2 | 3");
        app->add_option("--sampler", sampler,
                        "discrete | continuous | finitez | normal:mu:sigma | multiscale | "
                        "disturbed:amp | largescale:nbar");
        app->add_option("--scheme", scheme, "cp | ep | ems | ev");
        app->add_option("--constraint", constraint,
                        "none | isle | balance | bearing | kinematic | bridge | heightvar");
        app->add_option("--constraint-weight", constraint_weight);
        app->add_option("--f-bar", f_bar, "random-policy constraint normalizer");
    }

    EnvConfig build() const {
        if (!config_path.empty()) return env_from_config(load_config_file(config_path));
        EnvConfig cfg;
        cfg.bin = BinSpec({bx, by, bz},
                          mode == "continuous" ? BinMode::Continuous : BinMode::Discrete);
        cfg.setting = setting;
        cfg.sampler = SamplerSpec::parse(sampler);
        cfg.scheme = scheme_from_name(scheme);
        cfg.constraint = constraint_from_name(constraint);
        cfg.constraint_weight = constraint_weight;
        cfg.f_bar = f_bar;
        return cfg;
    }
};

int worker_override() {
    if (const char* env = std::getenv("PACKTREE_WORKERS")) return std::max(1, std::atoi(env));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"packing-configuration-tree toolkit"};
    app.require_subcommand(1);

    // ---- generate ------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "write a replayable item-sequence file");
    EnvFlags gen_env;
    gen_env.attach(gen);
    std::string gen_out = "sequences.txt";
    int gen_episodes = 100, gen_length = 200;
    uint64_t gen_seed = 0;
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--episodes", gen_episodes);
    gen->add_option("--length", gen_length, "items per episode");
    gen->add_option("--seed", gen_seed);

    // ---- train ----------------------------------------------------------
    auto* tr = app.add_subcommand("train", "actor-critic training on the packing MDP");
    EnvFlags tr_env;
    tr_env.attach(tr);
    TrainingConfig tc;
    std::string tr_out = "policy.ckpt", tr_curve = "curve.csv";
    double tr_minutes = 0;
    tr->add_option("--out", tr_out);
    tr->add_option("--curve", tr_curve);
    tr->add_option("--updates", tc.updates);
    tr->add_option("--minutes", tr_minutes, "wall-clock budget; overrides --updates when set");
    tr->add_option("--lr", tc.lr);
    tr->add_option("--kp", tc.parallel_envs, "parallel environments");
    tr->add_option("--ks", tc.rollout_len, "rollout length per update");
    tr->add_option("--optimizer", tc.optimizer, "sgd | momentum | adam");
    tr->add_option("--grad-clip", tc.grad_clip);
    tr->add_option("--intercept", tc.intercept_len, "leaf interception length (0: 25*|O|)");
    tr->add_option("--seed", tc.seed);
    tr->add_option("--threads", tc.threads);
    tr->add_option("--curve-every", tc.curve_every);

    // ---- evaluate -------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "run methods on shared sequences and compare");
    EnvFlags ev_env;
    ev_env.attach(ev);
    std::vector<std::string> ev_policies;
    std::string ev_sequences, ev_csv, ev_json, ev_episodes_dir;
    int ev_episodes = 100, ev_intercept = 0, ev_workers = 1;
    uint64_t ev_seed = 0;
    ev->add_option("--policy", ev_policies,
                   "repeatable: random | heuristic:<name> | checkpoint:<path> | proxy")
        ->required();
    ev->add_option("--sequences", ev_sequences, "paired-evaluation sequence file");
    ev->add_option("--episodes", ev_episodes);
    ev->add_option("--seed", ev_seed);
    ev->add_option("--intercept", ev_intercept, "test-time leaf cap for network policies");
    ev->add_option("--workers", ev_workers);
    ev->add_option("--out-csv", ev_csv);
    ev->add_option("--out-json", ev_json);
    ev->add_option("--episodes-dir", ev_episodes_dir, "write per-episode CSV per method");

    // ---- plan -----------------------------------------------------------
    auto* pl = app.add_subcommand("plan", "tree-of-packing episodes over a sequence file");
    EnvFlags pl_env;
    pl_env.attach(pl);
    std::string pl_sequences, pl_policy = "proxy", pl_csv;
    int pl_s = 1, pl_p = 0, pl_budget = 64, pl_episodes = 50, pl_leaf_cap = 0;
    bool pl_offline = false, pl_no_cache = false;
    uint64_t pl_seed = 0;
    pl->add_option("--sequences", pl_sequences)->required();
    pl->add_option("--policy", pl_policy, "proxy | checkpoint:<path>");
    pl->add_option("--s", pl_s, "selectable items");
    pl->add_option("--p", pl_p, "previewed items");
    pl->add_option("--m", pl_budget, "sampled orders per step");
    pl->add_option("--episodes", pl_episodes);
    pl->add_option("--leaf-cap", pl_leaf_cap);
    pl->add_flag("--offline", pl_offline, "plan once over the whole sequence");
    pl->add_flag("--no-cache", pl_no_cache);
    pl->add_option("--seed", pl_seed);
    pl->add_option("--out-csv", pl_csv);

    // ---- bench-large ----------------------------------------------------
    auto* bl = app.add_subcommand("bench-large", "recursive packing at large scales");
    std::string bl_policy = "proxy", bl_csv;
    double bl_nbar = 200;
    int bl_tau = 30, bl_episodes = 100, bl_leaf_cap = 0;
    std::string bl_integrator = "spatial-ensemble";
    uint64_t bl_seed = 0;
    bl->add_option("--nbar", bl_nbar, "average problem scale");
    bl->add_option("--tau", bl_tau, "decomposition threshold (<=0: single sub-problem)");
    bl->add_option("--integrator", bl_integrator,
                   "spatial-ensemble | max-state-value | max-volume | max-return | "
                   "min-surface-area");
    bl->add_option("--policy", bl_policy, "proxy | checkpoint:<path>");
    bl->add_option("--episodes", bl_episodes);
    bl->add_option("--leaf-cap", bl_leaf_cap);
    bl->add_option("--seed", bl_seed);
    bl->add_option("--out-csv", bl_csv);

    // ---- bench-variants -------------------------------------------------
    auto* bv = app.add_subcommand("bench-variants", "sweep (s, p) operand grids");
    std::string bv_grid = "1,0;1,2;3,0;3,2", bv_policy = "proxy", bv_csv;
    int bv_episodes = 50, bv_length = 60, bv_budget = 16;
    uint64_t bv_seed = 0;
    bv->add_option("--grid", bv_grid, "semicolon-separated s,p pairs");
    bv->add_option("--policy", bv_policy);
    bv->add_option("--episodes", bv_episodes);
    bv->add_option("--length", bv_length, "stream length per episode");
    bv->add_option("--m", bv_budget);
    bv->add_option("--seed", bv_seed);
    bv->add_option("--out-csv", bv_csv);

    // ---- verify ---------------------------------------------------------
    auto* vf = app.add_subcommand("verify", "run the built-in oracle suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            EnvConfig cfg = gen_env.build();
            cfg.sampler.with_density = cfg.setting == 3;
            const auto seqs =
                generate_sequences(cfg.sampler, cfg.bin, gen_episodes, gen_length, gen_seed);
            write_sequences(gen_out, cfg.bin, seqs);
            std::cout << "wrote " << seqs.size() << " sequences to " << gen_out << '\n';
        } else if (tr->parsed()) {
            tc.env = tr_env.build();
            if (tr_minutes > 0) {
                tc.time_budget_sec = tr_minutes * 60;
                tc.updates = 1 << 30;
            }
            const TrainResult r = train(tc);
            save_checkpoint(r.params, tr_out);
            write_curve_csv(r.curve, tr_curve);
            std::cout << "updates " << r.updates_run << " episodes " << r.episodes
                      << " final mean uti " << r.final_mean_uti << '\n'
                      << "checkpoint " << tr_out << " curve " << tr_curve << '\n';
        } else if (ev->parsed()) {
            std::vector<MetricRow> rows;
            for (const std::string& policy : ev_policies) {
                ExperimentSpec spec;
                spec.env = ev_env.build();
                spec.policy = policy;
                spec.episodes = ev_episodes;
                spec.seed = ev_seed;
                spec.sequence_file = ev_sequences;
                spec.intercept = ev_intercept;
                spec.workers = worker_override() ? worker_override() : ev_workers;
                spec.label = policy;
                const auto eps = run_experiment(spec);
                rows.push_back(summarize(policy, eps));
                if (!ev_episodes_dir.empty()) {
                    std::string name = policy;
                    for (char& c : name)
                        if (c == ':' || c == '/') c = '_';
                    write_episodes_csv(eps, ev_episodes_dir + "/" + name + ".csv");
                }
            }
            compute_gaps(rows);
            std::cout << render_table(rows);
            if (!ev_csv.empty()) write_rows_csv(rows, ev_csv);
            if (!ev_json.empty()) write_rows_json(rows, ev_json);
        } else if (pl->parsed()) {
            BinSpec bin;
            const auto seqs = read_sequences(pl_sequences, &bin);
            const EnvConfig env = pl_env.build();
            auto agent = make_agent(pl_policy);
            VariantConfig vc;
            vc.s = pl_s;
            vc.p = pl_p;
            vc.budget = pl_budget;
            vc.offline = pl_offline;
            vc.leaf_cap = pl_leaf_cap;
            vc.stability = env.setting != 2;
            vc.use_cache = !pl_no_cache;
            std::vector<EpisodeRecord> eps;
            const int n = std::min<int>(pl_episodes, static_cast<int>(seqs.size()));
            for (int ep = 0; ep < n; ++ep) {
                const VariantResult r = run_variant_episode(
                    bin, env.orientations(), seqs[ep], vc, *agent, mix_seed(pl_seed, ep));
                eps.push_back({ep, r.uti, r.num, 0, 0});
            }
            std::vector<MetricRow> rows{summarize("top(s=" + std::to_string(pl_s) +
                                                      ",p=" + std::to_string(pl_p) + ")",
                                                  eps)};
            compute_gaps(rows);
            std::cout << render_table(rows);
            if (!pl_csv.empty()) write_episodes_csv(eps, pl_csv);
        } else if (bl->parsed()) {
            auto agent = make_agent(bl_policy);
            LargeScaleConfig lc;
            lc.nbar = bl_nbar;
            lc.tau = bl_tau;
            lc.integrator = integrator_from_name(bl_integrator);
            lc.leaf_cap = bl_leaf_cap;
            std::vector<EpisodeRecord> eps;
            for (int ep = 0; ep < bl_episodes; ++ep) {
                lc.seed = mix_seed(bl_seed, ep);
                const EpisodeMetrics m = run_large_scale(lc, *agent);
                eps.push_back({ep, m.uti, m.num, 0, m.seconds_per_decision});
            }
            std::vector<MetricRow> rows{summarize(bl_integrator + "(tau=" + std::to_string(bl_tau) +
                                                      ",nbar=" + std::to_string((int)bl_nbar) + ")",
                                                  eps)};
            compute_gaps(rows);
            std::cout << render_table(rows);
            if (!bl_csv.empty()) write_episodes_csv(eps, bl_csv);
        } else if (bv->parsed()) {
            auto agent = make_agent(bv_policy);
            SamplerSpec sampler;
            sampler.kind = SamplerSpec::Kind::DiscreteUniform;
            const BinSpec bin({10, 10, 10}, BinMode::Discrete);
            const auto seqs = generate_sequences(sampler, bin, bv_episodes, bv_length, bv_seed);
            std::vector<MetricRow> rows;
            std::string grid = bv_grid;
            for (char& c : grid)
                if (c == ';') c = ' ';
            std::istringstream gs(grid);
            std::string pair;
            while (gs >> pair) {
                const auto comma = pair.find(',');
                VariantConfig vc;
                vc.s = std::stoi(pair.substr(0, comma));
                vc.p = std::stoi(pair.substr(comma + 1));
                vc.budget = bv_budget;
                std::vector<EpisodeRecord> eps;
                for (int ep = 0; ep < bv_episodes; ++ep) {
                    const VariantResult r = run_variant_episode(bin, 6, seqs[ep], vc, *agent,
                                                                mix_seed(bv_seed, 7777 + ep));
                    eps.push_back({ep, r.uti, r.num, 0, 0});
                }
                rows.push_back(summarize("s=" + pair.substr(0, comma) +
                                             " p=" + pair.substr(comma + 1),
                                         eps));
            }
            compute_gaps(rows);
            std::cout << render_table(rows);
            if (!bv_csv.empty()) write_rows_csv(rows, bv_csv);
        } else if (vf->parsed()) {
            if (!verify_suites(std::cout)) return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
