#include "packtree/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "packtree/policy.hpp"
#include "packtree/stability.hpp"
#include "packtree/verify.hpp"

namespace packtree {

namespace {

struct PolicySource {
    enum class Kind { Heuristic, Checkpoint, Proxy } kind = Kind::Heuristic;
    HeuristicKind heuristic = HeuristicKind::Random;
    std::string path;
};

PolicySource parse_policy(const std::string& text) {
    PolicySource src;
    if (text == "random") {
        src.kind = PolicySource::Kind::Heuristic;
        src.heuristic = HeuristicKind::Random;
    } else if (text == "proxy") {
        src.kind = PolicySource::Kind::Proxy;
    } else if (text.rfind("heuristic:", 0) == 0) {
        src.kind = PolicySource::Kind::Heuristic;
        src.heuristic = heuristic_from_name(text.substr(10));
    } else if (text.rfind("checkpoint:", 0) == 0) {
        src.kind = PolicySource::Kind::Checkpoint;
        src.path = text.substr(11);
    } else {
        throw std::invalid_argument("unknown policy source: " + text);
    }
    return src;
}

}  // namespace

std::unique_ptr<Agent> make_agent(const std::string& policy) {
    const PolicySource src = parse_policy(policy);
    if (src.kind == PolicySource::Kind::Proxy) return std::make_unique<ProxyAgent>();
    if (src.kind == PolicySource::Kind::Checkpoint)
        return std::make_unique<PolicyAgent>(load_checkpoint(src.path));
    throw std::invalid_argument("policy source has no agent form: " + policy);
}

std::vector<EpisodeRecord> run_experiment(const ExperimentSpec& spec) {
    const PolicySource src = parse_policy(spec.policy);

    // checkpoint shape problems must surface before any episode runs
    std::optional<PolicyParams> params;
    if (src.kind == PolicySource::Kind::Checkpoint) {
        params = load_checkpoint(src.path);
        if (params->dims != dims_for(spec.env))
            throw std::runtime_error("checkpoint descriptor widths do not match the environment");
    }

    std::vector<std::vector<ItemSpec>> sequences;
    if (!spec.sequence_file.empty()) {
        BinSpec file_bin;
        sequences = read_sequences(spec.sequence_file, &file_bin);
        if (static_cast<int>(sequences.size()) < spec.episodes)
            throw std::runtime_error("sequence file holds fewer episodes than requested");
    }

    std::vector<EpisodeRecord> records(spec.episodes);

    // The OnlineBPH baseline manages its own free-space list, so it runs on
    // a raw tree instead of the leaf-indexed environment.
    auto run_bph_episode = [&](int ep) {
        EnvConfig cfg = spec.env;
        cfg.sampler.with_density = cfg.setting == 3;
        PackingTree tree(cfg.bin, cfg.scheme, cfg.orientations());
        BphFreeSpaceHeuristic bph(cfg.bin);
        ItemSampler sampler(cfg.sampler, cfg.bin);
        std::mt19937_64 rng(mix_seed(spec.seed, ep));
        sampler.on_episode_start(rng);
        const auto t0 = std::chrono::steady_clock::now();
        double ret = 0;
        int decisions = 0;
        const int cap = sequences.empty() ? 4096 : static_cast<int>(sequences[ep].size());
        for (int i = 0; i < cap; ++i) {
            const ItemSpec item = sequences.empty() ? sampler.sample(rng) : sequences[ep][i];
            LeafFilter filter;
            if (cfg.stability_checked())
                filter = [&](const LeafPlacement& l) {
                    return check_stable(tree, l.box(), item.mass()).stable;
                };
            const auto box = bph.place(item, filter);
            if (!box) break;
            tree.insert(item, {box->size, box->flb, 0, -1});
            ret += cfg.reward_const() * item.volume();
            ++decisions;
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        records[ep] = {ep, tree.utilization(), static_cast<int>(tree.internals().size()), ret,
                       decisions ? secs / decisions : 0};
    };

    auto run_episode = [&](int ep) {
        if (src.kind == PolicySource::Kind::Heuristic && src.heuristic == HeuristicKind::OnlineBph) {
            run_bph_episode(ep);
            return;
        }
        EnvConfig cfg = spec.env;
        PackingEnv env(cfg, mix_seed(spec.seed, ep));
        if (!sequences.empty()) env.set_sequence(sequences[ep]);
        std::mt19937_64 agent_rng(mix_seed(spec.seed, 0xA6E27u + ep));
        env.reset();
        int decisions = 0;
        double seconds = 0;
        while (!env.done()) {
            const auto t0 = std::chrono::steady_clock::now();
            int action = 0;
            switch (src.kind) {
                case PolicySource::Kind::Heuristic:
                    action = heuristic_policy(src.heuristic, env.tree(), env.leaves(),
                                              env.current_item(), agent_rng);
                    break;
                case PolicySource::Kind::Proxy: {
                    ProxyAgent proxy;
                    action = proxy.pick(env.tree().bin(), env.tree().internals(), env.leaves(),
                                        env.current_item());
                    break;
                }
                case PolicySource::Kind::Checkpoint: {
                    const auto& leaves = env.leaves();
                    std::vector<int> map;
                    const int n = static_cast<int>(leaves.size());
                    if (spec.intercept > 0 && n > spec.intercept) {
                        std::vector<int> idx(n);
                        for (int i = 0; i < n; ++i) idx[i] = i;
                        for (int i = 0; i < spec.intercept; ++i) {
                            const int j =
                                i + static_cast<int>(agent_rng() % static_cast<uint64_t>(n - i));
                            std::swap(idx[i], idx[j]);
                        }
                        idx.resize(spec.intercept);
                        std::sort(idx.begin(), idx.end());
                        map = std::move(idx);
                    } else {
                        map.resize(n);
                        for (int i = 0; i < n; ++i) map[i] = i;
                    }
                    std::vector<LeafPlacement> sub;
                    sub.reserve(map.size());
                    for (int i : map) sub.push_back(leaves[i]);
                    const int local = act(env.tree(), sub, env.current_item(), *params,
                                          ActMode::Argmax, agent_rng);
                    action = map[local];
                    break;
                }
            }
            env.step(action);
            seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            ++decisions;
        }
        EpisodeRecord rec;
        rec.episode = ep;
        rec.uti = env.utilization();
        rec.num = env.steps();
        rec.episode_return = env.episode_return();
        rec.sec_per_decision = decisions ? seconds / decisions : 0;
        records[ep] = rec;
    };

    const int workers = std::max(1, spec.workers);
    if (workers == 1) {
        for (int ep = 0; ep < spec.episodes; ++ep) run_episode(ep);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (int ep = next.fetch_add(1); ep < spec.episodes; ep = next.fetch_add(1))
                    run_episode(ep);
            });
        for (auto& t : pool) t.join();
    }
    return records;
}

MetricRow summarize(const std::string& method, const std::vector<EpisodeRecord>& eps) {
    MetricRow row;
    row.method = method;
    row.episodes = static_cast<int>(eps.size());
    if (eps.empty()) return row;
    double su = 0, sn = 0, st = 0;
    for (const EpisodeRecord& e : eps) {
        su += e.uti;
        sn += e.num;
        st += e.sec_per_decision;
    }
    row.uti = su / eps.size();
    row.num = sn / eps.size();
    row.sec_per_decision = st / eps.size();
    double var = 0;
    for (const EpisodeRecord& e : eps) var += (e.uti - row.uti) * (e.uti - row.uti);
    row.var_x1000 = var / eps.size() * 1000.0;
    return row;
}

void compute_gaps(std::vector<MetricRow>& rows) {
    double best = 0;
    for (const MetricRow& r : rows) best = std::max(best, r.uti);
    for (MetricRow& r : rows) r.gap = best > 0 ? (best - r.uti) / best : 0;
}

std::string render_table(const std::vector<MetricRow>& rows) {
    std::ostringstream os;
    os << std::left << std::setw(24) << "method" << std::right << std::setw(8) << "Uti"
       << std::setw(10) << "Var(e-3)" << std::setw(8) << "Num" << std::setw(8) << "Gap"
       << std::setw(12) << "s/decision" << std::setw(6) << "eps" << '\n';
    for (const MetricRow& r : rows) {
        os << std::left << std::setw(24) << r.method << std::right << std::fixed
           << std::setprecision(1) << std::setw(7) << r.uti * 100 << '%' << std::setprecision(2)
           << std::setw(10) << r.var_x1000 << std::setprecision(1) << std::setw(8) << r.num
           << std::setprecision(1) << std::setw(7) << r.gap * 100 << '%' << std::scientific
           << std::setprecision(2) << std::setw(12) << r.sec_per_decision << std::defaultfloat
           << std::setw(6) << r.episodes << '\n';
    }
    return os.str();
}

void write_rows_csv(const std::vector<MetricRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "method,episodes,uti,var_x1000,num,gap,sec_per_decision\n";
    os.precision(17);
    for (const MetricRow& r : rows)
        os << r.method << ',' << r.episodes << ',' << r.uti << ',' << r.var_x1000 << ',' << r.num
           << ',' << r.gap << ',' << r.sec_per_decision << '\n';
}

void write_rows_json(const std::vector<MetricRow>& rows, const std::string& path) {
    nlohmann::json doc = nlohmann::json::array();
    for (const MetricRow& r : rows)
        doc.push_back({{"method", r.method},
                       {"episodes", r.episodes},
                       {"uti", r.uti},
                       {"var_x1000", r.var_x1000},
                       {"num", r.num},
                       {"gap", r.gap},
                       {"sec_per_decision", r.sec_per_decision}});
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << doc.dump(2) << '\n';
}

void write_episodes_csv(const std::vector<EpisodeRecord>& eps, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "episode,uti,num,return,sec_per_decision\n";
    os.precision(17);
    for (const EpisodeRecord& e : eps)
        os << e.episode << ',' << e.uti << ',' << e.num << ',' << e.episode_return << ','
           << e.sec_per_decision << '\n';
}

// ---------------------------------------------------------------------------

std::vector<std::vector<ItemSpec>> generate_sequences(const SamplerSpec& sampler,
                                                      const BinSpec& bin, int episodes,
                                                      int length, uint64_t seed) {
    std::vector<std::vector<ItemSpec>> out(episodes);
    for (int ep = 0; ep < episodes; ++ep) {
        ItemSampler s(sampler, bin);
        std::mt19937_64 rng(mix_seed(seed, ep));
        s.on_episode_start(rng);
        out[ep].reserve(length);
        for (int i = 0; i < length; ++i) out[ep].push_back(s.sample(rng));
    }
    return out;
}

void write_sequences(const std::string& path, const BinSpec& bin,
                     const std::vector<std::vector<ItemSpec>>& seqs) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os.precision(17);
    os << "packtree-sequences 1 " << seqs.size() << ' ' << bin.size.x << ' ' << bin.size.y << ' '
       << bin.size.z << ' ' << (bin.mode == BinMode::Discrete ? "discrete" : "continuous") << '\n';
    for (const auto& seq : seqs) {
        os << "seq " << seq.size() << '\n';
        for (const ItemSpec& it : seq)
            os << it.size.x << ' ' << it.size.y << ' ' << it.size.z << ' ' << it.density << ' '
               << it.category << '\n';
    }
}

std::vector<std::vector<ItemSpec>> read_sequences(const std::string& path, BinSpec* bin_out) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open sequence file: " + path);
    std::string magic;
    int version = 0, count = 0;
    Vec3 size;
    std::string mode;
    is >> magic >> version >> count >> size.x >> size.y >> size.z >> mode;
    if (magic != "packtree-sequences" || version != 1)
        throw std::runtime_error("bad sequence file header: " + path);
    if (bin_out)
        *bin_out = BinSpec(size, mode == "discrete" ? BinMode::Discrete : BinMode::Continuous);
    std::vector<std::vector<ItemSpec>> out(count);
    for (int ep = 0; ep < count; ++ep) {
        std::string tag;
        size_t len = 0;
        is >> tag >> len;
        if (tag != "seq") throw std::runtime_error("bad sequence block in " + path);
        out[ep].resize(len);
        for (ItemSpec& it : out[ep])
            is >> it.size.x >> it.size.y >> it.size.z >> it.density >> it.category;
        if (!is) throw std::runtime_error("truncated sequence file: " + path);
    }
    return out;
}

// ---------------------------------------------------------------------------

VariantResult run_variant_episode(const BinSpec& bin, int orientations,
                                  const std::vector<ItemSpec>& stream, const VariantConfig& cfg,
                                  Agent& agent, uint64_t seed) {
    PackingTree tree(bin, Scheme::Ems, orientations);
    std::mt19937_64 rng(seed);
    PathCache cache;
    VariantResult result;

    PlannerConfig pc;
    pc.budget = cfg.budget;
    pc.leaf_cap = cfg.leaf_cap;
    pc.stability = cfg.stability;

    if (cfg.offline) {
        OperandSet ops;
        ops.selectable = stream;
        ops.unknown_present = false;
        const PlanResult r =
            plan(tree, ops, agent, pc, cfg.use_cache ? &cache : nullptr, rng);
        result.cache_hits = r.cache_hits;
        result.fresh_steps = r.fresh_simulation_steps;
        for (const PlannedStep& st : r.best_path.steps) {
            if (!tree.placement_ok(st.placement.box())) break;
            tree.insert(ops.selectable[st.operand], st.placement);
        }
        result.uti = tree.utilization();
        result.num = static_cast<int>(tree.internals().size());
        return result;
    }

    std::deque<ItemSpec> queue(stream.begin(), stream.end());
    std::vector<ItemSpec> buffer;
    while (true) {
        while (static_cast<int>(buffer.size()) < cfg.s && !queue.empty()) {
            buffer.push_back(queue.front());
            queue.pop_front();
        }
        if (buffer.empty()) break;
        OperandSet ops;
        ops.selectable = buffer;
        for (int i = 0; i < cfg.p && i < static_cast<int>(queue.size()); ++i)
            ops.previewed.push_back(queue[i]);
        ops.unknown_present = static_cast<int>(queue.size()) > ops.p();

        const PlanResult r = plan(tree, ops, agent, pc, cfg.use_cache ? &cache : nullptr, rng);
        if (r.selectable_index < 0) break;
        result.cache_hits += r.cache_hits;
        result.fresh_steps += r.fresh_simulation_steps;

        // lookahead audit: the executed box must not rest above any
        // previewed footprint planned in the chosen path
        const Box3 exec = r.placement.box();
        for (const PlannedStep& st : r.best_path.steps) {
            if (!st.is_preview) continue;
            const Box3 f = st.placement.box();
            const Scalar ox = std::min(exec.hi(0), f.hi(0)) - std::max(exec.lo(0), f.lo(0));
            const Scalar oy = std::min(exec.hi(1), f.hi(1)) - std::max(exec.lo(1), f.lo(1));
            if (ox > 0 && oy > 0 && exec.flb.z >= f.top() - bin.eps()) ++result.lookahead_violations;
        }
        tree.insert(buffer[r.selectable_index], r.placement);
        buffer.erase(buffer.begin() + r.selectable_index);
    }
    result.uti = tree.utilization();
    result.num = static_cast<int>(tree.internals().size());
    return result;
}

// ---------------------------------------------------------------------------

bool verify_suites(std::ostream& os) {
    bool ok = true;
    auto report = [&](const char* name, bool pass) {
        os << (pass ? "[PASS] " : "[FAIL] ") << name << '\n';
        ok = ok && pass;
    };

    {  // EMS incremental maintenance vs voxel brute force
        bool pass = true;
        std::mt19937_64 rng(2024);
        for (int ep = 0; ep < 25 && pass; ++ep) {
            PackingTree t(BinSpec({10, 10, 10}, BinMode::Discrete), Scheme::Ems, 2);
            for (int step = 0; step < 20; ++step) {
                const ItemSpec item{{static_cast<Scalar>(1 + rng() % 5),
                                     static_cast<Scalar>(1 + rng() % 5),
                                     static_cast<Scalar>(1 + rng() % 5)}};
                const auto leaves = t.candidates_for(item);
                if (leaves.empty()) break;
                t.insert(item, leaves[rng() % leaves.size()]);
                std::vector<Box3> packed, ems;
                for (const auto& n : t.internals()) packed.push_back(n.box);
                for (const auto& e : t.ems_set()) ems.push_back(e.box);
                if (!verify::same_box_set(
                        ems, verify::voxel_maximal_empty_boxes(packed, t.bin()), 0)) {
                    pass = false;
                    break;
                }
            }
        }
        report("ems-maximal-space oracle", pass);
    }

    {  // feasible region vs exhaustive scan
        bool pass = true;
        std::mt19937_64 rng(7);
        for (int rep = 0; rep < 40 && pass; ++rep) {
            std::vector<Rect2> obs;
            for (int i = 0; i < 4; ++i) {
                const int sx = 1 + static_cast<int>(rng() % 5), sy = 1 + static_cast<int>(rng() % 5);
                const int x = static_cast<int>(rng() % (11 - sx)),
                          y = static_cast<int>(rng() % (11 - sy));
                obs.push_back({static_cast<Scalar>(x), static_cast<Scalar>(y),
                               static_cast<Scalar>(x + sx), static_cast<Scalar>(y + sy)});
            }
            const int fx = 1 + static_cast<int>(rng() % 4), fy = 1 + static_cast<int>(rng() % 4);
            const RectRegion2 r = feasible_region_xy(fx, fy, obs, 10, 10);
            const auto ref = verify::grid_feasible_positions(fx, fy, obs, 10, 10);
            for (int x = 0; x <= 10 && pass; ++x)
                for (int y = 0; y <= 10; ++y)
                    if (r.contains(x, y) != (ref.count({x, y}) > 0)) {
                        pass = false;
                        break;
                    }
        }
        report("feasible-region scan oracle", pass);
    }

    {  // event-point candidates vs full-coordinate scan
        bool pass = true;
        std::mt19937_64 rng(11);
        for (int rep = 0; rep < 10 && pass; ++rep) {
            PackingTree t(BinSpec({10, 10, 10}, BinMode::Discrete), Scheme::EventPoint, 2);
            for (int i = 0; i < 3; ++i) {
                const ItemSpec item{{static_cast<Scalar>(1 + rng() % 5),
                                     static_cast<Scalar>(1 + rng() % 5),
                                     static_cast<Scalar>(1 + rng() % 5)}};
                const auto leaves = t.candidates_for(item);
                if (leaves.empty()) break;
                t.insert(item, leaves[rng() % leaves.size()]);
            }
            const ItemSpec probe{{static_cast<Scalar>(1 + rng() % 5),
                                  static_cast<Scalar>(1 + rng() % 5),
                                  static_cast<Scalar>(1 + rng() % 5)}};
            auto key = [](const LeafPlacement& l) {
                return std::tuple{l.orientation, l.flb.x, l.flb.y, l.flb.z};
            };
            std::set<std::tuple<int, Scalar, Scalar, Scalar>> got, want;
            for (const auto& l : t.candidates_for(probe)) got.insert(key(l));
            for (const auto& l : verify::scan_event_candidates(t, probe)) want.insert(key(l));
            pass = got == want;
        }
        report("event-point scan oracle", pass);
    }

    {  // stability: verdict vs hull oracle and exact load conservation
        bool pass = true;
        std::mt19937_64 rng(13);
        for (int rep = 0; rep < 200 && pass; ++rep) {
            PackingTree t(BinSpec({10, 10, 10}, BinMode::Discrete), Scheme::Ems, 2);
            for (int i = 0; i < 8; ++i) {
                const ItemSpec item{{static_cast<Scalar>(1 + rng() % 4),
                                     static_cast<Scalar>(1 + rng() % 4),
                                     static_cast<Scalar>(1 + rng() % 3)}};
                auto leaves = t.candidates_for(item, [&](const LeafPlacement& l) {
                    return check_stable(t, l.box(), item.mass()).stable;
                });
                if (leaves.empty()) break;
                t.insert(item, leaves[rng() % leaves.size()]);
            }
            const auto b = bearing_forces(t);
            if (b.floor_total != b.mass_total) pass = false;
        }
        report("stability conservation", pass);
    }

    return ok;
}

}  // namespace packtree
