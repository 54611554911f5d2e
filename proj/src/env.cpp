#include "packtree/env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace packtree {

uint64_t mix_seed(uint64_t base, uint64_t stream) {
    // splitmix64 over the combined value
    uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::string constraint_name(ConstraintKind k) {
    switch (k) {
        case ConstraintKind::None: return "none";
        case ConstraintKind::Isle: return "isle";
        case ConstraintKind::Balance: return "balance";
        case ConstraintKind::Bearing: return "bearing";
        case ConstraintKind::Kinematic: return "kinematic";
        case ConstraintKind::Bridge: return "bridge";
        case ConstraintKind::HeightVar: return "heightvar";
    }
    return "none";
}

ConstraintKind constraint_from_name(const std::string& name) {
    for (ConstraintKind k :
         {ConstraintKind::None, ConstraintKind::Isle, ConstraintKind::Balance,
          ConstraintKind::Bearing, ConstraintKind::Kinematic, ConstraintKind::Bridge,
          ConstraintKind::HeightVar})
        if (constraint_name(k) == name) return k;
    throw std::invalid_argument("unknown constraint: " + name);
}

std::string SamplerSpec::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::DiscreteUniform: os << "discrete"; break;
        case Kind::ContinuousUniform: os << "continuous"; break;
        case Kind::FiniteZ: os << "finitez"; break;
        case Kind::Normal: os << "normal:" << mu << ':' << sigma; break;
        case Kind::MultiScaleNormal: os << "multiscale"; break;
        case Kind::DisturbedDiscrete: os << "disturbed:" << delta_max; break;
        case Kind::LargeScale: os << "largescale:" << nbar; break;
    }
    return os.str();
}

SamplerSpec SamplerSpec::parse(const std::string& text) {
    SamplerSpec s;
    std::string head = text, arg1, arg2;
    if (auto p = text.find(':'); p != std::string::npos) {
        head = text.substr(0, p);
        arg1 = text.substr(p + 1);
        if (auto q = arg1.find(':'); q != std::string::npos) {
            arg2 = arg1.substr(q + 1);
            arg1 = arg1.substr(0, q);
        }
    }
    if (head == "discrete") s.kind = Kind::DiscreteUniform;
    else if (head == "continuous") s.kind = Kind::ContinuousUniform;
    else if (head == "finitez") s.kind = Kind::FiniteZ;
    else if (head == "normal") {
        s.kind = Kind::Normal;
        if (!arg1.empty()) s.mu = std::stod(arg1);
        if (!arg2.empty()) s.sigma = std::stod(arg2);
    } else if (head == "multiscale") s.kind = Kind::MultiScaleNormal;
    else if (head == "disturbed") {
        s.kind = Kind::DisturbedDiscrete;
        if (!arg1.empty()) s.delta_max = std::stod(arg1);
    } else if (head == "largescale") {
        s.kind = Kind::LargeScale;
        if (!arg1.empty()) s.nbar = std::stod(arg1);
    } else {
        throw std::invalid_argument("unknown sampler: " + text);
    }
    return s;
}

namespace {

Scalar uniform(std::mt19937_64& rng, Scalar lo, Scalar hi) {
    return std::uniform_real_distribution<Scalar>(lo, hi)(rng);
}

}  // namespace

ItemSampler::ItemSampler(SamplerSpec spec, BinSpec bin) : spec_(spec), bin_(bin) {}

void ItemSampler::on_episode_start(std::mt19937_64& rng) {
    if (spec_.kind == SamplerSpec::Kind::MultiScaleNormal) {
        // item distributions of medium, small, and large sizes
        static constexpr Scalar mus[3] = {0.3, 0.1, 0.5};
        static constexpr Scalar sigmas[3] = {0.1, 0.2, 0.2};
        const int pick = static_cast<int>(rng() % 3);
        episode_mu_ = mus[pick];
        episode_sigma_ = sigmas[pick];
    } else if (spec_.kind == SamplerSpec::Kind::DisturbedDiscrete) {
        const int half = static_cast<int>(std::llround(bin_.size.x / 2));
        const int count = half * half * half;
        disturbed_weights_.resize(count);
        for (int i = 0; i < count; ++i) {
            const Scalar delta = uniform(rng, -spec_.delta_max, spec_.delta_max);
            disturbed_weights_[i] = std::max<Scalar>(0, 1 - delta);
        }
    }
}

ItemSpec ItemSampler::sample(std::mt19937_64& rng) const {
    ItemSpec item;
    switch (spec_.kind) {
        case SamplerSpec::Kind::DiscreteUniform: {
            for (int d = 0; d < 3; ++d) {
                const int half = static_cast<int>(std::llround(bin_.size[d] / 2));
                item.size[d] = static_cast<Scalar>(1 + rng() % half);
            }
            break;
        }
        case SamplerSpec::Kind::ContinuousUniform: {
            for (int d = 0; d < 3; ++d) item.size[d] = uniform(rng, 0.1, bin_.size[d] / 2);
            break;
        }
        case SamplerSpec::Kind::FiniteZ: {
            item.size.x = uniform(rng, 0.1, bin_.size.x / 2);
            item.size.y = uniform(rng, 0.1, bin_.size.y / 2);
            item.size.z = 0.1 * static_cast<Scalar>(1 + rng() % 5);
            break;
        }
        case SamplerSpec::Kind::Normal:
        case SamplerSpec::Kind::MultiScaleNormal: {
            const Scalar mu = spec_.kind == SamplerSpec::Kind::Normal ? spec_.mu : episode_mu_;
            const Scalar sg = spec_.kind == SamplerSpec::Kind::Normal ? spec_.sigma : episode_sigma_;
            std::normal_distribution<Scalar> n(mu, sg);
            for (int d = 0; d < 3; ++d) {
                Scalar v = n(rng);
                while (v < 0.1 || v > 0.5) v = n(rng);  // rejection to the supported range
                item.size[d] = v;
            }
            break;
        }
        case SamplerSpec::Kind::DisturbedDiscrete: {
            const int half = static_cast<int>(std::llround(bin_.size.x / 2));
            std::discrete_distribution<int> dist(disturbed_weights_.begin(),
                                                 disturbed_weights_.end());
            const int idx = dist(rng);
            item.size.x = static_cast<Scalar>(1 + idx / (half * half));
            item.size.y = static_cast<Scalar>(1 + (idx / half) % half);
            item.size.z = static_cast<Scalar>(1 + idx % half);
            break;
        }
        case SamplerSpec::Kind::LargeScale: {
            const Scalar hi = std::cbrt(8.0 / spec_.nbar);
            for (int d = 0; d < 3; ++d)
                item.size[d] = std::max<Scalar>(1e-3, uniform(rng, 0, hi));
            break;
        }
    }
    if (spec_.with_density) item.density = 1.0 - uniform(rng, 0, 1.0);  // (0, 1]
    if (spec_.categories > 0) item.category = static_cast<int>(rng() % spec_.categories);
    return item;
}

// ---------------------------------------------------------------------------

Scalar constraint_reward(ConstraintKind kind, const PackingTree& tree, int placed) {
    const auto& nodes = tree.internals();
    if (placed < 0 || placed >= static_cast<int>(nodes.size()))
        throw std::invalid_argument("constraint_reward: bad item index");
    const InternalNode& n = nodes[placed];
    switch (kind) {
        case ConstraintKind::None:
            return 0;
        case ConstraintKind::Isle: {
            // average center distance to packed items of the same category
            Scalar sum = 0;
            int count = 0;
            for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
                if (i == placed || nodes[i].category != n.category) continue;
                const Vec3 a = nodes[i].box.center(), b = n.box.center();
                sum += std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                                 (a.z - b.z) * (a.z - b.z));
                ++count;
            }
            return count ? -sum / count : 0;
        }
        case ConstraintKind::Balance: {
            // variance of the per-cell mass surface density over the floor
            std::vector<Scalar> xv{0, tree.bin().size.x}, yv{0, tree.bin().size.y};
            for (const InternalNode& b : nodes) {
                xv.push_back(b.box.lo(0));
                xv.push_back(b.box.hi(0));
                yv.push_back(b.box.lo(1));
                yv.push_back(b.box.hi(1));
            }
            std::sort(xv.begin(), xv.end());
            xv.erase(std::unique(xv.begin(), xv.end()), xv.end());
            std::sort(yv.begin(), yv.end());
            yv.erase(std::unique(yv.begin(), yv.end()), yv.end());
            Scalar total_area = 0, s1 = 0, s2 = 0;
            for (size_t ix = 0; ix + 1 < xv.size(); ++ix)
                for (size_t iy = 0; iy + 1 < yv.size(); ++iy) {
                    const Scalar cx = (xv[ix] + xv[ix + 1]) / 2, cy = (yv[iy] + yv[iy + 1]) / 2;
                    const Scalar area = (xv[ix + 1] - xv[ix]) * (yv[iy + 1] - yv[iy]);
                    Scalar density = 0;
                    for (const InternalNode& b : nodes)
                        if (cx > b.box.lo(0) && cx < b.box.hi(0) && cy > b.box.lo(1) &&
                            cy < b.box.hi(1))
                            density += b.mass / (b.box.size.x * b.box.size.y);
                    total_area += area;
                    s1 += density * area;
                    s2 += density * density * area;
                }
            if (total_area <= 0) return 0;
            const Scalar mean = s1 / total_area;
            return -(s2 / total_area - mean * mean);
        }
        case ConstraintKind::Bearing: {
            const BearingReport r = bearing_forces(tree);
            Scalar extra = 0;
            for (size_t i = 0; i < r.item_load.size(); ++i)
                extra += r.item_load[i] - nodes[i].mass;
            return -extra / static_cast<Scalar>(nodes.size());
        }
        case ConstraintKind::Kinematic: {
            // horizontal clearance between the placement and anything taller
            Scalar clearance = std::max(tree.bin().size.x, tree.bin().size.y);
            bool taller = false;
            for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
                if (i == placed) continue;
                const Box3& b = nodes[i].box;
                if (b.top() <= n.box.top()) continue;
                taller = true;
                const Scalar dx =
                    std::max<Scalar>(0, std::max(b.lo(0) - n.box.hi(0), n.box.lo(0) - b.hi(0)));
                const Scalar dy =
                    std::max<Scalar>(0, std::max(b.lo(1) - n.box.hi(1), n.box.lo(1) - b.hi(1)));
                clearance = std::min(clearance, std::sqrt(dx * dx + dy * dy));
            }
            if (!taller) return 1.0;
            return std::min<Scalar>(1.0, clearance / std::max(tree.bin().size.x, tree.bin().size.y));
        }
        case ConstraintKind::Bridge: {
            int supporters = 0;
            for (const ContactRect& c : support_contacts(tree, n.box))
                if (c.supporter >= 0) ++supporters;
            return static_cast<Scalar>(supporters);
        }
        case ConstraintKind::HeightVar: {
            std::vector<Box3> boxes;
            for (const InternalNode& b : nodes) boxes.push_back(b.box);
            return -heightmap(boxes, tree.bin()).variance();
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------

PackingEnv::PackingEnv(EnvConfig config, uint64_t seed)
    : cfg_(config), sampler_(config.sampler, config.bin), rng_(seed) {
    if (cfg_.setting < 1 || cfg_.setting > 3)
        throw std::invalid_argument("setting must be 1, 2 or 3");
    cfg_.sampler.with_density = cfg_.setting == 3;
    sampler_ = ItemSampler(cfg_.sampler, cfg_.bin);
}

void PackingEnv::set_sequence(std::vector<ItemSpec> seq) {
    sequence_ = std::move(seq);
    seq_pos_ = 0;
}

std::optional<ItemSpec> PackingEnv::next_item() {
    if (!sequence_.empty()) {
        if (seq_pos_ >= sequence_.size()) return std::nullopt;
        return sequence_[seq_pos_++];
    }
    return sampler_.sample(rng_);
}

bool PackingEnv::placement_allowed(const LeafPlacement& leaf, const ItemSpec& item) const {
    if (!cfg_.stability_checked()) return true;
    return check_stable(tree_, leaf.box(), item.mass()).stable;
}

void PackingEnv::compute_leaves() {
    const ItemSpec item = item_;
    leaves_ = tree_.candidates_for(
        item, [&](const LeafPlacement& l) { return placement_allowed(l, item); });
}

void PackingEnv::reset() {
    tree_ = PackingTree(cfg_.bin, cfg_.scheme, cfg_.orientations());
    sampler_.on_episode_start(rng_);
    steps_ = 0;
    episode_return_ = 0;
    seq_pos_ = 0;
    const auto item = next_item();
    if (!item) {
        done_ = true;
        leaves_.clear();
        return;
    }
    item_ = *item;
    compute_leaves();
    done_ = leaves_.empty();
}

StepResult PackingEnv::step(int action) {
    if (done_) throw std::logic_error("step on a finished episode");
    if (action < 0 || action >= static_cast<int>(leaves_.size()))
        throw std::out_of_range("action index outside the leaf set");

    const LeafPlacement leaf = leaves_[action];
    tree_.insert(item_, leaf);
    const int placed = static_cast<int>(tree_.internals().size()) - 1;

    Scalar w = item_.volume();
    if (cfg_.constraint != ConstraintKind::None) {
        const Scalar f = constraint_reward(cfg_.constraint, tree_, placed);
        const Scalar fhat = f / (cfg_.f_bar != 0 ? cfg_.f_bar : 1.0);
        w = std::max<Scalar>(0, item_.volume() + cfg_.constraint_weight * fhat);
    }
    const Scalar reward = cfg_.reward_const() * w;
    episode_return_ += reward;

    if (log_) {
        *log_ << steps_ << ' ' << item_.size.x << ' ' << item_.size.y << ' ' << item_.size.z << ' '
              << item_.density << ' ' << item_.category << ' ' << leaf.flb.x << ' ' << leaf.flb.y
              << ' ' << leaf.flb.z << ' ' << leaf.orientation << ' ' << reward << '\n';
    }
    ++steps_;

    StepResult result;
    result.reward = reward;
    const auto item = next_item();
    if (!item) {
        done_ = true;
        leaves_.clear();
        result.done = true;
        return result;
    }
    item_ = *item;
    compute_leaves();
    done_ = leaves_.empty();
    result.done = done_;
    result.next_item = item_;
    result.leaves = leaves_;
    return result;
}

Scalar estimate_f_bar(const EnvConfig& config, int episodes, uint64_t seed) {
    if (config.constraint == ConstraintKind::None) return 1.0;
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    EnvConfig cfg = config;
    cfg.f_bar = 1.0;
    Scalar total = 0;
    for (int ep = 0; ep < episodes; ++ep) {
        PackingEnv env(cfg, mix_seed(seed, ep));
        env.reset();
        Scalar episode_f = 0;
        while (!env.done()) {
            const int n = static_cast<int>(env.leaves().size());
            const int a = static_cast<int>(env.rng()() % static_cast<uint64_t>(n));
            env.step(a);
            episode_f += constraint_reward(cfg.constraint, env.tree(),
                                           static_cast<int>(env.tree().internals().size()) - 1);
        }
        total += std::abs(episode_f);
    }
    const Scalar fbar = total / episodes;
    return fbar > 1e-12 ? fbar : 1.0;
}

}  // namespace packtree
