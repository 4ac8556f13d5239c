#include "deepiot/mdp.hpp"

#include "deepiot/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace deepiot {

unsigned long long action_space_size(int L, int M) {
    if (L < 1 || M < 0) throw std::invalid_argument("action_space_size: need L >= 1, M >= 0");
    // sum_i C(L+i-1, L-1) telescopes to C(L+M, L)
    unsigned long long result = 1;
    for (int i = 1; i <= L; ++i) {
        const unsigned long long num = static_cast<unsigned long long>(M + i);
        if (result > std::numeric_limits<unsigned long long>::max() / num)
            throw std::overflow_error("action_space_size: exceeds 64-bit range");
        result = result * num / i; // exact: C(M+i, i) divisible step by step
    }
    return result;
}

std::vector<Allocation> enumerate_actions(int L, int M, unsigned long long max_count) {
    const unsigned long long count = action_space_size(L, M);
    if (count > max_count) throw std::length_error("enumerate_actions: action space exceeds the enumeration budget");

    std::vector<Allocation> out;
    out.reserve(static_cast<size_t>(count));
    std::vector<int> a(L, 0);
    // lexicographic successor: bump the rightmost position whose prefix still
    // leaves budget for the increment, zeroing everything after it
    while (true) {
        out.push_back(Allocation{a});
        int prefix = std::accumulate(a.begin(), a.end(), 0);
        int l = L - 1;
        while (l >= 0) {
            prefix -= a[l]; // sum of a[0..l-1]
            if (prefix + a[l] + 1 <= M) {
                ++a[l];
                std::fill(a.begin() + l + 1, a.end(), 0);
                break;
            }
            --l;
        }
        if (l < 0) break;
    }
    return out;
}

Trajectory run_episode(Policy& policy, const CellConfig& cfg, Rng& rng) {
    const std::string code = policy.forward_code(cfg);
    Trajectory traj;
    CellState s = initial_state(cfg, rng);
    while (s.all_alive()) {
        const Allocation a = policy.decide(s, rng);
        std::vector<ChannelDraw> next(cfg.L);
        for (int l = 0; l < cfg.L; ++l) next[l] = sample_channels(cfg, l, rng);
        CellState nxt = step(cfg, s, a, next, code);
        traj.states.push_back(std::move(s));
        traj.actions.push_back(a);
        traj.rewards.push_back(1.0);
        s = std::move(nxt);
    }
    traj.lifespan = static_cast<long>(traj.rewards.size());
    return traj;
}

LifespanEstimate estimate_lifespan(Policy& policy, const CellConfig& cfg, long episodes, Rng& rng) {
    if (episodes < 1) throw std::invalid_argument("estimate_lifespan: episodes must be >= 1");
    double sum = 0.0, sumsq = 0.0;
    for (long e = 0; e < episodes; ++e) {
        const Trajectory t = run_episode(policy, cfg, rng);
        sum += t.lifespan;
        sumsq += static_cast<double>(t.lifespan) * t.lifespan;
    }
    LifespanEstimate est;
    est.episodes = episodes;
    est.mean = sum / episodes;
    double half = 0.0;
    if (episodes > 1) {
        const double var = std::max(0.0, (sumsq - episodes * est.mean * est.mean) / (episodes - 1));
        half = 1.959963984540054 * std::sqrt(var / episodes);
    }
    est.ci95_lo = est.mean - half;
    est.ci95_hi = est.mean + half;
    return est;
}

std::vector<double> shaped_rewards(long lifespan, double rho) {
    if (lifespan < 1) throw std::invalid_argument("shaped_rewards: lifespan must be >= 1");
    if (!(rho > 1.0)) throw std::invalid_argument("shaped_rewards: rho must be > 1");
    // r(t) = T rho^{t-1} (rho - 1) / (rho^T - 1); expm1 keeps the denominator
    // accurate for small exponents
    const double log_rho = std::log(rho);
    const double denom = std::expm1(lifespan * log_rho);
    const double scale = static_cast<double>(lifespan) * (rho - 1.0) / denom;
    std::vector<double> r(lifespan);
    double pow_t = 1.0; // rho^{t-1}
    for (long t = 0; t < lifespan; ++t) {
        r[t] = scale * pow_t;
        pow_t *= rho;
    }
    return r;
}

DepletionTrace run_depletion_trace(Policy& policy, const CellConfig& cfg, Rng& rng) {
    const std::string code = policy.forward_code(cfg);
    DepletionTrace trace;
    trace.depletion_cycle.assign(cfg.L, -1);

    CellState s = initial_state(cfg, rng);
    long alive = cfg.L;
    while (alive > 0) {
        Allocation a = policy.decide(s, rng);
        for (int l = 0; l < cfg.L; ++l)
            if (s.devices[l].energy <= 0.0) a.a[l] = 0; // dead devices get nothing

        trace.energies.push_back({});
        trace.allocations.push_back({});
        for (int l = 0; l < cfg.L; ++l) {
            trace.energies.back().push_back(s.devices[l].energy);
            trace.allocations.back().push_back(a.a[l]);
        }

        for (int l = 0; l < cfg.L; ++l) {
            if (s.devices[l].energy <= 0.0) {
                s.devices[l].channel = sample_channels(cfg, l, rng);
                continue; // stopped consuming
            }
            const double p = transmit_power(cfg, l, s.devices[l].channel, a.a[l], code);
            s.devices[l].energy -= energy_breakdown(cfg, p, a.a[l]).total();
            s.devices[l].channel = sample_channels(cfg, l, rng);
            if (s.devices[l].energy <= 0.0) {
                trace.depletion_cycle[l] = s.cycle + 1;
                --alive;
            }
        }
        s.cycle += 1;
    }
    return trace;
}

namespace {

class NoFeedbackPolicy final : public Policy {
public:
    explicit NoFeedbackPolicy(std::string code) : code_(std::move(code)) {}
    Allocation decide(const CellState& s, Rng&) override {
        return Allocation{std::vector<int>(s.devices.size(), 0)};
    }
    std::string name() const override { return "nofeedback_" + code_; }
    std::string forward_code(const CellConfig&) const override { return code_; }

private:
    std::string code_;
};

class UniformPolicy final : public Policy {
public:
    explicit UniformPolicy(int budget) : budget_(budget) {}
    Allocation decide(const CellState& s, Rng&) override {
        const int L = static_cast<int>(s.devices.size());
        const int M = budget_;
        Allocation alloc{std::vector<int>(L, M / L)};
        const int rem = M - L * (M / L);
        for (int i = 0; i < rem; ++i) alloc.a[(s.cycle + i) % L] += 1; // rotate the remainder
        return alloc;
    }
    std::string name() const override { return "uniform"; }

private:
    int budget_ = 0;
};

class GreedyMinEnergyPolicy final : public Policy {
public:
    explicit GreedyMinEnergyPolicy(CellConfig cfg) : cfg_(std::move(cfg)) {}
    Allocation decide(const CellState& s, Rng&) override {
        const int L = static_cast<int>(s.devices.size());
        Allocation alloc{std::vector<int>(L, 0)};
        int best = -1;
        for (int l = 0; l < L; ++l) {
            const auto mask = eligibility_mask(cfg_, l, s.devices[l]);
            if (cfg_.M >= 1 && mask[cfg_.M - 1]) continue; // full budget dominated here
            if (best < 0 || s.devices[l].energy < s.devices[best].energy) best = l;
        }
        if (best >= 0) alloc.a[best] = cfg_.M;
        return alloc;
    }
    std::string name() const override { return "greedy_min_energy"; }

private:
    CellConfig cfg_;
};

class RandomPolicy final : public Policy {
public:
    RandomPolicy(int L, int M) : actions_(enumerate_actions(L, M)) {}
    Allocation decide(const CellState&, Rng& rng) override { return actions_[rng.below(actions_.size())]; }
    std::string name() const override { return "random"; }

private:
    std::vector<Allocation> actions_;
};

} // namespace

std::unique_ptr<Policy> make_no_feedback_policy(const std::string& code) {
    return std::make_unique<NoFeedbackPolicy>(code);
}

std::unique_ptr<Policy> make_uniform_policy(int budget) { return std::make_unique<UniformPolicy>(budget); }

std::unique_ptr<Policy> make_greedy_min_energy_policy(const CellConfig& cfg) {
    return std::make_unique<GreedyMinEnergyPolicy>(cfg);
}

std::unique_ptr<Policy> make_random_policy(int L, int M) { return std::make_unique<RandomPolicy>(L, M); }

std::vector<std::unique_ptr<Policy>> baseline_policies(const CellConfig& cfg) {
    std::vector<std::unique_ptr<Policy>> out;
    for (const auto& [code, thr] : cfg.forward_thresholds_db) {
        (void)thr;
        out.push_back(std::make_unique<NoFeedbackPolicy>(code));
    }
    out.push_back(std::make_unique<UniformPolicy>(cfg.M));
    out.push_back(std::make_unique<GreedyMinEnergyPolicy>(cfg));
    out.push_back(std::make_unique<RandomPolicy>(cfg.L, cfg.M));
    return out;
}

} // namespace deepiot
