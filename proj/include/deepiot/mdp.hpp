#pragma once

#include "deepiot/state.hpp"

#include <memory>
#include <string>
#include <vector>

namespace deepiot {

/// One recorded episode. All lists have length T = lifespan in cycles; the
/// unshaped reward is 1 per completed cycle, so the rewards sum to T.
struct Trajectory {
    std::vector<CellState> states;
    std::vector<Allocation> actions;
    std::vector<double> rewards;
    long lifespan = 0;
};

class Policy {
public:
    virtual ~Policy() = default;

    /// Must return an allocation satisfying the subcarrier budget.
    virtual Allocation decide(const CellState& state, Rng& rng) = 0;

    /// Optional learning hook.
    virtual void learn(const Trajectory&) {}

    virtual std::string name() const = 0;

    /// Code used for a = 0 transmissions when this policy is in charge.
    virtual std::string forward_code(const CellConfig& cfg) const { return cfg.forward_code; }
};

/// Number of feasible allocations of at most M subcarriers over L devices,
/// i.e. sum_i C(L+i-1, L-1) = C(L+M, L). Throws on 64-bit overflow.
unsigned long long action_space_size(int L, int M);

/// All feasible allocations in lexicographic order. Guarded by a count
/// budget; throws std::length_error when the space is too large to list.
std::vector<Allocation> enumerate_actions(int L, int M, unsigned long long max_count = 2'000'000);

/// Run one episode from full reserves until the first cycle that cannot be
/// completed (some device without strictly positive energy). Deterministic
/// given the rng state.
Trajectory run_episode(Policy& policy, const CellConfig& cfg, Rng& rng);

struct LifespanEstimate {
    double mean = 0.0;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
    long episodes = 0;
};

LifespanEstimate estimate_lifespan(Policy& policy, const CellConfig& cfg, long episodes, Rng& rng);

/// Geometric per-cycle rewards r(t) = T (rho^t - rho^{t-1}) / (rho^T - 1);
/// the sum over a whole episode telescopes back to T exactly.
std::vector<double> shaped_rewards(long lifespan, double rho);

/// Simulation past the first death: each device runs until its own reserve
/// goes negative (dead devices stop consuming and are no longer allocated).
/// Used for energy-trace experiments.
struct DepletionTrace {
    // energies[t][l] = reserve of device l at the start of cycle t
    std::vector<std::vector<double>> energies;
    std::vector<std::vector<int>> allocations;
    std::vector<long> depletion_cycle; // per device: first cycle with negative reserve
};

DepletionTrace run_depletion_trace(Policy& policy, const CellConfig& cfg, Rng& rng);

// Baseline policies.
std::unique_ptr<Policy> make_no_feedback_policy(const std::string& code);
std::unique_ptr<Policy> make_uniform_policy(int budget); // floor(M/L) each, remainder rotated by cycle
std::unique_ptr<Policy> make_greedy_min_energy_policy(const CellConfig& cfg); // full budget to the neediest eligible device
std::unique_ptr<Policy> make_random_policy(int L, int M); // uniform over all feasible allocations

std::vector<std::unique_ptr<Policy>> baseline_policies(const CellConfig& cfg);

} // namespace deepiot
