#pragma once

#include "deepiot/itpg.hpp"
#include "deepiot/mdp.hpp"
#include "deepiot/mlp.hpp"

#include <stdexcept>
#include <vector>

namespace deepiot {

/// Raised when the enumerated action space exceeds the training budget; the
/// size report is the point (this is where full enumeration stops scaling).
class ActionSpaceBudgetError : public std::runtime_error {
public:
    ActionSpaceBudgetError(unsigned long long size, unsigned long long budget);
    unsigned long long size;
    unsigned long long budget;
};

struct DpFaOptions {
    int hidden = 128;
    long updates = 6000;
    int batch_size = 48;
    int kmc = 16; // next-channel draws per Bellman target
    double learning_rate = 1e-3;
    long target_sync_period = 200;
    long rollout_period = 10; // one fresh episode every this many updates
    double epsilon_start = 0.25;
    double epsilon_end = 0.02;
    size_t buffer_capacity = 200000;
    unsigned long long action_budget = 4096;
    long eval_every_updates = 0;
    long eval_episodes = 30;
};

/// State features: per device [E/rho, |h|^2/sigma2, |h~|^2/sigma2_fb].
std::vector<double> cell_features(const CellConfig& cfg, const CellState& s);

/// q-network over (state features, one-hot action): widths {3L+|A|, h, h, 1}.
Mlp make_q_net(const CellConfig& cfg, int num_actions, int hidden, Rng& rng);

/// One-sample Bellman target: completed-cycle reward plus the Monte-Carlo
/// average (over kmc fresh channel draws) of the best target-net value at the
/// successor state. Terminal states target zero.
double bellman_target(const Mlp& target_net, const CellConfig& cfg, const CellState& s,
                      const Allocation& a, const std::vector<Allocation>& actions, int kmc, Rng& rng);

/// Greedy policy over a trained q-network (argmax across the enumerated
/// feasible actions, lexicographic tie-break).
class DpFaPolicy final : public Policy {
public:
    DpFaPolicy(Mlp net, CellConfig cfg);
    Allocation decide(const CellState& state, Rng& rng) override;
    std::string name() const override { return "dp_fa"; }
    const Mlp& net() const { return net_; }

private:
    Mlp net_;
    CellConfig cfg_;
    std::vector<Allocation> actions_;
};

struct DpFaTrainResult {
    Mlp net;
    std::vector<TrainLogRow> log;
};

/// Fitted q-iteration on the squared Bellman residual with a periodically
/// synced target network; (state, action) pairs come from epsilon-greedy
/// rollouts of the current greedy policy.
DpFaTrainResult dp_train(const CellConfig& cfg, const DpFaOptions& opt, Rng& rng);

} // namespace deepiot
