#pragma once

#include "deepiot/mdp.hpp"
#include "deepiot/mlp.hpp"
#include "deepiot/pruning.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace deepiot {

/// Normalized per-device features fed to the index network:
/// [energy / rho, |h|^2 / sigma2, |h~|^2 / sigma2_fb].
std::vector<double> device_features(const CellConfig& cfg, int device, const DeviceState& ds);

/// Index network factory: 3 -> hidden -> hidden -> M. Output k-1 is the
/// index of assigning k subcarriers; assigning none is the zero reference.
Mlp make_index_net(int budget, int hidden, Rng& rng);

/// Per-device index rows plus dominance masks. Joint scores are additive:
/// score(a) = sum_l row[l][a_l], with any masked component excluding the
/// whole joint action from the feasible set.
struct IndexTable {
    int L = 0;
    int M = 0;
    std::vector<double> rows;  // L x (M+1), entry a=0 fixed at 0
    std::vector<char> masked;  // L x M, true = allocation a (>=1) excluded

    double entry(int device, int a) const { return rows[device * (M + 1) + a]; }
    bool is_masked(int device, int a) const { return a >= 1 && masked[device * M + (a - 1)] != 0; }
    bool action_feasible(const Allocation& alloc) const;
    /// Additive joint score; -infinity when the action is excluded.
    double score(const Allocation& alloc) const;
};

/// Evaluate the net once per device and apply the dominance masks. With
/// literal_zero_masking the dominated entries stay in the feasible set with
/// score forced to zero instead (ablation variant).
IndexTable build_index_table(const Mlp& net, const CellState& state, const CellConfig& cfg,
                             bool literal_zero_masking = false);

/// Build a table from explicit rows/masks (tests, oracles).
IndexTable make_table(int L, int M, std::vector<double> rows, std::vector<char> masked);

/// Exact argmax of the additive joint score under the budget, computed by a
/// dynamic program over devices in O(L M^2); ties resolve to the
/// lexicographically smallest allocation. Matches exhaustive enumeration.
Allocation best_action(const IndexTable& table);

struct ActionDistribution {
    std::vector<Allocation> actions; // lexicographic order
    std::vector<double> prob;
};

/// Softmax distribution over the feasible joint actions (exhaustive; meant
/// for moderate action spaces and for testing the factored sampler).
ActionDistribution policy_probabilities(const IndexTable& table, double temperature = 1.0);

/// Factored machinery with the same distribution at any scale, O(L M^2):
Allocation sample_action(const IndexTable& table, double temperature, Rng& rng);
/// marginals[l*(M+1)+k] = P(a_l = k) under the budget-coupled softmax
std::vector<double> policy_marginals(const IndexTable& table, double temperature);
double log_policy_probability(const IndexTable& table, const Allocation& alloc, double temperature);

/// Rebuild a table from recorded per-device features (3 each) and masks.
IndexTable table_from_features(const Mlp& net, const std::vector<double>& features,
                               const std::vector<char>& masks, int L, int M, bool literal_zero_masking);

/// Accumulate the parameter gradient of
///   coef * ln pi(action | table(net)) + score_decay/2 * sum of squared rows
/// into grad. The log-probability gradient with respect to a row entry is the
/// indicator of the taken action minus that entry's budget-coupled marginal;
/// the decay term keeps scores from saturating the softmax (it rescales rows
/// without touching the greedy argmax).
void accumulate_log_policy_gradient(const Mlp& net, const std::vector<double>& features,
                                    const std::vector<char>& masks, const Allocation& action, double coef,
                                    double temperature, bool literal_zero_masking, std::vector<double>& grad,
                                    double score_decay = 0.0);

/// Reward share of one device in one cycle: 1/L while its reserve is positive.
inline double per_device_reward(const DeviceState& ds, int L) {
    return ds.energy > 0.0 ? 1.0 / static_cast<double>(L) : 0.0;
}

struct ItpgOptions {
    int hidden = 64;
    long episodes = 4000;      // total sampled training episodes
    int batch_episodes = 16;   // episodes per gradient step
    double learning_rate = 1e-2;
    double final_lr_fraction = 0.1; // linear step-size decay over the run
    double temperature = 1.0;
    double shaping_rho = 1.07;  // geometric reward shaping constant
    double score_decay = 3e-4;  // L2 pull on index scores; keeps exploration alive
    bool normalize_advantages = true;
    double entropy_bonus = 0.0; // keeps the sampling policy from collapsing
    // clipped-surrogate variant with a learned state-value baseline and
    // lambda-weighted advantage estimates
    bool use_ppo = false;
    double ppo_clip = 0.2;
    int ppo_epochs = 4;
    double gae_lambda = 0.92;
    int critic_hidden = 64;
    double critic_lr = 5e-3;
    bool literal_zero_masking = false;
    long eval_every_batches = 0; // 0 = no periodic eval
    long eval_episodes = 30;
};

struct TrainLogRow {
    long episode = 0;
    double mean_return = 0.0;
    double eval_lifespan = 0.0; // NaN when not evaluated
};

/// Greedy policy over a trained (or loaded) index network.
class ItpgPolicy final : public Policy {
public:
    ItpgPolicy(Mlp net, CellConfig cfg, bool literal_zero_masking = false);
    Allocation decide(const CellState& state, Rng& rng) override;
    std::string name() const override { return "itpg"; }
    const Mlp& net() const { return net_; }

private:
    Mlp net_;
    CellConfig cfg_;
    bool literal_zero_;
};

struct ItpgTrainResult {
    Mlp net;
    std::vector<TrainLogRow> log;
};

/// Supervised warm start: fit the index net to the single-device advantage
/// q*(s,a) - q*(s,0) tabulated by the quantized oracle. The policy-gradient
/// phase then refines the indices against the joint objective.
Mlp pretrain_index_net(const CellConfig& cfg, int hidden, long steps, Rng& rng);

/// Policy-gradient training of the index network with shaped rewards,
/// return-to-go weighting and a state-conditioned baseline; optionally the
/// clipped-surrogate update instead of plain ascent. Starts from `init`
/// when given, otherwise from random weights.
ItpgTrainResult itpg_train(const CellConfig& cfg, const ItpgOptions& opt, Rng& rng,
                           const Mlp* init = nullptr);

} // namespace deepiot
