#pragma once

#include "deepiot/cell_config.hpp"

#include <vector>

namespace deepiot {

struct OracleGrids {
    double energy_cap = 300.0; // top of the uniform energy grid
    int channel_cells = 8;     // equal-mass cells per fading grid
    double step_scale = 0.95;  // ceiling on the step relative to the minimum drain
    long max_states = 100000;  // the energy step is the finest one within this budget
};

/// Single-device decision process on quantized grids: energy on a uniform
/// grid stepped below the minimum per-cycle drain, channels on equal-mass
/// quantile cells represented by their conditional means. Transitions stay
/// on-grid (drains are rounded to whole steps, at least one), so the tabular
/// solution is exact for the quantized model.
struct QuantizedSingleDeviceMDP {
    CellConfig cfg; // device 0 parameters; reward scale 1/L
    double energy_step = 0.0;
    int n_energy = 0;
    int n_h = 0;
    int n_g = 0;
    int n_actions = 0; // M + 1

    std::vector<double> h_values, h_prob;
    std::vector<double> g_values, g_prob;
    std::vector<int> drain_steps; // [i][j][a] -> energy-grid steps, >= 1

    long n_states() const { return static_cast<long>(n_energy) * n_h * n_g; }
    int drain(int i, int j, int a) const { return drain_steps[(i * n_g + j) * n_actions + a]; }
    double energy_of(int k) const { return k * energy_step; }
    double reward(int k) const { return k >= 1 ? 1.0 / cfg.L : 0.0; }
    double eta_fb_db(int j) const;
};

QuantizedSingleDeviceMDP build_quantized_oracle(const CellConfig& cfg, const OracleGrids& grids);

/// Exact action values of the quantized model.
struct OracleSolution {
    int n_energy = 0, n_h = 0, n_g = 0, n_actions = 0;
    std::vector<double> v; // [k][i][j]
    std::vector<double> q; // [k][i][j][a]
    int iterations = 0;
    double residual = 0.0;
    double value_step = 0.0; // largest value increment across one energy step

    double value(int k, int i, int j) const { return v[(static_cast<size_t>(k) * n_h + i) * n_g + j]; }
    double qvalue(int k, int i, int j, int a) const {
        return q[((static_cast<size_t>(k) * n_h + i) * n_g + j) * n_actions + a];
    }
    /// Advantage of assigning a subcarriers over assigning none.
    double index(int k, int i, int j, int a) const { return qvalue(k, i, j, a) - qvalue(k, i, j, 0); }
};

/// Sweeps the energy levels bottom-up until the sup-norm change drops below
/// tol (the drains make the model acyclic, so this converges in two sweeps).
OracleSolution value_iteration(const QuantizedSingleDeviceMDP& mdp, double tol = 1e-9, int max_iterations = 0);

struct OracleCheckReport {
    long lemma1_points = 0, lemma1_violations = 0;
    long monotone_points = 0, monotone_violations = 0;
    long sign_points = 0, sign_agreements = 0;
    long pruning_points = 0, pruning_violations = 0;
    double pruning_slack = 0.0;

    double sign_agreement_rate() const {
        return sign_points ? static_cast<double>(sign_agreements) / sign_points : 1.0;
    }
    bool all_pass(double sign_threshold = 0.95) const {
        return lemma1_violations == 0 && monotone_violations == 0 && pruning_violations == 0 &&
               sign_agreement_rate() >= sign_threshold;
    }
};

/// Property suite over the solved oracle: value monotone in energy, index
/// monotone in the allocation above the viability threshold, the closed-form
/// sign condition, and safety of the dominance pruning (within one grid step
/// of value).
OracleCheckReport run_oracle_checks(const QuantizedSingleDeviceMDP& mdp, const OracleSolution& sol);

} // namespace deepiot
