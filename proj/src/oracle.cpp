#include "deepiot/oracle.hpp"

#include "deepiot/energy.hpp"
#include "deepiot/pruning.hpp"
#include "deepiot/units.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deepiot {

namespace {

// Equal-mass cells of Exp(mean); representative = conditional mean in-cell.
void exponential_quantile_grid(double mean, int cells, std::vector<double>& values,
                               std::vector<double>& prob) {
    values.clear();
    prob.clear();
    for (int c = 0; c < cells; ++c) {
        const double p_lo = static_cast<double>(c) / cells;
        const double p_hi = static_cast<double>(c + 1) / cells;
        const double a = -mean * std::log1p(-p_lo);
        const double mass = 1.0 / cells;
        double cond_mean;
        if (c + 1 == cells) {
            cond_mean = a + mean; // memoryless tail
        } else {
            const double b = -mean * std::log1p(-p_hi);
            cond_mean = ((a + mean) * std::exp(-a / mean) - (b + mean) * std::exp(-b / mean)) / mass;
        }
        values.push_back(cond_mean);
        prob.push_back(mass);
    }
}

} // namespace

double QuantizedSingleDeviceMDP::eta_fb_db(int j) const {
    return linear_to_db(dl_snr(cfg, 0, g_values[j]));
}

QuantizedSingleDeviceMDP build_quantized_oracle(const CellConfig& cfg, const OracleGrids& grids) {
    if (grids.channel_cells < 2) throw std::invalid_argument("oracle: need at least 2 channel cells");
    if (!(grids.step_scale > 0.0 && grids.step_scale <= 1.0))
        throw std::invalid_argument("oracle: step_scale must be in (0, 1]");

    QuantizedSingleDeviceMDP mdp;
    mdp.cfg = cfg;
    mdp.n_h = grids.channel_cells;
    mdp.n_g = grids.channel_cells;
    mdp.n_actions = cfg.M + 1;
    exponential_quantile_grid(cfg.sigma2_ul[0], grids.channel_cells, mdp.h_values, mdp.h_prob);
    exponential_quantile_grid(cfg.sigma2_dl[0], grids.channel_cells, mdp.g_values, mdp.g_prob);

    double min_drain = std::numeric_limits<double>::infinity();
    std::vector<double> raw(static_cast<size_t>(mdp.n_h) * mdp.n_g * mdp.n_actions);
    for (int i = 0; i < mdp.n_h; ++i) {
        for (int j = 0; j < mdp.n_g; ++j) {
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double d =
                    cycle_drain(cfg, 0, ChannelDraw{mdp.h_values[i], mdp.g_values[j]}, a, cfg.forward_code);
                raw[(i * mdp.n_g + j) * mdp.n_actions + a] = d;
                min_drain = std::min(min_drain, d);
            }
        }
    }
    if (!(min_drain > 0.0)) throw std::logic_error("oracle: non-positive per-cycle drain");

    // finest step the state budget allows, never above step_scale * min drain
    const long level_budget = grids.max_states / (static_cast<long>(mdp.n_h) * mdp.n_g);
    if (level_budget < 2) throw std::length_error("oracle: channel grids alone exceed the state budget");
    const double step_floor = grids.energy_cap / static_cast<double>(level_budget - 1);
    const double step_ceiling = grids.step_scale * min_drain;
    if (step_floor > step_ceiling)
        throw std::length_error("oracle: cannot keep the step below the minimum drain within the state budget");
    mdp.energy_step = step_floor;
    mdp.n_energy = static_cast<int>(std::floor(grids.energy_cap / mdp.energy_step)) + 1;
    if (mdp.n_states() > grids.max_states) mdp.n_energy = static_cast<int>(level_budget);

    mdp.drain_steps.resize(raw.size());
    for (size_t idx = 0; idx < raw.size(); ++idx)
        mdp.drain_steps[idx] = std::max(1, static_cast<int>(std::llround(raw[idx] / mdp.energy_step)));
    return mdp;
}

OracleSolution value_iteration(const QuantizedSingleDeviceMDP& mdp, double tol, int max_iterations) {
    if (max_iterations <= 0) max_iterations = mdp.n_energy + 8;

    OracleSolution sol;
    sol.n_energy = mdp.n_energy;
    sol.n_h = mdp.n_h;
    sol.n_g = mdp.n_g;
    sol.n_actions = mdp.n_actions;
    sol.v.assign(static_cast<size_t>(mdp.n_energy) * mdp.n_h * mdp.n_g, 0.0);
    std::vector<double> w(mdp.n_energy, 0.0); // E over fresh channels of v at each level

    const auto vid = [&](int k, int i, int j) { return (static_cast<size_t>(k) * mdp.n_h + i) * mdp.n_g + j; };

    double residual = 0.0;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        residual = 0.0;
        for (int k = 0; k < mdp.n_energy; ++k) {
            double wk = 0.0;
            for (int i = 0; i < mdp.n_h; ++i) {
                for (int j = 0; j < mdp.n_g; ++j) {
                    double best = -std::numeric_limits<double>::infinity();
                    for (int a = 0; a < mdp.n_actions; ++a) {
                        const int kn = k - mdp.drain(i, j, a);
                        const double val = mdp.reward(k) + (kn >= 0 ? w[kn] : 0.0);
                        best = std::max(best, val);
                    }
                    residual = std::max(residual, std::abs(best - sol.v[vid(k, i, j)]));
                    sol.v[vid(k, i, j)] = best;
                    wk += mdp.h_prob[i] * mdp.g_prob[j] * best;
                }
            }
            w[k] = wk;
        }
        if (residual < tol) break;
    }
    if (residual >= tol) throw std::runtime_error("oracle value iteration did not converge within the sweep cap");
    sol.iterations = iter + 1;
    sol.residual = residual;

    sol.q.assign(sol.v.size() * mdp.n_actions, 0.0);
    for (int k = 0; k < mdp.n_energy; ++k)
        for (int i = 0; i < mdp.n_h; ++i)
            for (int j = 0; j < mdp.n_g; ++j)
                for (int a = 0; a < mdp.n_actions; ++a) {
                    const int kn = k - mdp.drain(i, j, a);
                    sol.q[vid(k, i, j) * mdp.n_actions + a] = mdp.reward(k) + (kn >= 0 ? w[kn] : 0.0);
                }

    for (int k = 1; k < mdp.n_energy; ++k)
        for (int i = 0; i < mdp.n_h; ++i)
            for (int j = 0; j < mdp.n_g; ++j)
                sol.value_step = std::max(sol.value_step, sol.value(k, i, j) - sol.value(k - 1, i, j));
    return sol;
}

OracleCheckReport run_oracle_checks(const QuantizedSingleDeviceMDP& mdp, const OracleSolution& sol) {
    OracleCheckReport rep;
    rep.pruning_slack = sol.value_step + 1e-12;
    const double viability = mdp.cfg.fit.viability_threshold_db();

    for (int i = 0; i < mdp.n_h; ++i) {
        for (int j = 0; j < mdp.n_g; ++j) {
            const bool viable = mdp.eta_fb_db(j) >= viability;
            const PruningDecision prune = pruning_decision(mdp.cfg, 0, mdp.h_values[i], mdp.g_values[j]);
            std::vector<char> sign_nonpos(mdp.n_actions, 0);
            for (int a = 1; a < mdp.n_actions; ++a)
                sign_nonpos[a] =
                    index_sign_condition_nonpositive(mdp.cfg, 0, mdp.h_values[i], mdp.g_values[j], a) ? 1 : 0;

            for (int k = 0; k < mdp.n_energy; ++k) {
                if (k >= 1) {
                    ++rep.lemma1_points;
                    if (sol.value(k, i, j) < sol.value(k - 1, i, j) - 1e-12) ++rep.lemma1_violations;
                }
                if (viable) {
                    for (int a = 1; a + 1 < mdp.n_actions; ++a) {
                        ++rep.monotone_points;
                        if (sol.index(k, i, j, a + 1) < sol.index(k, i, j, a) - 1e-12) ++rep.monotone_violations;
                    }
                }
                for (int a = 1; a < mdp.n_actions; ++a) {
                    ++rep.sign_points;
                    const bool actual_nonpos = sol.index(k, i, j, a) <= 1e-12;
                    if (actual_nonpos == static_cast<bool>(sign_nonpos[a])) ++rep.sign_agreements;
                }
                double best_unmasked = 0.0; // the a = 0 reference index
                for (int a = 1; a < mdp.n_actions; ++a)
                    if (!prune.is_masked(a)) best_unmasked = std::max(best_unmasked, sol.index(k, i, j, a));
                for (int a = 1; a < mdp.n_actions; ++a) {
                    if (!prune.is_masked(a)) continue;
                    ++rep.pruning_points;
                    if (sol.index(k, i, j, a) > best_unmasked + rep.pruning_slack) ++rep.pruning_violations;
                }
            }
        }
    }
    return rep;
}

} // namespace deepiot
