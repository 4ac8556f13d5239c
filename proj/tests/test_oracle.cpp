#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "deepiot/energy.hpp"
#include "deepiot/oracle.hpp"
#include "deepiot/pruning.hpp"
#include "deepiot/units.hpp"

#include <cmath>

using namespace deepiot;

namespace {

OracleGrids small_grids() {
    OracleGrids g;
    g.energy_cap = 300.0;
    g.channel_cells = 6;
    return g;
}

} // namespace

TEST_CASE("quantized model construction") {
    const CellConfig cfg = preset_calibrated(1, 4);
    const QuantizedSingleDeviceMDP mdp = build_quantized_oracle(cfg, small_grids());

    SUBCASE("channel grids carry unit mass and ordered representatives") {
        double mass = 0.0;
        for (double p : mdp.h_prob) mass += p;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        for (size_t i = 1; i < mdp.h_values.size(); ++i) CHECK(mdp.h_values[i] > mdp.h_values[i - 1]);
        // law of total expectation: cell means recombine to the distribution mean
        double mean = 0.0;
        for (size_t i = 0; i < mdp.h_values.size(); ++i) mean += mdp.h_values[i] * mdp.h_prob[i];
        CHECK(mean == doctest::Approx(cfg.sigma2_ul[0]).epsilon(1e-9));
    }

    SUBCASE("every transition drops at least one energy step") {
        for (int i = 0; i < mdp.n_h; ++i)
            for (int j = 0; j < mdp.n_g; ++j)
                for (int a = 0; a < mdp.n_actions; ++a) CHECK(mdp.drain(i, j, a) >= 1);
    }

    SUBCASE("quantized drains stay within half a step of the real ones") {
        for (int i = 0; i < mdp.n_h; ++i)
            for (int j = 0; j < mdp.n_g; ++j)
                for (int a = 0; a < mdp.n_actions; ++a) {
                    const double real =
                        cycle_drain(cfg, 0, ChannelDraw{mdp.h_values[i], mdp.g_values[j]}, a, cfg.forward_code);
                    CHECK(std::abs(mdp.drain(i, j, a) * mdp.energy_step - real) <= 0.5 * mdp.energy_step + 1e-12);
                }
    }

    SUBCASE("state budget guard") {
        OracleGrids big = small_grids();
        big.energy_cap = 1e9;
        CHECK_THROWS_AS(build_quantized_oracle(cfg, big), std::length_error);
    }
}

TEST_CASE("tabular solution") {
    const CellConfig cfg = preset_calibrated(1, 4);
    const QuantizedSingleDeviceMDP mdp = build_quantized_oracle(cfg, small_grids());
    const OracleSolution sol = value_iteration(mdp);

    SUBCASE("converges quickly on the acyclic model") {
        CHECK(sol.iterations <= 3);
        CHECK(sol.residual < 1e-9);
    }

    SUBCASE("zero-energy level carries zero value") {
        for (int i = 0; i < mdp.n_h; ++i)
            for (int j = 0; j < mdp.n_g; ++j) CHECK(sol.value(0, i, j) == 0.0);
    }

    SUBCASE("value grows roughly like energy over mean drain") {
        const int k = mdp.n_energy - 1;
        const double v_top = sol.value(k, mdp.n_h / 2, mdp.n_g / 2);
        CHECK(v_top > 10.0);
        CHECK(v_top < mdp.energy_of(k)); // each cycle costs at least one unit of energy here
    }

    SUBCASE("value is monotone in energy at every grid point") {
        const OracleCheckReport rep = run_oracle_checks(mdp, sol);
        CHECK(rep.lemma1_violations == 0);
        CHECK(rep.lemma1_points == static_cast<long>(mdp.n_h) * mdp.n_g * (mdp.n_energy - 1));
    }

    SUBCASE("index is monotone in the allocation above the viability line") {
        const OracleCheckReport rep = run_oracle_checks(mdp, sol);
        CHECK(rep.monotone_points > 0);
        CHECK(rep.monotone_violations == 0);
    }

    SUBCASE("sign condition agreement and pruning safety") {
        const OracleCheckReport rep = run_oracle_checks(mdp, sol);
        CHECK(rep.sign_agreement_rate() >= 0.95);
        CHECK(rep.pruning_violations == 0);
        CHECK(rep.all_pass());
    }
}

TEST_CASE("index oracle sees the good-channel dominance") {
    // at a very good uplink draw the closed form predicts no benefit from
    // feedback; the solved model agrees at high-energy states
    const CellConfig cfg = preset_calibrated(1, 4);
    const QuantizedSingleDeviceMDP mdp = build_quantized_oracle(cfg, small_grids());
    const OracleSolution sol = value_iteration(mdp);
    const int i_top = mdp.n_h - 1; // best uplink cell
    REQUIRE(index_sign_condition_nonpositive(cfg, 0, mdp.h_values[i_top], mdp.g_values[mdp.n_g - 1], 1));
    const int k = mdp.n_energy - 1;
    for (int a = 1; a < mdp.n_actions; ++a) CHECK(sol.index(k, i_top, mdp.n_g - 1, a) <= 1e-12);
}
