#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "deepiot/cell_config.hpp"
#include "deepiot/channel.hpp"
#include "deepiot/energy.hpp"
#include "deepiot/state.hpp"
#include "deepiot/units.hpp"

#include <cmath>

using namespace deepiot;

TEST_CASE("db conversions") {
    CHECK(db_to_linear(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(db_to_linear(10.0) == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(dbm_to_linear(-90.0) == doctest::Approx(1e-12).epsilon(1e-12));
    CHECK_THROWS_AS(linear_to_db(0.0), std::domain_error);
    CHECK_THROWS_AS(linear_to_db(-3.0), std::domain_error);

    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const double x_db = rng.uniform(-120.0, 120.0);
        CHECK(linear_to_db(db_to_linear(x_db)) == doctest::Approx(x_db).epsilon(1e-12));
    }
}

TEST_CASE("downlink snr") {
    CellConfig cfg = preset_table1(1, 4);
    CHECK(dl_snr(cfg, 0, 5.0) == doctest::Approx(2e8).epsilon(1e-12));
    CHECK(linear_to_db(dl_snr(cfg, 0, 5.0)) == doctest::Approx(83.0103).epsilon(1e-4));
    CHECK(dl_snr(cfg, 0, 0.0) == 0.0);

    CellConfig doubled = cfg;
    doubled.p_ap_max *= 2.0;
    CHECK(dl_snr(doubled, 0, 5.0) == doctest::Approx(2.0 * dl_snr(cfg, 0, 5.0)).epsilon(1e-15));
}

TEST_CASE("required uplink snr surface") {
    const FitConstants fit = FitConstants::defaults();
    // frozen hand evaluations: exponents 0.45 and 0.75
    CHECK(required_ul_snr_db(20.0, 1, fit) == doctest::Approx(-0.6262858366669243).epsilon(1e-12));
    CHECK(required_ul_snr_db(5.0, 4, fit) == doctest::Approx(-0.7721719692967404).epsilon(1e-12));
    // large-a limit approaches the floor when the feedback SNR is viable
    CHECK(required_ul_snr_db(0.0, 4000, fit) == doctest::Approx(fit.u5).epsilon(1e-12));
    CHECK_THROWS_AS(required_ul_snr_db(10.0, 0, fit), std::invalid_argument);

    SUBCASE("bounds hold on a grid") {
        for (const FitConstants& f : {FitConstants::defaults(), FitConstants::k36_r14()}) {
            for (int ia = 1; ia <= 10; ++ia) {
                for (int ie = 0; ie < 1000; ++ie) {
                    const double fb_db = -40.0 + 80.0 * ie / 999.0;
                    const double v = required_ul_snr_db(fb_db, ia, f);
                    CHECK(v > f.floor_db());
                    CHECK(v < f.ceiling_db());
                }
            }
        }
    }

    SUBCASE("non-increasing in feedback snr when u0 + u2 a >= 0") {
        for (int a = 1; a <= 8; ++a) {
            double prev = required_ul_snr_db(-40.0, a, fit);
            for (int ie = 1; ie <= 400; ++ie) {
                const double v = required_ul_snr_db(-40.0 + 0.25 * ie, a, fit);
                CHECK(v <= prev + 1e-12);
                prev = v;
            }
        }
    }

    SUBCASE("monotonicity in a flips at the viability threshold") {
        const double split = fit.viability_threshold_db(); // -10 dB at defaults
        CHECK(split == doctest::Approx(-10.0));
        for (double fb_db : {split + 0.5, split + 5.0, 0.0, 20.0}) {
            for (int a = 1; a < 10; ++a)
                CHECK(required_ul_snr_db(fb_db, a + 1, fit) <= required_ul_snr_db(fb_db, a, fit) + 1e-12);
        }
        for (double fb_db : {split - 0.5, split - 5.0, -30.0}) {
            for (int a = 1; a < 10; ++a)
                CHECK(required_ul_snr_db(fb_db, a + 1, fit) >= required_ul_snr_db(fb_db, a, fit) - 1e-12);
        }
    }
}

TEST_CASE("forward code thresholds") {
    CellConfig cfg = preset_table1(1, 4);
    CHECK(forward_required_snr_db(cfg, "polar") == doctest::Approx(2.4737141633330757).epsilon(1e-12));
    CHECK(forward_required_snr_db(cfg, "turbo") == doctest::Approx(1.9737141633330757).epsilon(1e-12));
    cfg.forward_thresholds_db["custom"] = 5.0;
    CHECK(forward_required_snr_db(cfg, "custom") == 5.0);
    CHECK_THROWS_AS(forward_required_snr_db(cfg, "hamming"), std::invalid_argument);
}

TEST_CASE("transmit power") {
    CellConfig cfg = preset_table1(1, 4);
    const ChannelDraw good{5.0, 5.0};

    SUBCASE("uncapped value") {
        // eta* at 83.0103 dB feedback SNR with one subcarrier sits near the floor;
        // compare against the directly composed expression
        const double eta_db = required_ul_snr_db(linear_to_db(dl_snr(cfg, 0, 5.0)), 1, cfg.fit);
        const double expect = db_to_linear(eta_db) * cfg.n0 / (cfg.alpha[0] * 5.0);
        CHECK(transmit_power(cfg, 0, good, 1, "turbo") == doctest::Approx(expect).epsilon(1e-14));
        CHECK(expect < cfg.p_max);
    }

    SUBCASE("hand value at eta*=-0.626 dB") {
        // p = 10^(-0.0626...) * 1e-12 / (1e-5 * 5) = 1.731e-8
        const double eta_db = required_ul_snr_db(20.0, 1, cfg.fit);
        const double p = db_to_linear(eta_db) * cfg.n0 / (cfg.alpha[0] * 5.0);
        CHECK(p == doctest::Approx(1.7314e-8).epsilon(1e-4));
    }

    SUBCASE("cap binds in deep fades and at zero gain") {
        CHECK(transmit_power(cfg, 0, ChannelDraw{1e-9, 5.0}, 1, "turbo") == cfg.p_max);
        CHECK(transmit_power(cfg, 0, ChannelDraw{0.0, 5.0}, 1, "turbo") == cfg.p_max);
    }

    SUBCASE("zero feedback gain degrades to the surface ceiling") {
        const double p = transmit_power(cfg, 0, ChannelDraw{5.0, 0.0}, 2, "turbo");
        const double expect = db_to_linear(cfg.fit.ceiling_db()) * cfg.n0 / (cfg.alpha[0] * 5.0);
        CHECK(p == doctest::Approx(std::min(cfg.p_max, expect)).epsilon(1e-14));
    }

    SUBCASE("non-increasing in uplink gain") {
        Rng rng(3);
        for (int i = 0; i < 500; ++i) {
            const double h2 = rng.exponential(5.0);
            const double fb = rng.exponential(5.0);
            const double p1 = transmit_power(cfg, 0, ChannelDraw{h2, fb}, 1, "turbo");
            const double p2 = transmit_power(cfg, 0, ChannelDraw{h2 * 1.5, fb}, 1, "turbo");
            CHECK(p2 <= p1 + 1e-18);
        }
    }

    SUBCASE("non-increasing in a above the viability threshold") {
        CellConfig cal = preset_calibrated(1, 4);
        Rng rng(4);
        for (int i = 0; i < 500; ++i) {
            const double h2 = rng.exponential(5.0);
            const double fb = rng.exponential(5.0);
            if (linear_to_db(dl_snr(cal, 0, fb)) < cal.fit.viability_threshold_db()) continue;
            for (int a = 1; a < cal.M; ++a) {
                const double pa = transmit_power(cal, 0, ChannelDraw{h2, fb}, a, "turbo");
                const double pb = transmit_power(cal, 0, ChannelDraw{h2, fb}, a + 1, "turbo");
                CHECK(pb <= pa + 1e-18);
            }
        }
    }
}

TEST_CASE("energy breakdown") {
    CellConfig cfg = preset_table1(1, 4);
    const EnergyBreakdown with_fb = energy_breakdown(cfg, 0.5, 1);
    CHECK(with_fb.transmit == doctest::Approx(36.0));
    CHECK(with_fb.receive == doctest::Approx(cfg.p_receive * 64.0));
    CHECK(with_fb.sleep == 0.0);

    const EnergyBreakdown no_fb = energy_breakdown(cfg, 0.5, 0);
    CHECK(no_fb.receive == 0.0);
    CHECK(no_fb.sleep == doctest::Approx(cfg.p_sleep * 64.0));

    CHECK(energy_breakdown(cfg, 0.0, 0).transmit == 0.0);
    CHECK_THROWS_AS(energy_breakdown(cfg, -1.0, 0), std::invalid_argument);
}

TEST_CASE("channel sampling statistics") {
    CellConfig cfg = preset_table1(1, 4);
    Rng rng(12345);
    const long n = 1000000;
    double sum = 0.0;
    long below_median = 0;
    const double median = cfg.sigma2_ul[0] * std::log(2.0);
    for (long i = 0; i < n; ++i) {
        const ChannelDraw d = sample_channels(cfg, 0, rng);
        sum += d.h2;
        if (d.h2 <= median) ++below_median;
    }
    CHECK(sum / n == doctest::Approx(5.0).epsilon(0.004));            // 5 +- 0.02
    CHECK(static_cast<double>(below_median) / n == doctest::Approx(0.5).epsilon(0.01)); // 0.5 +- 0.005

    SUBCASE("zero mean gain rejected by config validation") {
        CellConfig bad = cfg;
        bad.sigma2_ul[0] = 0.0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
}

TEST_CASE("state stepping") {
    CellConfig cfg = preset_table1(2, 4);
    Rng rng(9);
    CellState s = initial_state(cfg, rng);

    SUBCASE("all-zero allocation with capped power") {
        // force the cap with vanishing uplink gains
        for (auto& d : s.devices) d.channel = ChannelDraw{1e-30, 1.0};
        std::vector<ChannelDraw> next = {{1.0, 1.0}, {1.0, 1.0}};
        const CellState s2 = step(cfg, s, Allocation{{0, 0}}, next, "turbo");
        const double expect_drop = cfg.p_max * cfg.seconds_per_ul_phase() + cfg.p_sleep * cfg.seconds_per_dl_phase();
        for (int l = 0; l < 2; ++l)
            CHECK(s.devices[l].energy - s2.devices[l].energy == doctest::Approx(expect_drop).epsilon(1e-12));
        CHECK(s2.cycle == s.cycle + 1);
    }

    SUBCASE("energy strictly decreases under any allocation") {
        Rng rng2(77);
        CellState cur = initial_state(cfg, rng2);
        for (int t = 0; t < 50 && !cur.terminal(); ++t) {
            std::vector<ChannelDraw> next;
            for (int l = 0; l < cfg.L; ++l) next.push_back(sample_channels(cfg, l, rng2));
            Allocation alloc{{static_cast<int>(rng2.below(3)), static_cast<int>(rng2.below(2))}};
            const CellState nxt = step(cfg, cur, alloc, next, "turbo");
            for (int l = 0; l < cfg.L; ++l) CHECK(nxt.devices[l].energy < cur.devices[l].energy);
            cur = nxt;
        }
    }

    SUBCASE("stepping a terminal state throws") {
        s.devices[0].energy = -1.0;
        std::vector<ChannelDraw> next = {{1.0, 1.0}, {1.0, 1.0}};
        CHECK_THROWS_AS(step(cfg, s, Allocation{{0, 0}}, next, "turbo"), std::logic_error);
    }

    SUBCASE("over-budget allocation rejected") {
        std::vector<ChannelDraw> next = {{1.0, 1.0}, {1.0, 1.0}};
        CHECK_THROWS_AS(step(cfg, s, Allocation{{3, 2}}, next, "turbo"), std::invalid_argument);
    }
}

TEST_CASE("config json round trip") {
    CellConfig cfg = preset_calibrated(3, 2);
    const std::string text = config_to_json(cfg);
    const CellConfig back = load_config_json(text);
    CHECK(back.L == 3);
    CHECK(back.M == 2);
    CHECK(back.alpha[0] == doctest::Approx(8e-12).epsilon(1e-12));
    CHECK(back.n0 == doctest::Approx(1e-12).epsilon(1e-9));
    CHECK(back.rho[2] == doctest::Approx(1703.0));
    CHECK(back.forward_thresholds_db.at("polar") == doctest::Approx(2.4737141633330757).epsilon(1e-12));

    SUBCASE("scalar fields broadcast per device") {
        const CellConfig c = load_config_json(R"({"preset":"calibrated","L":5,"M":3,"sigma2_ul":7.5,"rho":100.0})");
        CHECK(c.L == 5);
        for (int l = 0; l < 5; ++l) {
            CHECK(c.sigma2_ul[l] == 7.5);
            CHECK(c.rho[l] == 100.0);
        }
    }

    SUBCASE("inconsistent frame structure rejected") {
        CHECK_THROWS_AS(load_config_json(R"({"preset":"table1","N":100})"), std::invalid_argument);
    }
}
