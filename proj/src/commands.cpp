#include "deepiot/commands.hpp"

#include "deepiot/csv.hpp"
#include "deepiot/dp_fa.hpp"
#include "deepiot/itpg.hpp"
#include "deepiot/mdp.hpp"
#include "deepiot/oracle.hpp"
#include "deepiot/power_analysis.hpp"
#include "deepiot/units.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

namespace deepiot {

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset = "calibrated";
    std::uint64_t seed = 1;
    std::string out = "out.csv";
    int L = 4;
    int M = 4;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path, "JSON config file (overrides the preset)");
    cmd->add_option("--preset", c.preset, "built-in preset: table1 or calibrated")
        ->check(CLI::IsMember({"table1", "calibrated"}));
    cmd->add_option("--seed", c.seed, "master seed; fully determines all stochastic output");
    cmd->add_option("--out", c.out, "output CSV path");
    cmd->add_option("-L,--devices", c.L, "device count");
    cmd->add_option("-M,--subcarriers", c.M, "feedback subcarrier budget");
}

CellConfig resolve_config(const CommonOpts& c) {
    if (!c.config_path.empty()) return load_config_file(c.config_path);
    return preset_by_name(c.preset, c.L, c.M);
}

std::unique_ptr<Policy> make_named_policy(const std::string& name, const CellConfig& cfg,
                                          const std::string& checkpoint) {
    if (name == "nofeedback_turbo") return make_no_feedback_policy("turbo");
    if (name == "nofeedback_polar") return make_no_feedback_policy("polar");
    if (name == "uniform") return make_uniform_policy(cfg.M);
    if (name == "greedy_min_energy") return make_greedy_min_energy_policy(cfg);
    if (name == "random") return make_random_policy(cfg.L, cfg.M);
    if (name == "itpg" || name == "dp_fa") {
        if (checkpoint.empty())
            throw std::runtime_error(name + " evaluation needs --checkpoint <file> from a train run");
        Mlp net = Mlp::load(checkpoint);
        if (name == "itpg") {
            if (net.output_width() != cfg.M)
                throw std::runtime_error("checkpoint output width does not match the subcarrier budget");
            return std::make_unique<ItpgPolicy>(std::move(net), cfg);
        }
        return std::make_unique<DpFaPolicy>(std::move(net), cfg);
    }
    throw std::runtime_error("unknown policy: " + name);
}

int cmd_fit_surface(const CommonOpts& c, const std::string& fit_name, double fb_lo, double fb_hi,
                    int fb_steps, int a_lo, int a_hi) {
    FitConstants fit = FitConstants::defaults();
    if (fit_name == "k36r14") fit = FitConstants::k36_r14();
    CsvWriter csv(c.out);
    csv.row("eta_fb_db", "a", "eta_req_db");
    for (int ia = a_lo; ia <= a_hi; ++ia) {
        for (int s = 0; s < fb_steps; ++s) {
            const double fb = fb_lo + (fb_hi - fb_lo) * (fb_steps == 1 ? 0.0 : static_cast<double>(s) / (fb_steps - 1));
            csv.row(fb, ia, required_ul_snr_db(fb, ia, fit));
        }
    }
    return 0;
}

int cmd_power(const CommonOpts& c, long samples, int a_max) {
    const CellConfig cfg = resolve_config(c);
    const double e_polar = expected_power_forward(cfg, 0, "polar");
    const double e_turbo = expected_power_forward(cfg, 0, "turbo");
    CsvWriter csv(c.out);
    csv.row("a", "analytic_mean_power", "mc_mean_power", "mc_std_error", "reduction_vs_polar_pct",
            "reduction_vs_turbo_pct");
    for (int a = 1; a <= a_max; ++a) {
        const double analytic = expected_power(cfg, 0, a);
        Rng rng(Rng::derive_seed(c.seed, static_cast<std::uint64_t>(a)));
        const McEstimate mc = mc_expected_power(cfg, 0, a, samples, rng);
        csv.row(a, analytic, mc.mean, mc.std_error, 100.0 * (1.0 - analytic / e_polar),
                100.0 * (1.0 - analytic / e_turbo));
    }
    return 0;
}

int cmd_lifespan(const CommonOpts& c, const std::vector<std::string>& policies, long episodes,
                 const std::string& checkpoint, const std::string& per_episode_path) {
    const CellConfig cfg = resolve_config(c);
    CsvWriter csv(c.out);
    csv.row("policy", "L", "episodes", "mean_lifespan", "ci95_lo", "ci95_hi");
    std::unique_ptr<CsvWriter> per;
    if (!per_episode_path.empty()) {
        per = std::make_unique<CsvWriter>(per_episode_path);
        per->row("seed", "policy", "lifespan");
    }
    for (const std::string& name : policies) {
        auto policy = make_named_policy(name, cfg, checkpoint);
        double sum = 0.0, sumsq = 0.0;
        for (long e = 0; e < episodes; ++e) {
            Rng rng(Rng::derive_seed(c.seed, static_cast<std::uint64_t>(e)));
            const Trajectory t = run_episode(*policy, cfg, rng);
            sum += t.lifespan;
            sumsq += static_cast<double>(t.lifespan) * t.lifespan;
            if (per) per->row(static_cast<long>(e), name, static_cast<long>(t.lifespan));
        }
        const double mean = sum / episodes;
        double half = 0.0;
        if (episodes > 1) {
            const double var = std::max(0.0, (sumsq - episodes * mean * mean) / (episodes - 1));
            half = 1.959963984540054 * std::sqrt(var / episodes);
        }
        csv.row(name, cfg.L, episodes, mean, mean - half, mean + half);
    }
    return 0;
}

int cmd_energy_trace(const CommonOpts& c, const std::vector<std::string>& policies, long seeds,
                     const std::string& checkpoint) {
    const CellConfig cfg = resolve_config(c);
    CsvWriter csv(c.out);
    csv.row("policy", "seed", "cycle", "device", "energy", "alloc");
    for (const std::string& name : policies) {
        auto policy = make_named_policy(name, cfg, checkpoint);
        for (long s = 0; s < seeds; ++s) {
            Rng rng(Rng::derive_seed(c.seed, static_cast<std::uint64_t>(s)));
            const DepletionTrace trace = run_depletion_trace(*policy, cfg, rng);
            for (size_t t = 0; t < trace.energies.size(); ++t)
                for (int l = 0; l < cfg.L; ++l)
                    csv.row(name, s, static_cast<long>(t), l, trace.energies[t][l], trace.allocations[t][l]);
        }
    }
    return 0;
}

int cmd_train(const CommonOpts& c, const std::string& algo, long episodes, long updates,
              const std::string& out_prefix, bool use_ppo) {
    const CellConfig cfg = resolve_config(c);
    Rng rng(c.seed);
    std::vector<TrainLogRow> log;
    if (algo == "itpg") {
        ItpgOptions opt;
        if (episodes > 0) opt.episodes = episodes;
        opt.use_ppo = use_ppo;
        ItpgTrainResult res = itpg_train(cfg, opt, rng);
        res.net.save(out_prefix + ".net");
        log = std::move(res.log);
        std::ofstream meta(out_prefix + "_options.json");
        meta << "{\n  \"algo\": \"itpg\",\n  \"episodes\": " << opt.episodes
             << ",\n  \"batch_episodes\": " << opt.batch_episodes << ",\n  \"hidden\": " << opt.hidden
             << ",\n  \"learning_rate\": " << opt.learning_rate << ",\n  \"temperature\": " << opt.temperature
             << ",\n  \"shaping_rho\": " << opt.shaping_rho << ",\n  \"use_ppo\": " << (use_ppo ? "true" : "false")
             << ",\n  \"seed\": " << c.seed << "\n}\n";
    } else if (algo == "dpfa") {
        DpFaOptions opt;
        if (updates > 0) opt.updates = updates;
        DpFaTrainResult res = dp_train(cfg, opt, rng);
        res.net.save(out_prefix + ".net");
        log = std::move(res.log);
        std::ofstream meta(out_prefix + "_options.json");
        meta << "{\n  \"algo\": \"dpfa\",\n  \"updates\": " << opt.updates << ",\n  \"kmc\": " << opt.kmc
             << ",\n  \"hidden\": " << opt.hidden << ",\n  \"batch_size\": " << opt.batch_size
             << ",\n  \"target_sync_period\": " << opt.target_sync_period
             << ",\n  \"learning_rate\": " << opt.learning_rate << ",\n  \"seed\": " << c.seed << "\n}\n";
    } else {
        throw std::runtime_error("unknown algo: " + algo + " (expected itpg or dpfa)");
    }
    CsvWriter csv(out_prefix + "_log.csv");
    csv.row("episode", "mean_return", "eval_lifespan");
    for (const TrainLogRow& r : log) csv.row(r.episode, r.mean_return, r.eval_lifespan);
    return 0;
}

int cmd_oracle_check(const CommonOpts& c, double energy_cap, int cells) {
    CellConfig cfg = resolve_config(c);
    OracleGrids grids;
    grids.energy_cap = energy_cap;
    grids.channel_cells = cells;
    const QuantizedSingleDeviceMDP mdp = build_quantized_oracle(cfg, grids);
    const OracleSolution sol = value_iteration(mdp);
    const OracleCheckReport rep = run_oracle_checks(mdp, sol);

    std::cout << "oracle states: " << mdp.n_states() << " (energy levels " << mdp.n_energy << ", step "
              << mdp.energy_step << ")\n";
    std::cout << "value-monotone-in-energy: "
              << (rep.lemma1_violations == 0 ? "PASS" : "FAIL") << " (" << rep.lemma1_violations << "/"
              << rep.lemma1_points << " violations)\n";
    std::cout << "index-monotone-in-allocation: "
              << (rep.monotone_violations == 0 ? "PASS" : "FAIL") << " (" << rep.monotone_violations << "/"
              << rep.monotone_points << " violations)\n";
    std::cout << "sign-condition-agreement: "
              << (rep.sign_agreement_rate() >= 0.95 ? "PASS" : "FAIL") << " ("
              << 100.0 * rep.sign_agreement_rate() << "% of " << rep.sign_points << " points)\n";
    std::cout << "pruning-safety: " << (rep.pruning_violations == 0 ? "PASS" : "FAIL") << " ("
              << rep.pruning_violations << "/" << rep.pruning_points << " violations, slack "
              << rep.pruning_slack << ")\n";
    return rep.all_pass() ? 0 : 1;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"cycle-level simulator and allocation engine for feedback-coded IoT cells"};
    app.require_subcommand(1);

    CommonOpts common;

    auto* fit = app.add_subcommand("fit-surface", "required uplink SNR surface over a (feedback SNR, a) grid");
    add_common(fit, common);
    std::string fit_name = "default";
    double fb_lo = -10.0, fb_hi = 30.0;
    int fb_steps = 41, a_lo = 1, a_hi = 4;
    fit->add_option("--fit", fit_name, "constant set: default or k36r14")
        ->check(CLI::IsMember({"default", "k36r14"}));
    fit->add_option("--fb-min", fb_lo);
    fit->add_option("--fb-max", fb_hi);
    fit->add_option("--fb-steps", fb_steps)->check(CLI::PositiveNumber);
    fit->add_option("--a-min", a_lo)->check(CLI::PositiveNumber);
    fit->add_option("--a-max", a_hi)->check(CLI::PositiveNumber);

    auto* power = app.add_subcommand("power", "analytic vs Monte-Carlo average transmit power");
    add_common(power, common);
    long samples = 1000000;
    int a_max = 5;
    power->add_option("--samples", samples, "Monte-Carlo draws per allocation");
    power->add_option("--a-max", a_max);

    auto* lifespan = app.add_subcommand("lifespan", "mean cell lifespan per policy");
    add_common(lifespan, common);
    std::vector<std::string> policies = {"nofeedback_turbo", "nofeedback_polar", "uniform"};
    long episodes = 200;
    std::string checkpoint;
    std::string per_episode;
    lifespan->add_option("--policy", policies, "policies to evaluate");
    lifespan->add_option("--episodes", episodes);
    lifespan->add_option("--checkpoint", checkpoint, "trained network for itpg/dp_fa policies");
    lifespan->add_option("--per-episode", per_episode, "optional per-episode CSV path");

    auto* trace = app.add_subcommand("energy-trace", "per-cycle per-device energy traces to depletion");
    add_common(trace, common);
    std::vector<std::string> trace_policies = {"nofeedback_turbo"};
    long trace_seeds = 1;
    trace->add_option("--policy", trace_policies);
    trace->add_option("--runs", trace_seeds, "independent traces per policy");
    trace->add_option("--checkpoint", checkpoint);

    auto* train = app.add_subcommand("train", "train an allocation policy and write a checkpoint");
    add_common(train, common);
    std::string algo = "itpg";
    long train_episodes = 0, train_updates = 0;
    std::string out_prefix = "run";
    bool use_ppo = false;
    train->add_option("--algo", algo)->check(CLI::IsMember({"itpg", "dpfa"}));
    train->add_option("--episodes", train_episodes, "itpg training episodes");
    train->add_option("--updates", train_updates, "dpfa gradient updates");
    train->add_option("--out-prefix", out_prefix);
    train->add_flag("--ppo", use_ppo, "use the clipped-surrogate update");

    auto* oracle = app.add_subcommand("oracle-check", "run the quantized-oracle property suite");
    add_common(oracle, common);
    double energy_cap = OracleGrids{}.energy_cap;
    int cells = OracleGrids{}.channel_cells;
    oracle->add_option("--energy-cap", energy_cap);
    oracle->add_option("--cells", cells);

    std::vector<std::string> argv_store(args.begin(), args.end());
    std::vector<const char*> argv;
    argv.push_back("deepiot");
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (fit->parsed()) return cmd_fit_surface(common, fit_name, fb_lo, fb_hi, fb_steps, a_lo, a_hi);
        if (power->parsed()) return cmd_power(common, samples, a_max);
        if (lifespan->parsed()) return cmd_lifespan(common, policies, episodes, checkpoint, per_episode);
        if (trace->parsed()) return cmd_energy_trace(common, trace_policies, trace_seeds, checkpoint);
        if (train->parsed()) return cmd_train(common, algo, train_episodes, train_updates, out_prefix, use_ppo);
        if (oracle->parsed()) return cmd_oracle_check(common, energy_cap, cells);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace deepiot
