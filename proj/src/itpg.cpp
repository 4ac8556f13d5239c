#include "deepiot/itpg.hpp"

#include "deepiot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace deepiot {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::vector<double> device_features(const CellConfig& cfg, int device, const DeviceState& ds) {
    // energy on the cell-wide reserve scale (so devices with unequal batteries
    // expose their absolute standing), gains scaled by the device's relative
    // path loss; equal to the plain rho/sigma^2 normalization when the cell is
    // homogeneous
    double rho_ref = 0.0, mean_log_alpha = 0.0;
    for (int l = 0; l < cfg.L; ++l) {
        rho_ref += cfg.rho[l];
        mean_log_alpha += std::log(cfg.alpha[l]);
    }
    rho_ref /= cfg.L;
    const double alpha_ref = std::exp(mean_log_alpha / cfg.L);
    const double rel = cfg.alpha[device] / alpha_ref;
    return {ds.energy / rho_ref, rel * ds.channel.h2 / cfg.sigma2_ul[device],
            rel * ds.channel.h2_fb / cfg.sigma2_dl[device]};
}

Mlp make_index_net(int budget, int hidden, Rng& rng) {
    return Mlp::random_init({3, hidden, hidden, budget}, rng);
}

bool IndexTable::action_feasible(const Allocation& alloc) const {
    if (static_cast<int>(alloc.a.size()) != L) return false;
    if (!alloc.feasible(M)) return false;
    for (int l = 0; l < L; ++l)
        if (is_masked(l, alloc.a[l])) return false;
    return true;
}

double IndexTable::score(const Allocation& alloc) const {
    if (!action_feasible(alloc)) return kNegInf;
    double s = 0.0;
    for (int l = L; l-- > 0;) s += entry(l, alloc.a[l]); // right-to-left, matches the DP association
    return s;
}

IndexTable make_table(int L, int M, std::vector<double> rows, std::vector<char> masked) {
    if (static_cast<int>(rows.size()) != L * (M + 1) || static_cast<int>(masked.size()) != L * M)
        throw std::invalid_argument("make_table: shape mismatch");
    for (int l = 0; l < L; ++l)
        if (rows[l * (M + 1)] != 0.0) throw std::invalid_argument("make_table: the a=0 entry must be 0");
    IndexTable t;
    t.L = L;
    t.M = M;
    t.rows = std::move(rows);
    t.masked = std::move(masked);
    return t;
}

IndexTable build_index_table(const Mlp& net, const CellState& state, const CellConfig& cfg,
                             bool literal_zero_masking) {
    const int L = cfg.L;
    const int M = cfg.M;
    if (net.output_width() != M) throw std::invalid_argument("build_index_table: net output width must equal M");

    IndexTable t;
    t.L = L;
    t.M = M;
    t.rows.assign(static_cast<size_t>(L) * (M + 1), 0.0);
    t.masked.assign(static_cast<size_t>(L) * M, 0);
    for (int l = 0; l < L; ++l) {
        const std::vector<double> mu = net.forward(device_features(cfg, l, state.devices[l]));
        const std::vector<char> mask = eligibility_mask(cfg, l, state.devices[l]);
        for (int a = 1; a <= M; ++a) {
            if (mask[a - 1] && literal_zero_masking) {
                t.rows[l * (M + 1) + a] = 0.0; // dominated entries kept with zero score
            } else {
                t.rows[l * (M + 1) + a] = mu[a - 1];
                t.masked[l * M + (a - 1)] = mask[a - 1];
            }
        }
    }
    return t;
}

Allocation best_action(const IndexTable& t) {
    const int L = t.L;
    const int M = t.M;
    // best[l][b]: maximum suffix score of devices l.. with at most b subcarriers
    std::vector<double> best(static_cast<size_t>(L + 1) * (M + 1), 0.0);
    for (int l = L; l-- > 0;) {
        for (int b = 0; b <= M; ++b) {
            double v = t.entry(l, 0) + best[(l + 1) * (M + 1) + b]; // a=0 always feasible
            const int amax = std::min(b, M);
            for (int a = 1; a <= amax; ++a) {
                if (t.is_masked(l, a)) continue;
                v = std::max(v, t.entry(l, a) + best[(l + 1) * (M + 1) + (b - a)]);
            }
            best[l * (M + 1) + b] = v;
        }
    }
    // walk forward choosing the smallest allocation that still attains the
    // optimum; the re-evaluated sums are bitwise identical to the DP's
    Allocation out{std::vector<int>(L, 0)};
    int b = M;
    for (int l = 0; l < L; ++l) {
        const double target = best[l * (M + 1) + b];
        int chosen = -1;
        for (int a = 0; a <= b; ++a) {
            if (t.is_masked(l, a)) continue;
            if (t.entry(l, a) + best[(l + 1) * (M + 1) + (b - a)] == target) {
                chosen = a;
                break;
            }
        }
        if (chosen < 0) throw std::logic_error("best_action: reconstruction failed");
        out.a[l] = chosen;
        b -= chosen;
    }
    return out;
}

ActionDistribution policy_probabilities(const IndexTable& t, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("policy_probabilities: temperature must be > 0");
    ActionDistribution dist;
    dist.actions = enumerate_actions(t.L, t.M);
    std::vector<double> scores;
    scores.reserve(dist.actions.size());
    std::vector<char> excluded;
    excluded.reserve(dist.actions.size());
    for (const Allocation& a : dist.actions) {
        const double s = t.score(a);
        excluded.push_back(s == kNegInf ? 1 : 0);
        scores.push_back(s == kNegInf ? 0.0 : s / temperature);
    }
    dist.prob = masked_softmax(scores, excluded);
    return dist;
}

namespace {

// Per-device exp weights after a per-device max shift (the joint softmax is
// invariant to per-device shifts because every joint action uses exactly one
// entry per device). Masked entries get weight zero.
struct FactoredWeights {
    int L, M;
    std::vector<double> w;      // L x (M+1)
    std::vector<double> shift;  // per device
    std::vector<double> suffix; // (L+1) x (M+1) partition sums

    double weight(int l, int k) const { return w[l * (M + 1) + k]; }
    double z(int l, int b) const { return suffix[l * (M + 1) + b]; }
};

FactoredWeights factored_weights(const IndexTable& t, double temperature) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
    FactoredWeights f;
    f.L = t.L;
    f.M = t.M;
    f.w.assign(static_cast<size_t>(t.L) * (t.M + 1), 0.0);
    f.shift.assign(t.L, 0.0);
    for (int l = 0; l < t.L; ++l) {
        double mx = 0.0; // a=0 entry is always available at score 0
        for (int k = 1; k <= t.M; ++k)
            if (!t.is_masked(l, k)) mx = std::max(mx, t.entry(l, k) / temperature);
        f.shift[l] = mx;
        f.w[l * (t.M + 1) + 0] = std::exp(0.0 - mx);
        for (int k = 1; k <= t.M; ++k)
            if (!t.is_masked(l, k)) f.w[l * (t.M + 1) + k] = std::exp(t.entry(l, k) / temperature - mx);
    }
    f.suffix.assign(static_cast<size_t>(t.L + 1) * (t.M + 1), 1.0);
    for (int l = t.L; l-- > 0;) {
        for (int b = 0; b <= t.M; ++b) {
            double acc = 0.0;
            for (int k = 0; k <= b; ++k) acc += f.weight(l, k) * f.z(l + 1, b - k);
            f.suffix[l * (t.M + 1) + b] = acc;
        }
    }
    return f;
}

} // namespace

Allocation sample_action(const IndexTable& t, double temperature, Rng& rng) {
    const FactoredWeights f = factored_weights(t, temperature);
    Allocation out{std::vector<int>(t.L, 0)};
    int b = t.M;
    for (int l = 0; l < t.L; ++l) {
        const double z = f.z(l, b);
        double u = rng.uniform01() * z;
        int chosen = b; // fall through to the last feasible bucket on rounding
        for (int k = 0; k <= b; ++k) {
            const double m = f.weight(l, k) * f.z(l + 1, b - k);
            if (u < m) {
                chosen = k;
                break;
            }
            u -= m;
        }
        while (chosen > 0 && f.weight(l, chosen) == 0.0) --chosen; // never land on a masked entry
        out.a[l] = chosen;
        b -= chosen;
    }
    return out;
}

std::vector<double> policy_marginals(const IndexTable& t, double temperature) {
    const FactoredWeights f = factored_weights(t, temperature);
    const int L = t.L, M = t.M;
    // prefix[l][u]: partition over devices 0..l-1 consuming exactly u
    std::vector<double> prefix(static_cast<size_t>(L + 1) * (M + 1), 0.0);
    prefix[0] = 1.0;
    for (int l = 0; l < L; ++l) {
        for (int u = 0; u <= M; ++u) {
            const double p = prefix[l * (M + 1) + u];
            if (p == 0.0) continue;
            for (int k = 0; k + u <= M; ++k) {
                const double w = f.weight(l, k);
                if (w != 0.0) prefix[(l + 1) * (M + 1) + (u + k)] += p * w;
            }
        }
    }
    const double ztot = f.z(0, M);
    std::vector<double> marg(static_cast<size_t>(L) * (M + 1), 0.0);
    for (int l = 0; l < L; ++l) {
        for (int k = 0; k <= M; ++k) {
            const double w = f.weight(l, k);
            if (w == 0.0) continue;
            double acc = 0.0;
            for (int u = 0; u + k <= M; ++u)
                acc += prefix[l * (M + 1) + u] * f.z(l + 1, M - u - k);
            marg[l * (M + 1) + k] = w * acc / ztot;
        }
    }
    return marg;
}

double log_policy_probability(const IndexTable& t, const Allocation& alloc, double temperature) {
    if (!t.action_feasible(alloc)) return kNegInf;
    const FactoredWeights f = factored_weights(t, temperature);
    double lp = 0.0;
    for (int l = 0; l < t.L; ++l) lp += t.entry(l, alloc.a[l]) / temperature - f.shift[l];
    return lp - std::log(f.z(0, t.M));
}

ItpgPolicy::ItpgPolicy(Mlp net, CellConfig cfg, bool literal_zero_masking)
    : net_(std::move(net)), cfg_(std::move(cfg)), literal_zero_(literal_zero_masking) {}

Allocation ItpgPolicy::decide(const CellState& state, Rng&) {
    return best_action(build_index_table(net_, state, cfg_, literal_zero_));
}

IndexTable table_from_features(const Mlp& net, const std::vector<double>& features,
                               const std::vector<char>& masks, int L, int M, bool literal_zero_masking) {
    IndexTable t;
    t.L = L;
    t.M = M;
    t.rows.assign(static_cast<size_t>(L) * (M + 1), 0.0);
    t.masked.assign(static_cast<size_t>(L) * M, 0);
    for (int l = 0; l < L; ++l) {
        const std::span<const double> x(features.data() + 3 * l, 3);
        const std::vector<double> mu = net.forward(x);
        for (int a = 1; a <= M; ++a) {
            const bool msk = masks[l * M + (a - 1)] != 0;
            if (msk && literal_zero_masking) {
                t.rows[l * (M + 1) + a] = 0.0;
            } else {
                t.rows[l * (M + 1) + a] = mu[a - 1];
                t.masked[l * M + (a - 1)] = msk ? 1 : 0;
            }
        }
    }
    return t;
}

void accumulate_log_policy_gradient(const Mlp& net, const std::vector<double>& features,
                                    const std::vector<char>& masks, const Allocation& action, double coef,
                                    double temperature, bool literal_zero_masking, std::vector<double>& grad,
                                    double score_decay) {
    const int L = static_cast<int>(action.a.size());
    const int M = net.output_width();
    const IndexTable table = table_from_features(net, features, masks, L, M, literal_zero_masking);
    const std::vector<double> marg = policy_marginals(table, temperature);
    Mlp::Workspace ws;
    for (int l = 0; l < L; ++l) {
        std::vector<double> upstream(M, 0.0);
        bool any = false;
        for (int k = 1; k <= M; ++k) {
            const bool msk = masks[l * M + (k - 1)] != 0;
            if (msk) continue; // masked entries are either excluded or pinned to zero
            const double indicator = (action.a[l] == k) ? 1.0 : 0.0;
            const double g = (coef / temperature) * (indicator - marg[l * (M + 1) + k]) +
                             score_decay * table.entry(l, k);
            upstream[k - 1] = g;
            if (g != 0.0) any = true;
        }
        if (!any) continue;
        const std::span<const double> x(features.data() + 3 * l, 3);
        net.forward(x, ws);
        net.backward(ws, upstream, grad);
    }
}

namespace {

struct StepRecord {
    std::vector<double> features; // L x 3, flattened
    std::vector<char> masks;      // L x M
    std::vector<int> action;
    double old_logp = 0.0;
    double min_energy = 0.0; // scaled by the mean reserve; baseline conditioning
};

struct EpisodeRecord {
    std::vector<StepRecord> steps;
    long lifespan = 0;
};

EpisodeRecord sample_training_episode(const Mlp& net, const CellConfig& cfg, const ItpgOptions& opt, Rng& rng) {
    EpisodeRecord ep;
    CellState s = initial_state(cfg, rng);
    while (s.all_alive()) {
        StepRecord rec;
        rec.features.reserve(3 * cfg.L);
        rec.masks.assign(static_cast<size_t>(cfg.L) * cfg.M, 0);
        rec.min_energy = std::numeric_limits<double>::infinity();
        for (int l = 0; l < cfg.L; ++l) {
            const auto fx = device_features(cfg, l, s.devices[l]);
            rec.min_energy = std::min(rec.min_energy, fx[0]);
            rec.features.insert(rec.features.end(), fx.begin(), fx.end());
            const auto mask = eligibility_mask(cfg, l, s.devices[l]);
            std::copy(mask.begin(), mask.end(), rec.masks.begin() + l * cfg.M);
        }
        const IndexTable table =
            table_from_features(net, rec.features, rec.masks, cfg.L, cfg.M, opt.literal_zero_masking);
        const Allocation a = sample_action(table, opt.temperature, rng);
        rec.action = a.a;
        rec.old_logp = log_policy_probability(table, a, opt.temperature);

        std::vector<ChannelDraw> next(cfg.L);
        for (int l = 0; l < cfg.L; ++l) next[l] = sample_channels(cfg, l, rng);
        s = step(cfg, s, a, next, cfg.forward_code);
        ep.steps.push_back(std::move(rec));
    }
    ep.lifespan = static_cast<long>(ep.steps.size());
    return ep;
}

// Canonical value-net input: worst and mean reserve up front (cell death is
// decided by the minimum, and the aggregates break the colinearity between
// device energies), then the per-device triples ordered by energy.
std::vector<double> critic_features(const std::vector<double>& features, int L) {
    std::vector<int> order(L);
    for (int l = 0; l < L; ++l) order[l] = l;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return features[3 * a] < features[3 * b]; });
    std::vector<double> out;
    out.reserve(2 + 3 * L);
    double mean = 0.0;
    for (int l = 0; l < L; ++l) mean += features[3 * l] / L;
    out.push_back(features[3 * order.front()]);
    out.push_back(mean);
    for (int l : order)
        for (int k = 0; k < 3; ++k) out.push_back(features[3 * l + k]);
    return out;
}

} // namespace

Mlp pretrain_index_net(const CellConfig& cfg, int hidden, long steps, Rng& rng) {
    // tabulate the single-device advantage on grids spanning the full reserve
    double rho_ref = 0.0;
    for (int l = 0; l < cfg.L; ++l) rho_ref += cfg.rho[l] / cfg.L;
    double rho_max = 0.0;
    for (int l = 0; l < cfg.L; ++l) rho_max = std::max(rho_max, cfg.rho[l]);
    OracleGrids grids;
    grids.energy_cap = rho_max * 1.02;
    grids.channel_cells = 8;
    grids.max_states = 400000;
    const QuantizedSingleDeviceMDP mdp = build_quantized_oracle(cfg, grids);
    const OracleSolution sol = value_iteration(mdp);

    Mlp net = make_index_net(cfg.M, hidden, rng);
    AdamState adam;
    std::vector<double> grad(net.parameter_count(), 0.0);
    Mlp::Workspace ws;
    const int batch = 64;
    for (long step = 0; step < steps; ++step) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int b = 0; b < batch; ++b) {
            const int k = 1 + static_cast<int>(rng.below(mdp.n_energy - 1));
            const int i = static_cast<int>(rng.below(mdp.n_h));
            const int j = static_cast<int>(rng.below(mdp.n_g));
            const std::vector<double> x = {mdp.energy_of(k) / rho_ref, mdp.h_values[i] / cfg.sigma2_ul[0],
                                           mdp.g_values[j] / cfg.sigma2_dl[0]};
            const std::vector<double> y = net.forward(x, ws);
            std::vector<double> upstream(cfg.M);
            for (int a = 1; a <= cfg.M; ++a)
                upstream[a - 1] = 2.0 * (y[a - 1] - sol.index(k, i, j, a)) / batch;
            net.backward(ws, upstream, grad);
        }
        adam_step(net, adam, grad, 1e-3);
    }
    return net;
}

ItpgTrainResult itpg_train(const CellConfig& cfg, const ItpgOptions& opt, Rng& rng, const Mlp* init) {
    Mlp net = init ? *init : make_index_net(cfg.M, opt.hidden, rng);
    if (net.output_width() != cfg.M) throw std::invalid_argument("itpg_train: initial net width mismatch");
    AdamState adam;
    std::vector<TrainLogRow> log;

    // state-value net for the clipped-surrogate variant
    Mlp critic = opt.use_ppo
                     ? Mlp::random_init({2 + 3 * cfg.L, opt.critic_hidden, opt.critic_hidden, 1}, rng)
                     : Mlp({1, 1});
    AdamState critic_adam;
    std::vector<double> critic_grad(critic.parameter_count(), 0.0);

    const long batches = std::max(1L, opt.episodes / std::max(1, opt.batch_episodes));
    std::vector<double> grad(net.parameter_count(), 0.0);

    long episodes_done = 0;
    for (long batch = 0; batch < batches; ++batch) {
        std::vector<EpisodeRecord> eps;
        eps.reserve(opt.batch_episodes);
        for (int e = 0; e < opt.batch_episodes; ++e) eps.push_back(sample_training_episode(net, cfg, opt, rng));
        episodes_done += opt.batch_episodes;

        // per-cycle rewards and their return-to-go: the geometrically shaped
        // form for the plain policy-gradient path (its episode sum telescopes
        // to the lifespan), the uniform unit form for the surrogate path where
        // the value net supplies per-step credit (both objectives agree in
        // expectation, but uniform rewards keep mid-episode residuals alive)
        std::vector<std::vector<double>> rewards(eps.size());
        std::vector<std::vector<double>> returns(eps.size());
        long longest = 0;
        for (size_t e = 0; e < eps.size(); ++e) {
            const long T = eps[e].lifespan;
            if (T == 0) continue;
            longest = std::max(longest, T);
            rewards[e] = opt.use_ppo ? std::vector<double>(T, 1.0) : shaped_rewards(T, opt.shaping_rho);
            returns[e].assign(T, 0.0);
            double suffix = 0.0;
            for (long t = T; t-- > 0;) {
                suffix += rewards[e][t];
                returns[e][t] = suffix;
            }
        }
        if (longest == 0) continue;

        // advantages: lambda-weighted one-step residuals against the value net
        // (surrogate variant), else the return-to-go minus an aligned baseline
        std::vector<std::vector<double>> gae_adv;
        std::vector<std::vector<double>> critic_target;
        if (opt.use_ppo) {
            gae_adv.resize(eps.size());
            critic_target.resize(eps.size());
            double mean = 0.0, sq = 0.0;
            long n = 0;
            for (size_t e = 0; e < eps.size(); ++e) {
                const long T = eps[e].lifespan;
                std::vector<double> v(T + 1, 0.0); // value after the last cycle is zero
                for (long t = 0; t < T; ++t)
                    v[t] = critic.forward(critic_features(eps[e].steps[t].features, cfg.L))[0];
                gae_adv[e].assign(T, 0.0);
                critic_target[e].assign(T, 0.0);
                double acc = 0.0;
                for (long t = T; t-- > 0;) {
                    const double delta = rewards[e][t] + v[t + 1] - v[t];
                    acc = delta + opt.gae_lambda * acc;
                    gae_adv[e][t] = acc;
                    critic_target[e][t] = acc + v[t];
                }
                for (double a : gae_adv[e]) {
                    mean += a;
                    sq += a * a;
                    ++n;
                }
            }
            mean /= std::max(1L, n);
            const double sd = std::sqrt(std::max(1e-16, sq / std::max(1L, n) - mean * mean));
            if (opt.normalize_advantages)
                for (auto& v : gae_adv)
                    for (double& a : v) a = (a - mean) / sd;
        }

        std::vector<std::vector<double>> reinforce_adv;
        if (!opt.use_ppo) {
            // state-conditioned baseline: mean return-to-go among the episodes
            // still alive at each cycle, refined by the cell's worst reserve
            // level (the return shrinks structurally toward the end of an
            // episode, and a cell already running low is expected to finish
            // sooner; conditioning on both focuses the advantage on what the
            // allocation changed)
            constexpr int kBuckets = 6;
            const auto bucket_of = [&](size_t e, size_t t) {
                const double m = eps[e].steps[t].min_energy;
                return std::clamp(static_cast<int>(m * kBuckets / 1.2), 0, kBuckets - 1);
            };
            std::vector<double> base_t(longest, 0.0);
            std::vector<long> alive(longest, 0);
            std::vector<double> cell_sum(static_cast<size_t>(longest) * kBuckets, 0.0);
            std::vector<long> cell_n(static_cast<size_t>(longest) * kBuckets, 0);
            for (size_t e = 0; e < eps.size(); ++e)
                for (size_t t = 0; t < returns[e].size(); ++t) {
                    base_t[t] += returns[e][t];
                    alive[t] += 1;
                    const size_t c = t * kBuckets + bucket_of(e, t);
                    cell_sum[c] += returns[e][t];
                    cell_n[c] += 1;
                }
            for (long t = 0; t < longest; ++t)
                if (alive[t] > 0) base_t[t] /= alive[t];
            const auto baseline = [&](size_t e, size_t t) {
                const size_t c = t * kBuckets + bucket_of(e, t);
                return cell_n[c] >= 4 ? cell_sum[c] / cell_n[c] : base_t[t];
            };
            double global_sd = 0.0;
            long count = 0;
            std::vector<double> spread(longest, 0.0);
            for (size_t e = 0; e < eps.size(); ++e)
                for (size_t t = 0; t < returns[e].size(); ++t) {
                    const double d = returns[e][t] - baseline(e, t);
                    spread[t] += d * d;
                    global_sd += d * d;
                    ++count;
                }
            global_sd = std::sqrt(global_sd / std::max(1L, count));
            std::vector<double> denom(longest, 1.0);
            for (long t = 0; t < longest; ++t) {
                if (!opt.normalize_advantages) continue;
                const double sd = alive[t] > 1 ? std::sqrt(spread[t] / alive[t]) : global_sd;
                denom[t] = std::max(sd, std::max(global_sd * 0.1, 1e-8));
            }
            reinforce_adv.resize(eps.size());
            for (size_t e = 0; e < eps.size(); ++e) {
                reinforce_adv[e].assign(returns[e].size(), 0.0);
                for (size_t t = 0; t < returns[e].size(); ++t)
                    reinforce_adv[e][t] = (returns[e][t] - baseline(e, t)) / denom[t];
            }
        }
        const auto advantage = [&](size_t e, size_t t) {
            return opt.use_ppo ? gae_adv[e][t] : reinforce_adv[e][t];
        };

        // running mean of the sampled log-probabilities, for the entropy term
        double mean_logp = 0.0;
        long logp_n = 0;
        for (const auto& ep : eps)
            for (const auto& st : ep.steps) {
                mean_logp += st.old_logp;
                ++logp_n;
            }
        if (logp_n > 0) mean_logp /= logp_n;

        const int epochs = opt.use_ppo ? opt.ppo_epochs : 1;
        for (int epoch = 0; epoch < epochs; ++epoch) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (size_t e = 0; e < eps.size(); ++e) {
                for (size_t t = 0; t < eps[e].steps.size(); ++t) {
                    const StepRecord& rec = eps[e].steps[t];
                    const double adv = advantage(e, t);
                    const Allocation act{rec.action};
                    double coef = adv;
                    double logp = rec.old_logp;
                    if (opt.use_ppo) {
                        const IndexTable table =
                            table_from_features(net, rec.features, rec.masks, cfg.L, cfg.M, opt.literal_zero_masking);
                        logp = log_policy_probability(table, act, opt.temperature);
                        const double ratio = std::exp(logp - rec.old_logp);
                        const bool clipped = (adv >= 0.0 && ratio > 1.0 + opt.ppo_clip) ||
                                             (adv < 0.0 && ratio < 1.0 - opt.ppo_clip);
                        if (clipped) continue;
                        coef = adv * ratio;
                    }
                    // entropy pressure via the score-function estimator of its
                    // gradient: committed steps (log-likelihood above average)
                    // are nudged back down
                    coef -= opt.entropy_bonus * (logp - mean_logp);
                    // descent direction for the maximization objective
                    accumulate_log_policy_gradient(net, rec.features, rec.masks, act, -coef, opt.temperature,
                                                   opt.literal_zero_masking, grad, opt.score_decay);
                }
            }
            for (double& g : grad) g /= static_cast<double>(eps.size());
            const double frac = batches > 1 ? static_cast<double>(batch) / (batches - 1) : 0.0;
            const double lr = opt.learning_rate * (1.0 + (opt.final_lr_fraction - 1.0) * frac);
            adam_step(net, adam, grad, lr);
            if (!net.finite()) throw std::runtime_error("itpg_train: parameters went non-finite");
        }

        if (opt.use_ppo) {
            // refit the value net toward the lambda-returns (extra passes while
            // it is still cold)
            Mlp::Workspace ws;
            long n = 0;
            for (const auto& ep : eps) n += ep.lifespan;
            const int passes = batch < 5 ? 12 : 6;
            for (int pass = 0; pass < passes; ++pass) {
                std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
                for (size_t e = 0; e < eps.size(); ++e) {
                    for (size_t t = 0; t < eps[e].steps.size(); ++t) {
                        const std::vector<double> x = critic_features(eps[e].steps[t].features, cfg.L);
                        const double v = critic.forward(x, ws)[0];
                        const std::vector<double> upstream = {2.0 * (v - critic_target[e][t]) / n};
                        critic.backward(ws, upstream, critic_grad);
                    }
                }
                adam_step(critic, critic_adam, critic_grad, opt.critic_lr);
            }
        }

        double mean_T = 0.0;
        for (const auto& ep : eps) mean_T += ep.lifespan;
        mean_T /= eps.size();
        TrainLogRow row;
        row.episode = episodes_done;
        row.mean_return = mean_T;
        row.eval_lifespan = std::numeric_limits<double>::quiet_NaN();
        if (opt.eval_every_batches > 0 && (batch + 1) % opt.eval_every_batches == 0) {
            ItpgPolicy greedy(net, cfg, opt.literal_zero_masking);
            Rng eval_rng(Rng::derive_seed(0xe7a1u, static_cast<std::uint64_t>(batch)));
            row.eval_lifespan = estimate_lifespan(greedy, cfg, opt.eval_episodes, eval_rng).mean;
        }
        log.push_back(row);
    }

    return ItpgTrainResult{std::move(net), std::move(log)};
}

} // namespace deepiot
