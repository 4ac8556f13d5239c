#include "deepiot/dp_fa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace deepiot {

namespace {

std::string budget_message(unsigned long long size, unsigned long long budget) {
    std::ostringstream os;
    os << "dp_train: action space size " << size << " exceeds the enumeration budget " << budget
       << "; full-width backup over the joint action space is impractical at this scale";
    return os.str();
}

} // namespace

ActionSpaceBudgetError::ActionSpaceBudgetError(unsigned long long size_, unsigned long long budget_)
    : std::runtime_error(budget_message(size_, budget_)), size(size_), budget(budget_) {}

std::vector<double> cell_features(const CellConfig& cfg, const CellState& s) {
    std::vector<double> out;
    out.reserve(3 * cfg.L);
    for (int l = 0; l < cfg.L; ++l) {
        const auto f = device_features(cfg, l, s.devices[l]);
        out.insert(out.end(), f.begin(), f.end());
    }
    return out;
}

Mlp make_q_net(const CellConfig& cfg, int num_actions, int hidden, Rng& rng) {
    return Mlp::random_init({3 * cfg.L + num_actions, hidden, hidden, 1}, rng);
}

namespace {

// rows: n x (3L + |A|); each row is state features plus a one-hot action
void fill_row(std::vector<double>& X, size_t row, int width, const std::vector<double>& feat, int action_index,
              int num_actions) {
    double* out = X.data() + row * width;
    std::copy(feat.begin(), feat.end(), out);
    std::fill(out + feat.size(), out + width, 0.0);
    out[feat.size() + action_index] = 1.0;
    (void)num_actions;
}

// Components of the per-device successor energies for a given (state, action):
// the drain depends only on the current channels and assignment.
std::vector<double> successor_energies(const CellConfig& cfg, const CellState& s, const Allocation& a) {
    std::vector<double> e(cfg.L);
    for (int l = 0; l < cfg.L; ++l) {
        const double p = transmit_power(cfg, l, s.devices[l].channel, a.a[l], cfg.forward_code);
        e[l] = s.devices[l].energy - energy_breakdown(cfg, p, a.a[l]).total();
    }
    return e;
}

} // namespace

double bellman_target(const Mlp& target_net, const CellConfig& cfg, const CellState& s,
                      const Allocation& a, const std::vector<Allocation>& actions, int kmc, Rng& rng) {
    if (s.terminal()) return 0.0;
    const double reward = s.all_alive() ? 1.0 : 0.0;

    const std::vector<double> next_energy = successor_energies(cfg, s, a);
    double worst = *std::min_element(next_energy.begin(), next_energy.end());
    if (worst <= 0.0) return reward; // every successor is end-of-episode regardless of channels

    const int width = target_net.input_width();
    const int num_actions = static_cast<int>(actions.size());
    std::vector<double> X(static_cast<size_t>(kmc) * num_actions * width);
    CellState nxt;
    nxt.devices.resize(cfg.L);
    for (int k = 0; k < kmc; ++k) {
        for (int l = 0; l < cfg.L; ++l) {
            nxt.devices[l].energy = next_energy[l];
            nxt.devices[l].channel = sample_channels(cfg, l, rng);
        }
        const std::vector<double> feat = cell_features(cfg, nxt);
        for (int ai = 0; ai < num_actions; ++ai)
            fill_row(X, static_cast<size_t>(k) * num_actions + ai, width, feat, ai, num_actions);
    }
    const std::vector<double> Y = target_net.forward_batch(X, kmc * num_actions);
    double acc = 0.0;
    for (int k = 0; k < kmc; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (int ai = 0; ai < num_actions; ++ai) best = std::max(best, Y[static_cast<size_t>(k) * num_actions + ai]);
        acc += best;
    }
    return reward + acc / kmc;
}

DpFaPolicy::DpFaPolicy(Mlp net, CellConfig cfg)
    : net_(std::move(net)), cfg_(std::move(cfg)), actions_(enumerate_actions(cfg_.L, cfg_.M)) {}

Allocation DpFaPolicy::decide(const CellState& state, Rng&) {
    const int width = net_.input_width();
    const int num_actions = static_cast<int>(actions_.size());
    const std::vector<double> feat = cell_features(cfg_, state);
    std::vector<double> X(static_cast<size_t>(num_actions) * width);
    for (int ai = 0; ai < num_actions; ++ai) fill_row(X, ai, width, feat, ai, num_actions);
    const std::vector<double> Y = net_.forward_batch(X, num_actions);
    int best = 0;
    for (int ai = 1; ai < num_actions; ++ai)
        if (Y[ai] > Y[best]) best = ai; // first maximum = lexicographically smallest
    return actions_[best];
}

DpFaTrainResult dp_train(const CellConfig& cfg, const DpFaOptions& opt, Rng& rng) {
    const unsigned long long space = action_space_size(cfg.L, cfg.M);
    if (space > opt.action_budget) throw ActionSpaceBudgetError(space, opt.action_budget);
    const std::vector<Allocation> actions = enumerate_actions(cfg.L, cfg.M);
    const int num_actions = static_cast<int>(actions.size());

    Mlp net = make_q_net(cfg, num_actions, opt.hidden, rng);
    Mlp target = net;
    AdamState adam;

    struct Sample {
        CellState state;
        int action_index;
    };
    std::vector<Sample> buffer;
    buffer.reserve(4096);
    size_t write_pos = 0;

    const int width = net.input_width();
    std::vector<double> grad(net.parameter_count(), 0.0);
    Mlp::Workspace ws;

    auto greedy_index = [&](const CellState& s) {
        const std::vector<double> feat = cell_features(cfg, s);
        std::vector<double> X(static_cast<size_t>(num_actions) * width);
        for (int ai = 0; ai < num_actions; ++ai) fill_row(X, ai, width, feat, ai, num_actions);
        const std::vector<double> Y = net.forward_batch(X, num_actions);
        int best = 0;
        for (int ai = 1; ai < num_actions; ++ai)
            if (Y[ai] > Y[best]) best = ai;
        return best;
    };

    auto push_sample = [&](const CellState& s, int ai) {
        if (buffer.size() < opt.buffer_capacity) {
            buffer.push_back(Sample{s, ai});
        } else {
            buffer[write_pos] = Sample{s, ai};
            write_pos = (write_pos + 1) % opt.buffer_capacity;
        }
    };

    auto run_rollout = [&](double epsilon) {
        CellState s = initial_state(cfg, rng);
        while (s.all_alive()) {
            int ai = (rng.uniform01() < epsilon) ? static_cast<int>(rng.below(num_actions)) : greedy_index(s);
            push_sample(s, ai);
            std::vector<ChannelDraw> next(cfg.L);
            for (int l = 0; l < cfg.L; ++l) next[l] = sample_channels(cfg, l, rng);
            s = step(cfg, s, actions[ai], next, cfg.forward_code);
        }
    };

    run_rollout(1.0); // seed the buffer with an exploratory episode

    std::vector<TrainLogRow> log;
    double residual_acc = 0.0;
    long residual_n = 0;
    long episodes_done = 1;

    for (long update = 0; update < opt.updates; ++update) {
        const double frac = static_cast<double>(update) / std::max(1L, opt.updates - 1);
        const double epsilon = opt.epsilon_start + (opt.epsilon_end - opt.epsilon_start) * frac;
        if (update % opt.rollout_period == 0 && update > 0) {
            run_rollout(epsilon);
            ++episodes_done;
        }

        std::fill(grad.begin(), grad.end(), 0.0);
        double batch_residual = 0.0;
        for (int b = 0; b < opt.batch_size; ++b) {
            const Sample& smp = buffer[rng.below(buffer.size())];
            const double y = bellman_target(target, cfg, smp.state, actions[smp.action_index], actions, opt.kmc, rng);
            std::vector<double> x(width);
            fill_row(x, 0, width, cell_features(cfg, smp.state), smp.action_index, num_actions);
            const std::vector<double> out = net.forward(x, ws);
            const double err = out[0] - y;
            batch_residual += err * err;
            const std::vector<double> upstream = {2.0 * err / opt.batch_size};
            net.backward(ws, upstream, grad);
        }
        adam_step(net, adam, grad, opt.learning_rate);
        residual_acc += batch_residual / opt.batch_size;
        residual_n += 1;

        if ((update + 1) % opt.target_sync_period == 0) target = net;

        const bool log_now = (opt.eval_every_updates > 0 && (update + 1) % opt.eval_every_updates == 0) ||
                             update + 1 == opt.updates;
        if (log_now) {
            TrainLogRow row;
            row.episode = episodes_done;
            row.mean_return = residual_acc / std::max(1L, residual_n);
            residual_acc = 0.0;
            residual_n = 0;
            row.eval_lifespan = std::numeric_limits<double>::quiet_NaN();
            if (opt.eval_every_updates > 0 && opt.eval_episodes > 0) {
                DpFaPolicy greedy(net, cfg);
                Rng eval_rng(Rng::derive_seed(0xdfa0u, static_cast<std::uint64_t>(update)));
                row.eval_lifespan = estimate_lifespan(greedy, cfg, opt.eval_episodes, eval_rng).mean;
            }
            log.push_back(row);
        }
    }

    return DpFaTrainResult{std::move(net), std::move(log)};
}

} // namespace deepiot
