#pragma once

#include "deepiot/energy.hpp"

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepiot {

struct DeviceState {
    double energy = 0.0;
    ChannelDraw channel;
};

/// Joint cell state at the start of a cycle. Terminal once any device's
/// reserve has gone negative; a device at exactly zero cannot complete
/// another cycle but the state itself is not terminal.
struct CellState {
    std::vector<DeviceState> devices;
    long cycle = 0;

    double min_energy() const {
        double m = devices.front().energy;
        for (const auto& d : devices) m = std::min(m, d.energy);
        return m;
    }
    bool terminal() const { return min_energy() < 0.0; }
    bool all_alive() const { return min_energy() > 0.0; }
};

/// Per-cycle subcarrier assignment, one count per device, total at most M.
struct Allocation {
    std::vector<int> a;

    int total() const { return std::accumulate(a.begin(), a.end(), 0); }
    bool feasible(int budget) const {
        for (int x : a)
            if (x < 0) return false;
        return total() <= budget;
    }
};

inline CellState initial_state(const CellConfig& cfg, Rng& rng) {
    CellState s;
    s.devices.resize(cfg.L);
    for (int l = 0; l < cfg.L; ++l) {
        s.devices[l].energy = cfg.rho[l];
        s.devices[l].channel = sample_channels(cfg, l, rng);
    }
    s.cycle = 0;
    return s;
}

/// Advance one cycle: drain each device by its transmit/receive/sleep energy
/// at the current draw and assignment, install the next cycle's draws, and
/// bump the cycle counter. Energy strictly decreases for every device.
inline CellState step(const CellConfig& cfg, const CellState& state, const Allocation& alloc,
                      const std::vector<ChannelDraw>& next_draws, const std::string& forward_code) {
    if (state.terminal()) throw std::logic_error("step: cannot step a terminal state");
    if (!alloc.feasible(cfg.M)) throw std::invalid_argument("step: allocation exceeds the subcarrier budget");
    if (static_cast<int>(alloc.a.size()) != cfg.L || static_cast<int>(next_draws.size()) != cfg.L)
        throw std::invalid_argument("step: size mismatch");

    CellState next = state;
    for (int l = 0; l < cfg.L; ++l) {
        const double p = transmit_power(cfg, l, state.devices[l].channel, alloc.a[l], forward_code);
        const EnergyBreakdown e = energy_breakdown(cfg, p, alloc.a[l]);
        next.devices[l].energy = state.devices[l].energy - e.total();
        next.devices[l].channel = next_draws[l];
    }
    next.cycle = state.cycle + 1;
    return next;
}

} // namespace deepiot
