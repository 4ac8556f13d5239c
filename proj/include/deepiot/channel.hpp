#pragma once

#include "deepiot/cell_config.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace deepiot {

/// Deterministic random source. Wraps mt19937_64 but generates variates with
/// explicit, portable algorithms so identical seeds give identical streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Exponential with the given mean (inverse-CDF sampling).
    double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    /// Derive an independent stream (splitmix-style mixing).
    static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
        std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

/// Squared channel magnitudes for one device in one cycle; the phase is
/// compensated at the transmitter so only |h|^2 matters.
struct ChannelDraw {
    double h2 = 0.0;    // uplink |h|^2
    double h2_fb = 0.0; // downlink |h~|^2
};

/// Rayleigh fading: squared magnitudes are exponential with the configured
/// mean gains. Draws are independent across devices and cycles; the gain is
/// constant within a cycle.
inline ChannelDraw sample_channels(const CellConfig& cfg, int device, Rng& rng) {
    ChannelDraw draw;
    draw.h2 = rng.exponential(cfg.sigma2_ul[device]);
    draw.h2_fb = rng.exponential(cfg.sigma2_dl[device]);
    return draw;
}

} // namespace deepiot
