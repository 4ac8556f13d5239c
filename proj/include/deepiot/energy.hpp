#pragma once

#include "deepiot/cell_config.hpp"
#include "deepiot/channel.hpp"
#include "deepiot/units.hpp"

#include <algorithm>
#include <string>

namespace deepiot {

/// Downlink feedback SNR (linear) seen by `device` at squared gain h2_fb.
inline double dl_snr(const CellConfig& cfg, int device, double h2_fb) {
    return cfg.alpha[device] * h2_fb * cfg.p_ap_max / cfg.n0;
}

/// Uplink SNR (linear) at the access point for transmit power p.
inline double ul_snr(const CellConfig& cfg, int device, double h2, double p) {
    return cfg.alpha[device] * h2 * p / cfg.n0;
}

/// Maximum uplink SNR the device can deliver (transmitting at p_max).
inline double max_ul_snr(const CellConfig& cfg, int device, double h2) {
    return ul_snr(cfg, device, h2, cfg.p_max);
}

/// Required uplink SNR (dB) for the cycle: the logistic surface when a >= 1
/// feedback subcarriers are assigned, the forward-code threshold when a = 0.
/// A vanishing feedback gain is the surface-ceiling limit.
inline double required_snr_db(const CellConfig& cfg, int device, double h2_fb, int a,
                              const std::string& forward_code) {
    if (a >= 1) {
        const double snr_fb = dl_snr(cfg, device, h2_fb);
        if (snr_fb <= 0.0) return cfg.fit.ceiling_db();
        return required_ul_snr_db(linear_to_db(snr_fb), a, cfg.fit);
    }
    return forward_required_snr_db(cfg, forward_code);
}

/// Transmit power for the cycle: just enough to hit the required SNR, capped
/// at p_max. A zero uplink gain (measure-zero event) transmits at the cap.
inline double transmit_power(const CellConfig& cfg, int device, const ChannelDraw& draw, int a,
                             const std::string& forward_code) {
    if (a < 0) throw std::invalid_argument("transmit_power: a must be >= 0");
    if (draw.h2_fb < 0.0 || draw.h2 < 0.0) throw std::invalid_argument("transmit_power: negative squared gain");
    const double eta_db = required_snr_db(cfg, device, draw.h2_fb, a, forward_code);
    if (draw.h2 == 0.0) return cfg.p_max;
    const double p = db_to_linear(eta_db) * cfg.n0 / (cfg.alpha[device] * draw.h2);
    return std::min(cfg.p_max, p);
}

/// Energy spent by one device in one cycle, split by activity. A device with
/// feedback listens through the downlink frames (receive power); one without
/// sleeps through them.
struct EnergyBreakdown {
    double transmit = 0.0;
    double receive = 0.0;
    double sleep = 0.0;

    double total() const { return transmit + receive + sleep; }
};

inline EnergyBreakdown energy_breakdown(const CellConfig& cfg, double p, int a) {
    if (p < 0.0) throw std::invalid_argument("energy_breakdown: negative power");
    EnergyBreakdown e;
    e.transmit = p * cfg.seconds_per_ul_phase();
    e.receive = (a > 0) ? cfg.p_receive * cfg.seconds_per_dl_phase() : 0.0;
    e.sleep = (a == 0) ? cfg.p_sleep * cfg.seconds_per_dl_phase() : 0.0;
    return e;
}

/// Convenience: total per-cycle drain for a device at the given draw/action.
inline double cycle_drain(const CellConfig& cfg, int device, const ChannelDraw& draw, int a,
                          const std::string& forward_code) {
    const double p = transmit_power(cfg, device, draw, a, forward_code);
    return energy_breakdown(cfg, p, a).total();
}

} // namespace deepiot
