#pragma once

#include <cmath>
#include <stdexcept>

namespace deepiot {

/// Coefficients of the logistic surface that maps (feedback SNR, subcarrier
/// count) to the minimum uplink SNR meeting the target packet error rate.
struct FitConstants {
    double u0 = 0.08;
    double u1 = 0.5;
    double u2 = 0.05;
    double u3 = -2.65;
    double u4 = 0.116;
    double u5 = -1.22;

    /// Fitted for the K=48, R=1/3 configuration.
    static FitConstants defaults() { return FitConstants{}; }

    /// Fitted for the K=36, R=1/4 configuration.
    static FitConstants k36_r14() { return FitConstants{0.073, 0.4, 0.05, -1.92, 0.085, -1.8}; }

    // u2 > 0: better feedback SNR can never raise the required uplink SNR.
    // u4 > 0: keeps the surface (and the derived power distribution) bounded.
    void validate() const {
        if (!(u2 > 0.0)) throw std::invalid_argument("FitConstants: u2 must be > 0");
        if (!(u4 > 0.0)) throw std::invalid_argument("FitConstants: u4 must be > 0");
    }

    /// Open interval (floor, ceiling) containing every surface value.
    double floor_db() const { return u5; }
    double ceiling_db() const { return u5 + 1.0 / u4; }

    /// Feedback SNR below which extra subcarriers stop helping (dB).
    double viability_threshold_db() const { return -u1 / u2; }
};

/// Required uplink SNR (dB) of the feedback-coded link with `a >= 1` downlink
/// feedback subcarriers at feedback SNR `eta_fb_db`. The a = 0 case is the
/// conventional forward-code branch and is handled by the per-code thresholds
/// in CellConfig, never by this surface.
inline double required_ul_snr_db(double eta_fb_db, int a, const FitConstants& fit) {
    if (a < 1) {
        throw std::invalid_argument("required_ul_snr_db: a must be >= 1 (a = 0 uses the forward-code threshold)");
    }
    const double expo = fit.u0 * eta_fb_db + fit.u1 * a + fit.u2 * eta_fb_db * a + fit.u3;
    return 1.0 / (std::exp(expo) + fit.u4) + fit.u5;
}

} // namespace deepiot
