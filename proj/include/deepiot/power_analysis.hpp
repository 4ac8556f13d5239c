#pragma once

#include "deepiot/cell_config.hpp"
#include "deepiot/channel.hpp"

#include <string>

namespace deepiot {

/// Constants of the closed-form uncapped transmit power
///   P = U0 * (1/|h|^2) * exp{ U1 / (U2 * (|h~|^2)^U3 + u4) },
/// all strictly positive for a >= 1.
struct PropConstants {
    double U0 = 0.0;
    double U1 = 0.0;
    double U2 = 0.0;
    double U3 = 0.0;
};

PropConstants prop_constants(const CellConfig& cfg, int device, int a);

/// One draw of the uncapped transmit power (both fading channels sampled).
double sample_uncapped_power(const CellConfig& cfg, int device, int a, Rng& rng);

/// Density of the feedback-SNR factor S = exp{U1/(U2 y^U3 + u4)} over its
/// support (1, e^{U1/u4}); zero outside.
double s_pdf(double s, const PropConstants& pc, double sigma2_dl, double u4);

/// Density and CDF of the uncapped transmit power, evaluated by adaptive
/// quadrature of the substituted one-dimensional integral on (0, U1/u4].
/// Throws std::runtime_error with diagnostics if the quadrature fails to
/// reach its tolerance.
double power_pdf(double p, const CellConfig& cfg, int device, int a);
double power_cdf(double p, const CellConfig& cfg, int device, int a);

/// Mean transmit power with the cap applied: E[min(P, p_max)], via the
/// power density (inner quadrature) plus the capped tail mass.
double expected_power(const CellConfig& cfg, int device, int a);

/// Same quantity for the a = 0 forward-code branch, in closed form through
/// the exponential integral.
double expected_power_forward(const CellConfig& cfg, int device, const std::string& code);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long samples = 0;
};

/// Monte-Carlo estimate of E[min(P, p_max)] over independent channel draws.
/// a = 0 uses the configured forward code.
McEstimate mc_expected_power(const CellConfig& cfg, int device, int a, long n, Rng& rng);

} // namespace deepiot
