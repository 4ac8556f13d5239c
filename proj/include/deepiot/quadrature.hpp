#pragma once

#include <functional>

namespace deepiot {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
    int intervals = 0;
    bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (7,15) integration on (a, b). Nodes are
/// strictly interior, so integrable endpoint singularities are handled by
/// bisection toward the endpoint without ever evaluating on it. The worst
/// interval (by local error estimate) is split until the summed error drops
/// below max(abs_tol, rel_tol * |integral|) or the interval budget runs out.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-8, double abs_tol = 1e-30,
                                    int max_intervals = 4000);

} // namespace deepiot
