#pragma once

#include <cmath>
#include <stdexcept>

namespace deepiot {

/// Decibel <-> linear conversions. All SNRs and powers in this library are
/// linear unless the identifier carries a _db / _dbm suffix.
inline double db_to_linear(double x_db) { return std::pow(10.0, x_db / 10.0); }

inline double linear_to_db(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("linear_to_db: input must be strictly positive");
    }
    return 10.0 * std::log10(x);
}

/// dBm referenced to the simulator's linear power unit (watt-equivalent),
/// i.e. -90 dBm -> 1e-12.
inline double dbm_to_linear(double x_dbm) { return std::pow(10.0, (x_dbm - 30.0) / 10.0); }

inline double linear_to_dbm(double x) { return linear_to_db(x) + 30.0; }

} // namespace deepiot
