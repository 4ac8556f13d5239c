#pragma once

#include "deepiot/cell_config.hpp"
#include "deepiot/state.hpp"

#include <vector>

namespace deepiot {

/// Closed-form dominance screening for per-device allocations. An action a is
/// masked when assigning a subcarriers to the device cannot beat assigning
/// none: either the feedback SNR is below the viability threshold, the
/// required SNR exceeds what the uplink can deliver even at full power, or a
/// lies at or below the dominance threshold a_th solved from the zero-benefit
/// boundary.
struct PruningDecision {
    std::vector<char> masked; // size M, masked[a-1] != 0 means action a is excluded
    bool all_masked = false;
    bool used_threshold = false;
    double a_th = 0.0; // valid when used_threshold
    int branch = 0;    // 0: no threshold involved, 2: forward code feasible, 3: forward code infeasible

    bool is_masked(int a) const { return a >= 1 && masked[a - 1] != 0; }
};

PruningDecision pruning_decision(const CellConfig& cfg, int device, double h2, double h2_fb);

/// Per-action exclusion flags for a = 1..M (true = excluded).
std::vector<char> eligibility_mask(const CellConfig& cfg, int device, const DeviceState& ds);

/// The scaled benefit-of-feedback quantity whose sign decides whether a
/// subcarrier assignment beats the forward-code fallback:
///   H = min(eta_max, eta0) - min(eta_max, eta*(h2_fb, a)) - (G-1)/G (Pr-Ps) alpha h2 / N0.
/// All terms linear.
double index_sign_margin(const CellConfig& cfg, int device, double h2, double h2_fb, int a);

/// True when the closed form predicts a non-positive index for action a.
inline bool index_sign_condition_nonpositive(const CellConfig& cfg, int device, double h2, double h2_fb, int a) {
    return index_sign_margin(cfg, device, h2, h2_fb, a) <= 0.0;
}

} // namespace deepiot
