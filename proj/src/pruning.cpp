#include "deepiot/pruning.hpp"

#include "deepiot/energy.hpp"
#include "deepiot/units.hpp"

#include <cmath>

namespace deepiot {

double index_sign_margin(const CellConfig& cfg, int device, double h2, double h2_fb, int a) {
    const double eta_max = max_ul_snr(cfg, device, h2);
    const double eta0 = db_to_linear(forward_required_snr_db(cfg, cfg.forward_code));
    const double eta_a = db_to_linear(required_snr_db(cfg, device, h2_fb, a, cfg.forward_code));
    const double delta = (static_cast<double>(cfg.G - 1) / cfg.G) * (cfg.p_receive - cfg.p_sleep) *
                         cfg.alpha[device] * h2 / cfg.n0;
    return std::min(eta_max, eta0) - std::min(eta_max, eta_a) - delta;
}

PruningDecision pruning_decision(const CellConfig& cfg, int device, double h2, double h2_fb) {
    PruningDecision d;
    d.masked.assign(cfg.M, 0);
    auto mask_all = [&] {
        std::fill(d.masked.begin(), d.masked.end(), 1);
        d.all_masked = true;
    };

    if (cfg.M == 0) return d;

    // Viability: below the threshold feedback SNR, extra subcarriers only make
    // the required SNR worse, so the device falls back to forward coding.
    if (h2_fb <= 0.0) {
        mask_all();
        return d;
    }
    const double fb_db = linear_to_db(dl_snr(cfg, device, h2_fb));
    const double denom = cfg.fit.u1 + cfg.fit.u2 * fb_db;
    if (fb_db < cfg.fit.viability_threshold_db()) {
        mask_all();
        return d;
    }
    if (denom <= 0.0) {
        // exactly on the viability line: the surface is flat in a, compare directly
        if (index_sign_margin(cfg, device, h2, h2_fb, 1) <= 0.0) mask_all();
        return d;
    }

    const double eta_max = max_ul_snr(cfg, device, h2);
    const double eta_at_M = db_to_linear(required_ul_snr_db(fb_db, cfg.M, cfg.fit));
    if (eta_at_M >= eta_max) {
        // even the full budget cannot bring the required SNR within reach
        mask_all();
        return d;
    }

    const double eta0 = db_to_linear(forward_required_snr_db(cfg, cfg.forward_code));
    double ref_db;
    if (eta0 <= eta_max) {
        d.branch = 2;
        const double delta = (static_cast<double>(cfg.G - 1) / cfg.G) * (cfg.p_receive - cfg.p_sleep) *
                             cfg.alpha[device] * h2 / cfg.n0;
        const double arg = eta0 - delta;
        if (arg <= 0.0) {
            // listening costs more than the whole forward transmit budget
            mask_all();
            return d;
        }
        ref_db = linear_to_db(arg);
    } else {
        d.branch = 3;
        ref_db = linear_to_db(eta_max);
    }

    if (ref_db <= cfg.fit.u5) {
        // reference below the surface floor: no allocation can reach it
        mask_all();
        return d;
    }
    const double ln_arg = 1.0 / (ref_db - cfg.fit.u5) - cfg.fit.u4;
    if (ln_arg <= 0.0) {
        // reference above the surface ceiling: every allocation clears it
        return d;
    }

    d.used_threshold = true;
    d.a_th = (std::log(ln_arg) - cfg.fit.u3 - cfg.fit.u0 * fb_db) / denom;
    const int upto = static_cast<int>(std::min<double>(cfg.M, std::floor(d.a_th)));
    for (int a = 1; a <= upto; ++a) d.masked[a - 1] = 1;
    d.all_masked = (upto >= cfg.M);
    return d;
}

std::vector<char> eligibility_mask(const CellConfig& cfg, int device, const DeviceState& ds) {
    return pruning_decision(cfg, device, ds.channel.h2, ds.channel.h2_fb).masked;
}

} // namespace deepiot
