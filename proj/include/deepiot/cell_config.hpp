#pragma once

#include "deepiot/fit_model.hpp"

#include <map>
#include <string>
#include <vector>

namespace deepiot {

/// Full physical + protocol configuration of one IoT cell. Powers live in a
/// single consistent linear unit (watt-equivalent); the noise density is
/// entered in dBm and converted by the loader.
struct CellConfig {
    int L = 4;          // device count
    int M = 4;          // downlink feedback subcarriers
    int K = 48;         // information bits per cycle
    int N = 144;        // real channel uses per cycle
    double R = 1.0 / 3; // code rate K/N
    int kappa = 3;      // bits per group, K/(2Q)
    int G = 9;          // uplink frames per cycle
    int Q = 8;          // OFDM symbols per frame
    double t_ofdm = 1.0;
    double n0 = 1e-12;  // noise power, linear

    // Per-device vectors, length L.
    std::vector<double> alpha;     // path loss
    std::vector<double> sigma2_ul; // mean |h|^2
    std::vector<double> sigma2_dl; // mean |h~|^2
    std::vector<double> rho;       // initial energy reserve

    double p_max = 0.5;        // device transmit power cap
    double p_ap_max = 4.0;     // access point transmit power
    double p_receive = 0.5 * 4.0 / 135.0;   // ~1.4815e-2, scaled from chip current ratios
    double p_sleep = 0.5 * 4.0e-3 / 135.0;  // ~1.4815e-5

    FitConstants fit = FitConstants::defaults();

    // Forward-code thresholds: minimum uplink SNR (dB) for the conventional
    // codes used when a device gets no feedback subcarriers.
    std::map<std::string, double> forward_thresholds_db;

    // Code a device falls back to when it receives no feedback subcarriers.
    std::string forward_code = "turbo";

    double target_per = 1e-4;

    void validate() const;

    double seconds_per_ul_phase() const { return t_ofdm * Q * G; }
    double seconds_per_dl_phase() const { return t_ofdm * Q * (G - 1); }
};

/// Verbatim parameter-table preset. The feedback SNR sits near 83 dB and the
/// power cap essentially never binds, so allocation decisions are degenerate;
/// useful for physical-layer checks only.
CellConfig preset_table1(int num_devices = 4, int num_subcarriers = 4);

/// Path loss rescaled (alpha = 8e-12) so the median feedback SNR sits near
/// 20 dB, the power cap binds a few percent of the time, and the average
/// transmit power reductions versus the forward-code baselines land on the
/// reference values. Initial energy is pilot-calibrated so the no-feedback
/// Turbo baseline survives about 200 cycles at L = 1.
CellConfig preset_calibrated(int num_devices = 4, int num_subcarriers = 4);

CellConfig preset_by_name(const std::string& name, int num_devices, int num_subcarriers);

/// JSON config I/O. Field names mirror the struct; dB-valued fields carry a
/// _db or _dbm suffix (n0_dbm, forward_thresholds_db). Per-device fields
/// accept either a scalar or an array of length L.
CellConfig load_config_json(const std::string& json_text);
CellConfig load_config_file(const std::string& path);
std::string config_to_json(const CellConfig& cfg);

/// Threshold lookup for the a = 0 (conventional forward code) branch.
double forward_required_snr_db(const CellConfig& cfg, const std::string& code);

} // namespace deepiot
