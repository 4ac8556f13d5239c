#include "deepiot/power_analysis.hpp"

#include "deepiot/energy.hpp"
#include "deepiot/quadrature.hpp"
#include "deepiot/units.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace deepiot {

PropConstants prop_constants(const CellConfig& cfg, int device, int a) {
    if (a < 1) throw std::invalid_argument("prop_constants: a must be >= 1");
    const FitConstants& u = cfg.fit;
    PropConstants pc;
    pc.U0 = (cfg.n0 / cfg.alpha[device]) * std::pow(10.0, u.u5 / 10.0);
    pc.U1 = std::log(10.0) / 10.0;
    pc.U3 = (10.0 / std::log(10.0)) * (u.u0 + u.u2 * a);
    pc.U2 = std::pow(cfg.alpha[device] * cfg.p_ap_max / cfg.n0, pc.U3) * std::exp(u.u1 * a + u.u3);
    return pc;
}

double sample_uncapped_power(const CellConfig& cfg, int device, int a, Rng& rng) {
    const PropConstants pc = prop_constants(cfg, device, a);
    const double h2 = rng.exponential(cfg.sigma2_ul[device]);
    const double g2 = rng.exponential(cfg.sigma2_dl[device]);
    return pc.U0 / h2 * std::exp(pc.U1 / (pc.U2 * std::pow(g2, pc.U3) + cfg.fit.u4));
}

double s_pdf(double s, const PropConstants& pc, double sigma2_dl, double u4) {
    const double hi = std::exp(pc.U1 / u4);
    if (!(s > 1.0) || !(s < hi)) return 0.0;
    const double ls = std::log(s);
    const double t = pc.U1 - u4 * ls; // > 0 inside the support
    if (t <= 0.0) return 0.0;
    const double inv_u3 = 1.0 / pc.U3;
    const double pref = pc.U1 / (sigma2_dl * pc.U3 * std::pow(pc.U2, inv_u3));
    const double shape = std::pow(t, inv_u3 - 1.0) / (s * std::pow(ls, inv_u3 + 1.0));
    const double expo = -std::pow(t / (pc.U2 * ls), inv_u3) / sigma2_dl;
    return pref * shape * std::exp(expo);
}

namespace {

struct PowerIntegralSetup {
    PropConstants pc;
    double u4;
    double sigma2_ul;
    double sigma2_dl;
};

PowerIntegralSetup make_setup(const CellConfig& cfg, int device, int a) {
    return PowerIntegralSetup{prop_constants(cfg, device, a), cfg.fit.u4,
                              cfg.sigma2_ul[device], cfg.sigma2_dl[device]};
}

// Common integrand of the power CDF/PDF after the log substitution of the
// feedback factor, with an optional +r term (the PDF variant). Written in
// log space so deep tails underflow cleanly to zero.
double power_integrand_log(double r, double p, const PowerIntegralSetup& st, bool pdf_variant) {
    if (!(r > 0.0)) return 0.0;
    const double t = st.pc.U1 / r - st.u4;
    if (t <= 0.0) return 0.0; // at/above the upper support edge
    const double inv_u3 = 1.0 / st.pc.U3;
    double lg = -2.0 * std::log(r) + (inv_u3 - 1.0) * std::log(t);
    lg -= std::pow(t / st.pc.U2, inv_u3) / st.sigma2_dl;
    lg -= st.pc.U0 * std::exp(r) / (st.sigma2_ul * p);
    if (pdf_variant) lg += r;
    return (lg < -745.0) ? 0.0 : std::exp(lg);
}

double power_integral(double p, const PowerIntegralSetup& st, bool pdf_variant, const char* what) {
    const double hi = st.pc.U1 / st.u4;
    const auto f = [&](double r) { return power_integrand_log(r, p, st, pdf_variant); };
    const QuadratureResult q = integrate_adaptive(f, 0.0, hi, 1e-10, 1e-300, 4000);
    if (!q.converged) {
        std::ostringstream msg;
        msg << what << ": quadrature did not converge at p=" << p << " (value=" << q.value
            << ", error=" << q.error_estimate << ", intervals=" << q.intervals << ")";
        throw std::runtime_error(msg.str());
    }
    return q.value;
}

} // namespace

double power_pdf(double p, const CellConfig& cfg, int device, int a) {
    if (!(p > 0.0)) throw std::invalid_argument("power_pdf: p must be > 0");
    const PowerIntegralSetup st = make_setup(cfg, device, a);
    const double inv_u3 = 1.0 / st.pc.U3;
    const double pref = st.pc.U0 * st.pc.U1 /
                        (p * p * st.sigma2_ul * st.sigma2_dl * st.pc.U3 * std::pow(st.pc.U2, inv_u3));
    return pref * power_integral(p, st, true, "power_pdf");
}

double power_cdf(double p, const CellConfig& cfg, int device, int a) {
    if (!(p > 0.0)) return 0.0;
    const PowerIntegralSetup st = make_setup(cfg, device, a);
    const double inv_u3 = 1.0 / st.pc.U3;
    const double pref = st.pc.U1 / (st.sigma2_dl * st.pc.U3 * std::pow(st.pc.U2, inv_u3));
    return pref * power_integral(p, st, false, "power_cdf");
}

double expected_power(const CellConfig& cfg, int device, int a) {
    // E[min(P, p_max)] = integral of p * pdf below the cap, plus the capped tail.
    const auto f = [&](double p) { return p * power_pdf(p, cfg, device, a); };
    const QuadratureResult below = integrate_adaptive(f, 0.0, cfg.p_max, 1e-8, 1e-30, 2000);
    if (!below.converged) throw std::runtime_error("expected_power: outer quadrature did not converge");
    const double tail = 1.0 - power_cdf(cfg.p_max, cfg, device, a);
    return below.value + cfg.p_max * tail;
}

double expected_power_forward(const CellConfig& cfg, int device, const std::string& code) {
    // min(p_max, c/h2) with h2 ~ Exp(mean sigma2) has mean
    //   p_max (1 - e^{-z}) + (c/sigma2) E1(z),  z = c/(sigma2 p_max).
    const double c = db_to_linear(forward_required_snr_db(cfg, code)) * cfg.n0 / cfg.alpha[device];
    const double sigma2 = cfg.sigma2_ul[device];
    const double z = c / (sigma2 * cfg.p_max);
    const double e1 = -std::expint(-z);
    return cfg.p_max * (1.0 - std::exp(-z)) + (c / sigma2) * e1;
}

McEstimate mc_expected_power(const CellConfig& cfg, int device, int a, long n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("mc_expected_power: n must be >= 1");
    double sum = 0.0, sumsq = 0.0;
    for (long i = 0; i < n; ++i) {
        const ChannelDraw draw = sample_channels(cfg, device, rng);
        const double p = transmit_power(cfg, device, draw, a, cfg.forward_code);
        sum += p;
        sumsq += p * p;
    }
    McEstimate est;
    est.samples = n;
    est.mean = sum / n;
    est.std_error = (n > 1) ? std::sqrt(std::max(0.0, (sumsq - n * est.mean * est.mean) / (n - 1)) / n) : 0.0;
    return est;
}

} // namespace deepiot
