#include "coastflow/simulator.hpp"

#include <cmath>

namespace coastflow::sim {

double vg_saturation(double pc, const RetentionParams& r) {
    if (pc <= 0.0) return 1.0;
    const double u = r.alpha * pc;
    const double se = std::pow(1.0 + std::pow(u, r.n()), -r.m);
    return r.s_r + (1.0 - r.s_r) * se;
}

double vg_dsat_dp(double pc, const RetentionParams& r) {
    if (pc <= 0.0) return 0.0;
    const double n = r.n();
    const double u = r.alpha * pc;
    const double un = std::pow(u, n);
    // dS/dP = -dS/dpc = (1-s_r) * m * n * alpha * u^(n-1) * (1+u^n)^(-m-1)
    return (1.0 - r.s_r) * r.m * n * r.alpha * std::pow(u, n - 1.0) *
           std::pow(1.0 + un, -r.m - 1.0);
}

double vg_relperm(double s, const RetentionParams& r, bool* clamped) {
    if (clamped) *clamped = (s < r.s_r || s > 1.0);
    s = std::min(1.0, std::max(r.s_r, s));
    const double se = (s - r.s_r) / (1.0 - r.s_r);
    if (se <= 0.0) return 0.0;
    if (se >= 1.0) return 1.0;
    const double inner = 1.0 - std::pow(1.0 - std::pow(se, 1.0 / r.m), r.m);
    return std::sqrt(se) * inner * inner;
}

double density_of(double c, const FluidProps& fp) {
    return fp.rho_fresh + (fp.rho_sea - fp.rho_fresh) * (c / fp.c_sea);
}

} // namespace coastflow::sim
