#include "coastflow/errors.hpp"
#include "coastflow/simulator.hpp"

#include "transport_cache.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace coastflow::sim {

Simulator::~Simulator() = default;

Vector Simulator::step_transport(const FlowState& post_flow, const FaceFluxes& fluxes,
                                 double dt_days, SaltAudit* audit) const {
    const double dt = dt_days * kSecondsPerDay;
    const Index n = topo_.n_active;
    const Index nf = static_cast<Index>(topo_.faces.size());
    const Index nb = static_cast<Index>(topo_.bfaces.size());
    const Vector& sat = post_flow.saturation;

    // CFL bound for the explicit upwind pass: the donor cell must not be
    // drained of more than 90% of its mobile water per substep.
    Vector outflow = Vector::Zero(n);
    for (Index f = 0; f < nf; ++f) {
        const Face& fc = topo_.faces[static_cast<size_t>(f)];
        const double q = fluxes.interior(f);
        if (q > 0.0)
            outflow(fc.a) += q;
        else
            outflow(fc.b) -= q;
    }
    for (Index f = 0; f < nb; ++f) {
        const double q = fluxes.boundary(f);
        if (q > 0.0) outflow(topo_.bfaces[static_cast<size_t>(f)].cell) += q;
    }
    double dt_cfl = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < n; ++c)
        if (outflow(c) > 0.0) dt_cfl = std::min(dt_cfl, 0.9 * pore_vol_(c) * sat(c) / outflow(c));
    const int nsub = std::isfinite(dt_cfl) ? std::max(1, static_cast<int>(std::ceil(dt / dt_cfl))) : 1;
    const double dts = dt / nsub;

    Vector c = post_flow.conc;
    double boundary_in = 0.0; // kg entering the domain
    Vector rate(n);
    for (int s = 0; s < nsub; ++s) {
        rate.setZero();
        for (Index f = 0; f < nf; ++f) {
            const Face& fc = topo_.faces[static_cast<size_t>(f)];
            const double q = fluxes.interior(f);
            const int up = q >= 0.0 ? fc.a : fc.b;
            const double u = c(up) / sat(up); // advected quantity is c/S
            rate(fc.a) -= q * u;
            rate(fc.b) += q * u;
        }
        for (Index f = 0; f < nb; ++f) {
            const int cell = topo_.bfaces[static_cast<size_t>(f)].cell;
            const double q = fluxes.boundary(f);
            const double u = q >= 0.0 ? c(cell) / sat(cell) : fluxes.boundary_salinity(f);
            rate(cell) -= q * u;
            boundary_in -= q * u * dts;
        }
        c.array() += dts * rate.array() / pore_vol_.array();
    }

    if (trans_.diff > 0.0) {
        if (!tcache_) tcache_ = std::make_unique<TransportCache>();
        if (tcache_->dt_seconds != dt) {
            tcache_->mat.reset(static_cast<int>(n), topo_.bandwidth);
            for (Index cidx = 0; cidx < n; ++cidx)
                tcache_->mat.add_diag(static_cast<int>(cidx), pore_vol_(cidx) / dt);
            for (Index f = 0; f < nf; ++f) {
                const Face& fc = topo_.faces[static_cast<size_t>(f)];
                const double da = phi_(fc.a) * trans_.diff;
                const double db = phi_(fc.b) * trans_.diff;
                const double dcoef = fc.area * (2.0 * da * db / (da + db)) / fc.dist;
                tcache_->mat.add_diag(fc.a, dcoef);
                tcache_->mat.add_diag(fc.b, dcoef);
                tcache_->mat.add(fc.a, fc.b, -dcoef);
            }
            if (!tcache_->mat.factorize())
                throw SolverError("diffusion matrix factorization failed (dt = " +
                                  std::to_string(dt_days) + " d)");
            tcache_->dt_seconds = dt;
        }
        Vector rhs = (pore_vol_.array() / dt * c.array()).matrix();
        tcache_->mat.solve(rhs);
        c = rhs;
    }

    const double min_c = c.minCoeff();
    if (min_c < -1e-12)
        throw SolverError("transport produced negative concentration " + std::to_string(min_c) +
                          " at t = " + std::to_string(post_flow.time) + " d");
    c = c.cwiseMax(0.0);
    const double cap = fluid_.c_sea * (1.0 + 1e-6);
    if (c.maxCoeff() > cap)
        throw SolverError("concentration exceeded seawater salinity at t = " +
                          std::to_string(post_flow.time) + " d");

    if (audit) {
        const double total_new = (pore_vol_.array() * c.array()).sum();
        const double total_old = (pore_vol_.array() * post_flow.conc.array()).sum();
        audit->storage_delta = total_new - total_old;
        audit->boundary_net_in = boundary_in;
        audit->relative_error =
            std::abs(audit->storage_delta - boundary_in) / std::max(total_new, 1e-9);
    }
    return c;
}

} // namespace coastflow::sim
