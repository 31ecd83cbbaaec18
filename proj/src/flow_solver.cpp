#include "coastflow/errors.hpp"
#include "coastflow/simulator.hpp"

#include "transport_cache.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace coastflow::sim {

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

ActiveTopology ActiveTopology::build(const GridSpec& grid) {
    ActiveTopology t;
    t.active_id.assign(static_cast<size_t>(grid.n_cells()), -1);

    // (iz, ix) with ix fastest keeps vertical neighbors within one x-row of
    // each other in the numbering, so the matrix band stays narrow.
    int next = 0;
    for (Index iz = 0; iz < grid.nz; ++iz)
        for (Index ix = 0; ix < grid.nx; ++ix)
            if (grid.is_active(ix, iz)) t.active_id[static_cast<size_t>(grid.flat(ix, iz))] = next++;
    t.n_active = next;

    t.cell_ix.resize(static_cast<size_t>(next));
    t.cell_iz.resize(static_cast<size_t>(next));
    t.cell_z.resize(next);
    t.cell_volume.resize(next);
    for (Index iz = 0; iz < grid.nz; ++iz)
        for (Index ix = 0; ix < grid.nx; ++ix) {
            const int id = t.active_id[static_cast<size_t>(grid.flat(ix, iz))];
            if (id < 0) continue;
            t.cell_ix[static_cast<size_t>(id)] = static_cast<int>(ix);
            t.cell_iz[static_cast<size_t>(id)] = static_cast<int>(iz);
            t.cell_z(id) = grid.z_center(iz);
            t.cell_volume(id) = grid.dx * grid.dz; // per meter of transect width
        }

    const double ax = grid.dz; // x-face area
    const double az = grid.dx; // z-face area
    for (Index iz = 0; iz < grid.nz; ++iz) {
        for (Index ix = 0; ix < grid.nx; ++ix) {
            const int id = t.active_id[static_cast<size_t>(grid.flat(ix, iz))];
            if (id < 0) continue;
            if (ix + 1 < grid.nx) {
                const int nb = t.active_id[static_cast<size_t>(grid.flat(ix + 1, iz))];
                if (nb >= 0) t.faces.push_back({id, nb, ax, grid.dx, 0.0});
            }
            if (iz + 1 < grid.nz) {
                const int nb = t.active_id[static_cast<size_t>(grid.flat(ix, iz + 1))];
                if (nb >= 0) t.faces.push_back({id, nb, az, grid.dz, grid.dz});
            }
        }
    }

    for (Index iz = 0; iz < grid.nz; ++iz) {
        // upland side: x = 0; stream side: x = lx
        const int left = t.active_id[static_cast<size_t>(grid.flat(0, iz))];
        if (left >= 0)
            t.bfaces.push_back({left, BoundaryKind::Upland, ax, grid.dx / 2.0, 0.0, grid.z_center(iz)});
        const int right = t.active_id[static_cast<size_t>(grid.flat(grid.nx - 1, iz))];
        if (right >= 0)
            t.bfaces.push_back(
                {right, BoundaryKind::Stream, ax, grid.dx / 2.0, 0.0, grid.z_center(iz)});
    }
    for (Index ix = 0; ix < grid.nx; ++ix) {
        int top = -1;
        for (Index iz = grid.nz - 1; iz >= 0; --iz) {
            const int id = t.active_id[static_cast<size_t>(grid.flat(ix, iz))];
            if (id >= 0) {
                top = id;
                break;
            }
        }
        if (top >= 0) {
            const double zc = t.cell_z(top);
            t.bfaces.push_back({top, BoundaryKind::Seepage, az, grid.dz / 2.0, grid.dz / 2.0,
                                zc + grid.dz / 2.0});
        }
    }

    t.bandwidth = 0;
    for (const auto& f : t.faces) t.bandwidth = std::max(t.bandwidth, std::abs(f.a - f.b));
    return t;
}

namespace {

// Storage slope floor: keeps the matrix nonsingular when whole regions are
// saturated (true slope zero) without perturbing the audit beyond ~1e-11.
constexpr double kStorageSlopeFloor = 1e-14; // 1/Pa

struct SweepCoefs {
    Vector sat_m;   // S(P^m)
    Vector slope;   // dS/dP at P^m (true value)
    Vector t_face;  // interior face conductance, m^3/(s Pa)
    Vector g_face;  // rho_bar * g * dz per interior face, Pa
    Vector t_bface; // 0 when closed
    Vector p_ghost;
    Vector g_bface;
    std::vector<std::uint8_t> seepage_open;
};

} // namespace

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

Simulator::Simulator(const GridSpec& grid, const GeoModel& model, const FluidProps& fluid,
                     const RetentionParams& retention, const TransportProps& transport,
                     const BoundaryForcing& forcing, const SolverOptions& opts)
    : grid_(grid), topo_(ActiveTopology::build(grid)), fluid_(fluid), ret_(retention),
      trans_(transport), forcing_(forcing), opts_(opts) {
    fluid_.validate();
    ret_.validate();
    trans_.validate();
    forcing_.validate();
    opts_.validate();
    if (model.logk.size() != grid.n_cells() || model.phi.size() != grid.n_cells())
        throw ConfigError("geomodel shape does not match the grid");
    if (!model.logk.allFinite()) throw ConfigError("geomodel log-permeability has non-finite values");

    perm_.resize(topo_.n_active);
    phi_.resize(topo_.n_active);
    pore_vol_.resize(topo_.n_active);
    for (Index c = 0; c < topo_.n_active; ++c) {
        const Index flat = grid.flat(topo_.cell_ix[static_cast<size_t>(c)],
                                     topo_.cell_iz[static_cast<size_t>(c)]);
        const double phi = model.phi(flat);
        if (!(phi > 0.0 && phi < 1.0)) throw ConfigError("porosity must lie in (0, 1)");
        perm_(c) = std::exp(model.logk(flat)) * kMilliDarcyToM2;
        phi_(c) = phi;
        pore_vol_(c) = topo_.cell_volume(c) * phi;
    }
}

FlowState Simulator::initial_state(double t0_days) const {
    const double h0 = forcing_.upland_head_at(t0_days);
    FlowState s;
    s.time = t0_days;
    s.pressure.resize(topo_.n_active);
    s.saturation.resize(topo_.n_active);
    s.conc = Vector::Zero(topo_.n_active);
    for (Index c = 0; c < topo_.n_active; ++c) {
        s.pressure(c) = kAtmosphericPressure + fluid_.rho_fresh * fluid_.g * (h0 - topo_.cell_z(c));
        s.saturation(c) = vg_saturation(std::max(0.0, kAtmosphericPressure - s.pressure(c)), ret_);
    }
    return s;
}

double Simulator::total_water_kmol(const FlowState& s) const {
    return fluid_.eta * (pore_vol_.array() * s.saturation.array()).sum();
}

double Simulator::total_salt_kg(const FlowState& s) const {
    return (pore_vol_.array() * s.conc.array()).sum();
}

namespace {

void compute_coefs(const ActiveTopology& topo, const Vector& perm, const FluidProps& fluid,
                   const RetentionParams& ret, const BoundaryForcing& forcing, double t_end,
                   const Vector& p_iter, const Vector& conc, SweepCoefs& co) {
    const Index n = topo.n_active;
    co.sat_m.resize(n);
    co.slope.resize(n);
    Vector kr(n), rho(n);
    for (Index c = 0; c < n; ++c) {
        const double pc = std::max(0.0, kAtmosphericPressure - p_iter(c));
        co.sat_m(c) = vg_saturation(pc, ret);
        co.slope(c) = vg_dsat_dp(pc, ret);
        kr(c) = vg_relperm(co.sat_m(c), ret);
        rho(c) = density_of(conc(c), fluid);
    }

    const Index nf = static_cast<Index>(topo.faces.size());
    co.t_face.resize(nf);
    co.g_face.resize(nf);
    for (Index f = 0; f < nf; ++f) {
        const Face& fc = topo.faces[static_cast<size_t>(f)];
        const double kh = 2.0 * perm(fc.a) * perm(fc.b) / (perm(fc.a) + perm(fc.b));
        const double rho_bar = 0.5 * (rho(fc.a) + rho(fc.b));
        const double grav = rho_bar * fluid.g * fc.dz;
        // potential difference (P_b - P_a) + grav decides the upwind side
        const double psi = (p_iter(fc.b) - p_iter(fc.a)) + grav;
        const double kru = psi < 0.0 ? kr(fc.a) : (psi > 0.0 ? kr(fc.b) : 0.5 * (kr(fc.a) + kr(fc.b)));
        co.t_face(f) = fc.area * kh * kru / (fluid.mu * fc.dist);
        co.g_face(f) = grav;
    }

    const double h_up = forcing.upland_head_at(t_end);
    const double stage = forcing.stream_stage_at(t_end);
    const double c_stream = forcing.stream_salinity_at(t_end);
    const double rho_stream = density_of(c_stream, fluid);

    const Index nb = static_cast<Index>(topo.bfaces.size());
    co.t_bface.resize(nb);
    co.p_ghost.resize(nb);
    co.g_bface.resize(nb);
    if (co.seepage_open.size() != static_cast<size_t>(nb)) co.seepage_open.assign(nb, 0);
    for (Index f = 0; f < nb; ++f) {
        const BoundaryFace& bf = topo.bfaces[static_cast<size_t>(f)];
        const int c = bf.cell;
        double t_val = 0.0, p_gh = 0.0, grav = 0.0;
        switch (bf.kind) {
        case BoundaryKind::Upland:
            if (topo.cell_z(c) <= h_up) {
                p_gh = kAtmosphericPressure + fluid.rho_fresh * fluid.g * (h_up - topo.cell_z(c));
                const double rho_bar = 0.5 * (fluid.rho_fresh + rho(c));
                grav = rho_bar * fluid.g * bf.dz;
                const double psi = (p_gh - p_iter(c)) + grav;
                const double kru = psi > 0.0 ? 1.0 : kr(c);
                t_val = bf.area * perm(c) * kru / (fluid.mu * bf.dist);
            }
            break;
        case BoundaryKind::Stream:
            if (topo.cell_z(c) <= stage) {
                p_gh = kAtmosphericPressure + rho_stream * fluid.g * (stage - topo.cell_z(c));
                const double rho_bar = 0.5 * (rho_stream + rho(c));
                grav = rho_bar * fluid.g * bf.dz;
                const double psi = (p_gh - p_iter(c)) + grav;
                const double kru = psi > 0.0 ? 1.0 : kr(c);
                t_val = bf.area * perm(c) * kru / (fluid.mu * bf.dist);
            }
            break;
        case BoundaryKind::Seepage:
            if (forcing.seepage_on_surface && co.seepage_open[static_cast<size_t>(f)]) {
                p_gh = kAtmosphericPressure;
                grav = rho(c) * fluid.g * bf.dz;
                t_val = bf.area * perm(c) * kr(c) / (fluid.mu * bf.dist);
            }
            break;
        }
        co.t_bface(f) = t_val;
        co.p_ghost(f) = p_gh;
        co.g_bface(f) = grav;
    }
}

} // namespace

FlowState Simulator::step_flow(const FlowState& state, double dt_days, FaceFluxes* fluxes,
                               WaterAudit* audit) const {
    if (!(dt_days > 0.0)) throw SolverError("step_flow: dt must be > 0");
    const double dt = dt_days * kSecondsPerDay;
    const double t_end = state.time + dt_days;
    const Index n = topo_.n_active;
    const Index nf = static_cast<Index>(topo_.faces.size());
    const Index nb = static_cast<Index>(topo_.bfaces.size());

    SweepCoefs co;
    co.seepage_open.assign(static_cast<size_t>(nb), 0);
    for (Index f = 0; f < nb; ++f)
        if (topo_.bfaces[static_cast<size_t>(f)].kind == BoundaryKind::Seepage)
            co.seepage_open[static_cast<size_t>(f)] =
                state.pressure(topo_.bfaces[static_cast<size_t>(f)].cell) >= kAtmosphericPressure;

    Vector p_iter = state.pressure;
    Vector p_new(n), sat_new(n);
    BandMatrix mat;
    bool converged = false;

    for (int sweep = 0; sweep < opts_.max_picard; ++sweep) {
        compute_coefs(topo_, perm_, fluid_, ret_, forcing_, t_end, p_iter, state.conc, co);

        mat.reset(static_cast<int>(n), topo_.bandwidth);
        Vector rhs(n);
        for (Index c = 0; c < n; ++c) {
            const double slope_eff = std::max(co.slope(c), kStorageSlopeFloor);
            const double stor = pore_vol_(c) * slope_eff / dt;
            mat.add_diag(static_cast<int>(c), stor);
            rhs(c) = stor * p_iter(c) - pore_vol_(c) * (co.sat_m(c) - state.saturation(c)) / dt;
        }
        for (Index f = 0; f < nf; ++f) {
            const Face& fc = topo_.faces[static_cast<size_t>(f)];
            const double t_val = co.t_face(f);
            if (t_val == 0.0) continue;
            mat.add_diag(fc.a, t_val);
            mat.add_diag(fc.b, t_val);
            mat.add(fc.a, fc.b, -t_val);
            const double gterm = t_val * co.g_face(f);
            rhs(fc.a) += gterm;
            rhs(fc.b) -= gterm;
        }
        for (Index f = 0; f < nb; ++f) {
            const double t_val = co.t_bface(f);
            if (t_val == 0.0) continue;
            const int c = topo_.bfaces[static_cast<size_t>(f)].cell;
            mat.add_diag(c, t_val);
            rhs(c) += t_val * (co.p_ghost(f) + co.g_bface(f));
        }

        if (!mat.factorize())
            throw SolverError("flow matrix factorization failed at t = " + std::to_string(t_end) +
                              " d (dt = " + std::to_string(dt_days) + " d)");
        p_new = rhs;
        mat.solve(p_new);

        const double delta = (p_new - p_iter).cwiseAbs().maxCoeff();

        // Conservative saturation update, re-anchored at this sweep's curve
        // point so it converges to S(P) as the iteration converges.
        bool sat_ok = true;
        for (Index c = 0; c < n; ++c) {
            sat_new(c) = co.sat_m(c) + co.slope(c) * (p_new(c) - p_iter(c));
            if (sat_new(c) < ret_.s_r - 1e-12 || sat_new(c) > 1.0 + 1e-12) sat_ok = false;
        }

        // Seepage faces shed water only; an inflow result closes the face.
        bool seepage_stable = true;
        for (Index f = 0; f < nb; ++f) {
            const BoundaryFace& bf = topo_.bfaces[static_cast<size_t>(f)];
            if (bf.kind != BoundaryKind::Seepage || !forcing_.seepage_on_surface) continue;
            std::uint8_t open = p_new(bf.cell) >= kAtmosphericPressure;
            if (open && co.t_bface(f) > 0.0) {
                const double out =
                    -co.t_bface(f) * ((co.p_ghost(f) - p_new(bf.cell)) + co.g_bface(f));
                if (out < 0.0) open = 0;
            }
            if (open != co.seepage_open[static_cast<size_t>(f)]) {
                co.seepage_open[static_cast<size_t>(f)] = open;
                seepage_stable = false;
            }
        }

        p_iter = p_new;
        if (delta <= opts_.picard_tol && sat_ok && seepage_stable && sweep >= 1) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw SolverError("Picard iteration did not converge at t = " + std::to_string(t_end) +
                          " d (dt = " + std::to_string(dt_days) + " d)");

    sat_new = sat_new.cwiseMax(ret_.s_r).cwiseMin(1.0); // shave roundoff overshoot

    FlowState next;
    next.time = t_end;
    next.pressure = p_new;
    next.saturation = sat_new;
    next.conc = state.conc;

    // Fluxes of the accepted step, from the same coefficients the final
    // solve used; these drive transport and the mass audit.
    FaceFluxes fl;
    fl.interior.resize(nf);
    for (Index f = 0; f < nf; ++f) {
        const Face& fc = topo_.faces[static_cast<size_t>(f)];
        fl.interior(f) = -co.t_face(f) * ((p_new(fc.b) - p_new(fc.a)) + co.g_face(f));
    }
    fl.boundary.resize(nb);
    fl.boundary_salinity.resize(nb);
    const double c_stream = forcing_.stream_salinity_at(t_end);
    for (Index f = 0; f < nb; ++f) {
        const BoundaryFace& bf = topo_.bfaces[static_cast<size_t>(f)];
        fl.boundary(f) = -co.t_bface(f) * ((co.p_ghost(f) - p_new(bf.cell)) + co.g_bface(f));
        fl.boundary_salinity(f) = bf.kind == BoundaryKind::Stream ? c_stream : 0.0;
    }

    if (audit) {
        const double storage = (pore_vol_.array() * (sat_new - state.saturation).array()).sum();
        const double net_in = -fl.boundary.sum() * dt;
        const double total = std::max((pore_vol_.array() * sat_new.array()).sum(), 1e-300);
        audit->storage_delta = storage * fluid_.eta;
        audit->boundary_net_in = net_in * fluid_.eta;
        audit->relative_error = std::abs(storage - net_in) / total;
    }
    if (fluxes) *fluxes = std::move(fl);
    return next;
}

FaceVelocities Simulator::darcy_fluxes(const FlowState& state) const {
    SweepCoefs co;
    const Index nb = static_cast<Index>(topo_.bfaces.size());
    co.seepage_open.assign(static_cast<size_t>(nb), 0);
    for (Index f = 0; f < nb; ++f)
        if (topo_.bfaces[static_cast<size_t>(f)].kind == BoundaryKind::Seepage)
            co.seepage_open[static_cast<size_t>(f)] =
                state.pressure(topo_.bfaces[static_cast<size_t>(f)].cell) >= kAtmosphericPressure;
    compute_coefs(topo_, perm_, fluid_, ret_, forcing_, state.time, state.pressure, state.conc, co);

    FaceVelocities v;
    const Index nf = static_cast<Index>(topo_.faces.size());
    v.interior.resize(nf);
    for (Index f = 0; f < nf; ++f) {
        const Face& fc = topo_.faces[static_cast<size_t>(f)];
        v.interior(f) = -co.t_face(f) *
                        ((state.pressure(fc.b) - state.pressure(fc.a)) + co.g_face(f)) / fc.area;
    }
    v.boundary.resize(nb);
    for (Index f = 0; f < nb; ++f) {
        const BoundaryFace& bf = topo_.bfaces[static_cast<size_t>(f)];
        v.boundary(f) = -co.t_bface(f) *
                        ((co.p_ghost(f) - state.pressure(bf.cell)) + co.g_bface(f)) / bf.area;
    }
    return v;
}

} // namespace coastflow::sim
