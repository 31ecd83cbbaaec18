#include "coastflow/domain.hpp"

#include "coastflow/errors.hpp"

#include <string>

namespace coastflow {

GridSpec build_grid(const GridGeometry& geom) {
    if (geom.nx < 1) throw ConfigError("nx must be >= 1 (got " + std::to_string(geom.nx) + ")");
    if (geom.nz < 1) throw ConfigError("nz must be >= 1 (got " + std::to_string(geom.nz) + ")");
    if (!(geom.lx > 0.0)) throw ConfigError("lx must be > 0");
    if (!(geom.lz > 0.0)) throw ConfigError("lz must be > 0");

    GridSpec g;
    g.nx = geom.nx;
    g.nz = geom.nz;
    g.lx = geom.lx;
    g.lz = geom.lz;
    g.dx = geom.lx / static_cast<double>(geom.nx);
    g.dz = geom.lz / static_cast<double>(geom.nz);

    if (geom.surface_override.size() > 0) {
        if (geom.surface_override.size() != geom.nx)
            throw ConfigError("surface override must have nx entries");
        g.surface_elevation = geom.surface_override;
    } else {
        g.surface_elevation.resize(g.nx);
        for (Index ix = 0; ix < g.nx; ++ix) {
            const double f = g.x_center(ix) / g.lx;
            g.surface_elevation(ix) =
                geom.upland_elevation + f * (geom.stream_elevation - geom.upland_elevation);
        }
    }

    g.active.assign(static_cast<size_t>(g.n_cells()), 0);
    g.n_active = 0;
    for (Index iz = 0; iz < g.nz; ++iz) {
        for (Index ix = 0; ix < g.nx; ++ix) {
            if (g.z_center(iz) <= g.surface_elevation(ix)) {
                g.active[static_cast<size_t>(g.flat(ix, iz))] = 1;
                ++g.n_active;
            }
        }
    }
    if (g.n_active == 0) throw ConfigError("surface elevation leaves no active cells");
    return g;
}

void FluidProps::validate() const {
    if (!(mu > 0.0)) throw ConfigError("fluid.viscosity must be > 0");
    if (!(rho_fresh > 0.0)) throw ConfigError("fluid.rho_fresh must be > 0");
    if (!(rho_sea > rho_fresh)) throw ConfigError("fluid.rho_sea must exceed fluid.rho_fresh");
    if (!(g > 0.0)) throw ConfigError("fluid.gravity must be > 0");
    if (!(eta > 0.0)) throw ConfigError("fluid.molar_density must be > 0");
    if (!(c_sea > 0.0)) throw ConfigError("fluid.sea_salinity must be > 0");
}

void RetentionParams::validate() const {
    if (!(s_r >= 0.0 && s_r < 1.0)) throw ConfigError("retention.residual_saturation must be in [0, 1)");
    if (!(alpha > 0.0)) throw ConfigError("retention.alpha must be > 0");
    if (!(m > 0.0 && m < 1.0)) throw ConfigError("retention.m must be in (0, 1)");
}

void TransportProps::validate() const {
    if (!(diff >= 0.0)) throw ConfigError("transport.diffusion must be >= 0");
}

void SolverOptions::validate() const {
    if (!(max_dt > 0.0)) throw ConfigError("solver.max_dt must be > 0");
    if (!(init_dt > 0.0)) throw ConfigError("solver.init_dt must be > 0");
    if (!(min_dt > 0.0)) throw ConfigError("solver.min_dt must be > 0");
    if (!(dt_growth >= 1.0)) throw ConfigError("solver.dt_growth must be >= 1");
    if (!(picard_tol > 0.0)) throw ConfigError("solver.picard_tol must be > 0");
    if (max_picard < 1) throw ConfigError("solver.max_picard_iters must be >= 1");
    if (!(linear_tol > 0.0)) throw ConfigError("solver.linear_tol must be > 0");
}

void RunConfig::validate() const {
    if (!(spin_up_duration >= 0.0)) throw ConfigError("run.spin_up_duration must be >= 0");
    if (!(prediction_duration > 0.0)) throw ConfigError("run.prediction_duration must be > 0");
    if (!(output_interval > 0.0)) throw ConfigError("run.output_interval must be > 0");
    solver.validate();
}

} // namespace coastflow
