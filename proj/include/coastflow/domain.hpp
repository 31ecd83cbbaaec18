#pragma once

#include "coastflow/types.hpp"

#include <cstdint>
#include <vector>

namespace coastflow {

/// Geometry block consumed by build_grid. The land surface is a per-column
/// piecewise-linear ramp from the upland elevation (x = 0) to the stream
/// elevation (x = lx); an explicit per-column surface can override the ramp.
struct GridGeometry {
    Index nx = 0;
    Index nz = 0;
    double lx = 0.0; // m
    double lz = 0.0; // m
    double upland_elevation = 0.0; // m
    double stream_elevation = 0.0; // m
    Vector surface_override; // size nx when non-empty
};

/// Structured 2D x-z grid with an active-cell mask.
///
/// Cell (ix, iz) has its center at ((ix+0.5)*dx, (iz+0.5)*dz) with z measured
/// upward from the domain bottom. Flat per-cell storage is row-major in z:
/// flat = iz*nx + ix. A cell is active iff its center lies at or below its
/// column's surface elevation.
struct GridSpec {
    Index nx = 0;
    Index nz = 0;
    double lx = 0.0, lz = 0.0;
    double dx = 0.0, dz = 0.0;
    Vector surface_elevation;          // per column, size nx
    std::vector<std::uint8_t> active;  // size nx*nz, flat = iz*nx + ix
    Index n_active = 0;

    Index n_cells() const { return nx * nz; }
    Index flat(Index ix, Index iz) const { return iz * nx + ix; }
    double x_center(Index ix) const { return (static_cast<double>(ix) + 0.5) * dx; }
    double z_center(Index iz) const { return (static_cast<double>(iz) + 0.5) * dz; }
    bool is_active(Index ix, Index iz) const { return active[static_cast<size_t>(flat(ix, iz))] != 0; }
};

/// Deterministic, pure grid construction. Throws ConfigError on non-positive
/// dimensions or a surface override of the wrong length.
GridSpec build_grid(const GridGeometry& geom);

/// Fluid and transport constants shared across the solver stack.
struct FluidProps {
    double mu = 1.0e-3;        // viscosity, Pa s
    double rho_fresh = 1000.0; // kg/m^3
    double rho_sea = 1025.0;   // kg/m^3
    double g = 9.81;           // m/s^2
    double eta = 55.345;       // water molar density, kmol/m^3
    double c_sea = 25.0;       // seawater salinity, kg/m^3

    void validate() const;
};

/// van Genuchten retention parameters; n is derived as 1/(1-m).
struct RetentionParams {
    double s_r = 0.15;    // residual saturation
    double alpha = 2.0e-4; // 1/Pa
    double m = 0.2908;

    double n() const { return 1.0 / (1.0 - m); }
    void validate() const;
};

struct TransportProps {
    double diff = 1.0e-9; // molecular diffusion, m^2/s

    void validate() const;
};

/// Time-stepping and nonlinear-iteration controls for the flow solver.
struct SolverOptions {
    double max_dt = 0.25;     // days; resolves the semidiurnal tide with >= 2 steps
    double init_dt = 0.01;    // days
    double min_dt = 1.0e-5;   // days; below this a non-converged step is fatal
    double dt_growth = 1.3;   // growth factor after an accepted step
    double picard_tol = 0.5;  // Pa, max pressure change per sweep
    int max_picard = 30;
    double linear_tol = 1.0e-9; // residual sanity bound on the linear solves

    void validate() const;
};

/// Durations are in days; they are converted to seconds only inside the
/// solver. Outputs are sampled at t = k*output_interval for
/// k = 0..n_outputs-1, where t = 0 is the end of spin-up.
struct RunConfig {
    double spin_up_duration = 1460.0;    // days
    double prediction_duration = 7260.0; // days
    double output_interval = 30.0;       // days
    std::uint64_t master_seed = 20260801;
    SolverOptions solver;

    Index n_outputs() const {
        return static_cast<Index>(prediction_duration / output_interval) + 1;
    }
    void validate() const;
};

} // namespace coastflow
