#pragma once

#include "coastflow/domain.hpp"
#include "coastflow/forcing.hpp"
#include "coastflow/geostat.hpp"
#include "coastflow/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace coastflow::sim {

inline constexpr double kAtmosphericPressure = 101325.0; // Pa, reference for capillary pressure
inline constexpr double kMilliDarcyToM2 = 9.869233e-16;
inline constexpr double kSecondsPerDay = 86400.0;

// ---------------------------------------------------------------------------
// Constitutive closures
// ---------------------------------------------------------------------------

/// van Genuchten retention: Se = (1 + (alpha*pc)^n)^(-m), S = s_r + (1-s_r)*Se.
/// pc >= 0 is the capillary pressure max(0, P_ref - P).
double vg_saturation(double pc, const RetentionParams& r);

/// dS/dP at capillary pressure pc (non-negative; zero when saturated).
double vg_dsat_dp(double pc, const RetentionParams& r);

/// Mualem relative permeability kr(S) = sqrt(Se) * (1 - (1 - Se^(1/m))^m)^2.
/// S outside [s_r, 1] is clamped; *clamped is set when provided.
double vg_relperm(double s, const RetentionParams& r, bool* clamped = nullptr);

/// Linear mixing density rho(c) = rho_fresh + (rho_sea - rho_fresh) * c / c_sea.
double density_of(double c, const FluidProps& fp);

// ---------------------------------------------------------------------------
// Active-cell topology
// ---------------------------------------------------------------------------

enum class BoundaryKind { Upland, Stream, Seepage };

/// Interior face between active cells a and b; fluxes are positive a -> b.
struct Face {
    int a = -1, b = -1;
    double area = 0.0; // m^2 per meter of transect width
    double dist = 0.0; // center-to-center distance, m
    double dz = 0.0;   // z_b - z_a, m
};

/// Boundary face of an active cell; fluxes are positive out of the domain.
struct BoundaryFace {
    int cell = -1;
    BoundaryKind kind = BoundaryKind::Upland;
    double area = 0.0;
    double dist = 0.0;   // cell center to face, m
    double dz = 0.0;     // z_face - z_center, m
    double z_face = 0.0; // m
};

/// Face lists and index maps over active cells. Active ids are ordered
/// (iz, ix) with ix fastest, which keeps the flow matrix bandwidth at or
/// below nx for ramp-shaped surfaces.
struct ActiveTopology {
    Index n_active = 0;
    std::vector<int> active_id; // n_cells -> active id or -1
    std::vector<int> cell_ix, cell_iz;
    Vector cell_z;      // center elevations
    Vector cell_volume; // dx*dz*1, m^3
    std::vector<Face> faces;
    std::vector<BoundaryFace> bfaces;
    int bandwidth = 0; // max |id(a) - id(b)| over interior faces

    static ActiveTopology build(const GridSpec& grid);
};

// ---------------------------------------------------------------------------
// States, fluxes, outputs
// ---------------------------------------------------------------------------

/// Per-active-cell state. Saturation is the mass-conservative value carried
/// by the flow step (within Picard tolerance of the van Genuchten curve).
struct FlowState {
    Vector pressure;   // Pa
    Vector saturation; // [s_r, 1]
    Vector conc;       // kg/m^3
    double time = 0.0; // days
};

/// Face fluxes of one accepted flow step (volumetric, m^3/s).
/// interior(f) is positive from face f's cell a to cell b; boundary(f) is
/// positive out of the domain. boundary_salinity(f) is the salinity carried
/// by inflow through that face (stream salinity or 0 for upland/seepage).
struct FaceFluxes {
    Vector interior;
    Vector boundary;
    Vector boundary_salinity;
};

/// Darcy velocities (m/s), one entry per face of the topology; sign
/// conventions match FaceFluxes (velocity = flux / face area).
struct FaceVelocities {
    Vector interior;
    Vector boundary;
};

struct WaterAudit {
    double storage_delta = 0.0;    // kmol
    double boundary_net_in = 0.0;  // kmol
    double relative_error = 0.0;   // |delta - net_in| / total
};

struct SaltAudit {
    double storage_delta = 0.0;   // kg
    double boundary_net_in = 0.0; // kg
    double relative_error = 0.0;
};

struct SimOutput {
    Matrix pressure_series; // n_active x n_outputs, Pa
    Matrix salinity_series; // n_active x n_outputs, kg/m^3
    Vector output_times;    // days
    double max_water_residual = 0.0; // worst per-step relative audit
    double max_salt_residual = 0.0;
};

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

/// Finite-volume solver for variably saturated, density-coupled flow and
/// salt transport on one geomodel. One instance owns its state exclusively;
/// independent instances may run concurrently.
class Simulator {
public:
    Simulator(const GridSpec& grid, const GeoModel& model, const FluidProps& fluid,
              const RetentionParams& retention, const TransportProps& transport,
              const BoundaryForcing& forcing, const SolverOptions& opts);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    /// Hydrostatic freshwater state at the upland head evaluated at time t0.
    FlowState initial_state(double t0_days) const;

    /// One implicit Picard-iterated pressure/saturation update over dt with
    /// boundary data at state.time + dt. Does not subdivide dt; throws
    /// SolverError on non-convergence.
    FlowState step_flow(const FlowState& state, double dt_days, FaceFluxes* fluxes = nullptr,
                        WaterAudit* audit = nullptr) const;

    /// Explicit upwind advection (CFL-substepped) + implicit diffusion using
    /// the fluxes of the accepted flow step. Returns the new concentration.
    Vector step_transport(const FlowState& post_flow, const FaceFluxes& fluxes, double dt_days,
                          SaltAudit* audit = nullptr) const;

    /// Flow-only run over [t0, t0 + duration); returns the final state.
    FlowState spin_up(double t0_days, double duration_days) const;

    /// spin_up then coupled flow + transport for cfg.prediction_duration,
    /// sampling every cfg.output_interval (first column is t = 0).
    /// audit_log, when non-null, receives one line per accepted step.
    SimOutput simulate(const RunConfig& cfg, std::string* audit_log = nullptr) const;

    /// Darcy face velocities (m/s) for a given state, with boundary data
    /// evaluated at state.time. Antisymmetric by storage: each face appears
    /// once with a signed value.
    FaceVelocities darcy_fluxes(const FlowState& state) const;

    const ActiveTopology& topology() const { return topo_; }
    const GridSpec& grid() const { return grid_; }
    double total_water_kmol(const FlowState& s) const;
    double total_salt_kg(const FlowState& s) const;

private:
    struct TransportCache; // factorized diffusion system, keyed by dt

    void advance_to(FlowState& state, double t_target, bool with_transport, double& dt_next,
                    double& max_water_rel, double& max_salt_rel, std::string* audit_log) const;

    GridSpec grid_;
    ActiveTopology topo_;
    FluidProps fluid_;
    RetentionParams ret_;
    TransportProps trans_;
    BoundaryForcing forcing_;
    SolverOptions opts_;
    Vector perm_;     // intrinsic permeability per active cell, m^2
    Vector phi_;      // porosity per active cell
    Vector pore_vol_; // V*phi per active cell
    mutable std::unique_ptr<TransportCache> tcache_; // one simulation per instance; not thread-safe
};

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

/// Total dissolved salt mass per output time (kg per meter of transect
/// width): A(t) = sum_active c*phi*S*V, with S recovered from the output
/// pressure through the van Genuchten closure.
Vector salinity_accumulation(const SimOutput& out, const GeoModel& model, const GridSpec& grid,
                             const RetentionParams& r);

/// Monitoring locations; each (x, z) pair must map to an active cell.
struct WellSet {
    std::vector<double> x; // m
    std::vector<double> z; // m
    Index n_locations() const { return static_cast<Index>(x.size()); }
};

/// Maps well coordinates to active cell ids; throws ConfigError for wells in
/// inactive cells or outside the domain.
std::vector<int> locate_wells(const WellSet& wells, const GridSpec& grid,
                              const ActiveTopology& topo);

/// Ordered observation vector: time-major, then location, then quantity
/// (head first, then salinity):
///   index = (t_idx * n_locations + loc) * 2 + q.
/// Head is freshwater hydraulic head z + (P - P_atm)/(rho_fresh*g) at the
/// monitoring cell. obs_time_indices select columns of out.
Vector extract_observations(const SimOutput& out, const WellSet& wells, const GridSpec& grid,
                            const ActiveTopology& topo, const std::vector<Index>& obs_time_indices,
                            const FluidProps& fp);

} // namespace coastflow::sim
