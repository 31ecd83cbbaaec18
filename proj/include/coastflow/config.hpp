#pragma once

#include "coastflow/domain.hpp"
#include "coastflow/esmda.hpp"
#include "coastflow/forcing.hpp"
#include "coastflow/geostat.hpp"
#include "coastflow/simulator.hpp"
#include "coastflow/ufno.hpp"

#include <string>
#include <vector>

namespace coastflow {

/// Synthetic stream forcing parameters (the sampled series is built by
/// FullConfig::make_forcing).
struct ForcingParams {
    double upland_head = 3.5;  // m
    double mean_stage = 0.7;   // m
    std::vector<TideComponent> tide;
    double salinity_level = 25.0; // kg/m^3
    double sample_step = 0.0;     // days; 0 = min tide period / 32
};

struct WellConfig {
    std::vector<double> x; // m, one per monitoring location
    std::vector<double> z; // m
    Index obs_months = 60; // monthly observation count, starting at the first output
    double sigma_head = 0.005;    // m
    double sigma_salinity = 0.2;  // kg/m^3
};

/// Whole-pipeline configuration parsed from the key-value file (see
/// README for the schema). parse_config validates every invariant and
/// names the offending key on failure.
struct FullConfig {
    GridGeometry grid;
    FluidProps fluid;
    RetentionParams retention;
    TransportProps transport;
    ForcingParams forcing;
    RunConfig run;
    CovarianceSpec cov;
    double energy_fraction = 0.95;
    Index n_realizations = 220;
    Index n_train = 200;
    Index truth_member = 219;
    WellConfig wells;
    ufno::UfnoConfig ufno;
    ufno::TrainConfig train;
    esmda::EsmdaConfig esmda;
    Index n_clusters = 5;
    std::string out_dir = "out";

    void validate() const;
    GridSpec make_grid() const { return build_grid(grid); }
    BoundaryForcing make_forcing() const;
    ufno::FieldDims field_dims() const { return {grid.nz, grid.nx, run.n_outputs()}; }
    sim::WellSet well_set() const;
    /// Output-column indices observed: 1..obs_months (monthly from the
    /// first post-initial output).
    std::vector<Index> obs_time_indices() const;
};

FullConfig parse_config(const std::string& path);
FullConfig parse_config_text(const std::string& text, const std::string& origin);

/// Canonical serialization; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const FullConfig& cfg);

} // namespace coastflow
