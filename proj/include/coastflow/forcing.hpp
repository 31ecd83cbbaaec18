#pragma once

#include "coastflow/types.hpp"

#include <vector>

namespace coastflow {

/// Boundary forcing sampled on one shared, strictly increasing time axis
/// (days). The solver interpolates linearly and clamps outside the axis.
struct BoundaryForcing {
    Vector times;
    Vector upland_head;     // m
    Vector stream_stage;    // m
    Vector stream_salinity; // kg/m^3
    bool seepage_on_surface = true;
    bool no_flow_bottom = true;

    double upland_head_at(double t) const;
    double stream_stage_at(double t) const;
    double stream_salinity_at(double t) const;

    void validate() const;
};

/// One sinusoidal stage component: amplitude [m], period [days], phase [rad].
struct TideComponent {
    double amplitude = 0.0;
    double period = 1.0;
    double phase = 0.0;
};

/// Deterministic synthetic stream forcing:
///   stage(t) = mean_stage + sum_i a_i sin(2 pi t / T_i + phi_i)
/// with constant stream salinity and constant upland head, sampled at the
/// given times. Throws ConfigError on empty times, non-increasing times, or
/// a non-positive period.
BoundaryForcing synth_tidal_forcing(double mean_stage, const std::vector<TideComponent>& components,
                                    double salinity_level, double upland_head, const Vector& times);

} // namespace coastflow
