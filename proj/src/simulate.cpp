#include "coastflow/errors.hpp"
#include "coastflow/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace coastflow::sim {

void Simulator::advance_to(FlowState& state, double t_target, bool with_transport, double& dt_next,
                           double& max_water_rel, double& max_salt_rel,
                           std::string* audit_log) const {
    while (t_target - state.time > 1e-9) {
        double dt = std::min({dt_next, opts_.max_dt, t_target - state.time});
        for (;;) {
            try {
                FaceFluxes fluxes;
                WaterAudit wa;
                FlowState next = step_flow(state, dt, &fluxes, &wa);
                SaltAudit sa;
                if (with_transport) {
                    next.conc = step_transport(next, fluxes, dt, &sa);
                    max_salt_rel = std::max(max_salt_rel, sa.relative_error);
                }
                max_water_rel = std::max(max_water_rel, wa.relative_error);
                if (audit_log) {
                    char line[160];
                    std::snprintf(line, sizeof(line), "t=%.6f dt=%.6f water_rel=%.3e salt_rel=%.3e\n",
                                  next.time, dt, wa.relative_error,
                                  with_transport ? sa.relative_error : 0.0);
                    audit_log->append(line);
                }
                state = std::move(next);
                break;
            } catch (const SolverError&) {
                dt *= 0.5;
                if (dt < opts_.min_dt) throw;
            }
        }
        dt_next = std::min(dt * opts_.dt_growth, opts_.max_dt);
    }
}

FlowState Simulator::spin_up(double t0_days, double duration_days) const {
    FlowState state = initial_state(t0_days);
    double dt_next = opts_.init_dt;
    double water_rel = 0.0, salt_rel = 0.0;
    try {
        advance_to(state, t0_days + duration_days, /*with_transport=*/false, dt_next, water_rel,
                   salt_rel, nullptr);
    } catch (const SolverError& e) {
        throw SolverError(std::string("spin-up failed: ") + e.what() +
                          " (reached t = " + std::to_string(state.time) + " d)");
    }
    return state;
}

SimOutput Simulator::simulate(const RunConfig& cfg, std::string* audit_log) const {
    cfg.validate();
    const Index n_out = cfg.n_outputs();

    FlowState state = spin_up(-cfg.spin_up_duration, cfg.spin_up_duration);
    state.time = 0.0; // guard against accumulated float drift at the origin

    SimOutput out;
    out.output_times.resize(n_out);
    out.pressure_series.resize(topo_.n_active, n_out);
    out.salinity_series.resize(topo_.n_active, n_out);
    out.pressure_series.col(0) = state.pressure;
    out.salinity_series.col(0) = state.conc;
    out.output_times(0) = 0.0;

    double dt_next = opts_.init_dt;
    try {
        for (Index k = 1; k < n_out; ++k) {
            const double t_k = static_cast<double>(k) * cfg.output_interval;
            advance_to(state, t_k, /*with_transport=*/true, dt_next, out.max_water_residual,
                       out.max_salt_residual, audit_log);
            out.output_times(k) = t_k;
            out.pressure_series.col(k) = state.pressure;
            out.salinity_series.col(k) = state.conc;
        }
        advance_to(state, cfg.prediction_duration, /*with_transport=*/true, dt_next,
                   out.max_water_residual, out.max_salt_residual, audit_log);
    } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + " (reached t = " + std::to_string(state.time) +
                          " d)");
    }
    return out;
}

} // namespace coastflow::sim
