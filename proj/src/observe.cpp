#include "coastflow/errors.hpp"
#include "coastflow/simulator.hpp"

#include <cmath>
#include <string>

namespace coastflow::sim {

Vector salinity_accumulation(const SimOutput& out, const GeoModel& model, const GridSpec& grid,
                             const RetentionParams& r) {
    const ActiveTopology topo = ActiveTopology::build(grid);
    if (out.pressure_series.rows() != topo.n_active)
        throw ConfigError("salinity_accumulation: output shape does not match the grid");
    const Index n_out = out.output_times.size();
    Vector acc = Vector::Zero(n_out);
    for (Index c = 0; c < topo.n_active; ++c) {
        const Index flat = grid.flat(topo.cell_ix[static_cast<size_t>(c)],
                                     topo.cell_iz[static_cast<size_t>(c)]);
        const double vol_phi = topo.cell_volume(c) * model.phi(flat);
        for (Index k = 0; k < n_out; ++k) {
            const double pc = std::max(0.0, kAtmosphericPressure - out.pressure_series(c, k));
            acc(k) += out.salinity_series(c, k) * vol_phi * vg_saturation(pc, r);
        }
    }
    return acc;
}

std::vector<int> locate_wells(const WellSet& wells, const GridSpec& grid,
                              const ActiveTopology& topo) {
    if (wells.x.size() != wells.z.size())
        throw ConfigError("well x/z coordinate lists differ in length");
    std::vector<int> ids;
    ids.reserve(wells.x.size());
    for (size_t w = 0; w < wells.x.size(); ++w) {
        const double x = wells.x[w], z = wells.z[w];
        if (x < 0.0 || x > grid.lx || z < 0.0 || z > grid.lz)
            throw ConfigError("well " + std::to_string(w) + " at (" + std::to_string(x) + ", " +
                              std::to_string(z) + ") lies outside the domain");
        Index ix = std::min(grid.nx - 1, static_cast<Index>(x / grid.dx));
        Index iz = std::min(grid.nz - 1, static_cast<Index>(z / grid.dz));
        const int id = topo.active_id[static_cast<size_t>(grid.flat(ix, iz))];
        if (id < 0)
            throw ConfigError("well " + std::to_string(w) + " at (" + std::to_string(x) + ", " +
                              std::to_string(z) + ") maps to an inactive cell");
        ids.push_back(id);
    }
    return ids;
}

Vector extract_observations(const SimOutput& out, const WellSet& wells, const GridSpec& grid,
                            const ActiveTopology& topo, const std::vector<Index>& obs_time_indices,
                            const FluidProps& fp) {
    const std::vector<int> cells = locate_wells(wells, grid, topo);
    const Index n_loc = static_cast<Index>(cells.size());
    const Index n_t = static_cast<Index>(obs_time_indices.size());
    Vector obs(n_t * n_loc * 2);
    for (Index ti = 0; ti < n_t; ++ti) {
        const Index col = obs_time_indices[static_cast<size_t>(ti)];
        if (col < 0 || col >= out.output_times.size())
            throw ConfigError("observation time index " + std::to_string(col) +
                              " outside the output series");
        for (Index w = 0; w < n_loc; ++w) {
            const int cell = cells[static_cast<size_t>(w)];
            const double p = out.pressure_series(cell, col);
            const double head =
                topo.cell_z(cell) + (p - kAtmosphericPressure) / (fp.rho_fresh * fp.g);
            const Index base = (ti * n_loc + w) * 2;
            obs(base) = head;
            obs(base + 1) = out.salinity_series(cell, col);
        }
    }
    return obs;
}

} // namespace coastflow::sim
