#pragma once

#include "coastflow/domain.hpp"
#include "coastflow/types.hpp"

#include <cstdint>
#include <vector>

namespace coastflow {

/// Heterogeneous geomodel: per-cell natural-log permeability (millidarcy)
/// and porosity, flat = iz*nx + ix over the full grid (inactive cells carry
/// values too; only active cells enter the physics).
struct GeoModel {
    Vector logk;
    Vector phi;
};

/// Separable exponential covariance: corr(h) = exp(-|hx|/lx_corr - |hz|/lz_corr),
/// lags measured in cells, so the lag-lx_corr correlation along x is e^-1.
struct CovarianceSpec {
    double lx_corr = 5.0; // cells
    double lz_corr = 5.0; // cells
    double mean_logk = 4.5;
    double std_logk = 1.0;
    double mean_phi = 0.5;
    double std_phi = 0.05;

    void validate() const;
};

/// Column-orthonormal PCA basis of centered log-permeability fields.
struct PcaBasis {
    Vector mean;            // n_cells
    Matrix basis;           // n_cells x n_l, Phi^T Phi = I
    Vector singular_values; // all singular values of the centered matrix, non-increasing
    Index n_l = 0;
};

struct Ensemble {
    std::vector<GeoModel> members;
    std::vector<std::uint64_t> member_seeds;
};

/// One standard-normal field with the requested spatial correlation,
/// deterministic in the seed. Circulant-embedding spectral synthesis on a
/// 2x-padded grid: exact Gaussian law up to the (negligible) wrap-around
/// kernel tail exp(-nx/lx_corr).
Vector generate_field(const GridSpec& grid, const CovarianceSpec& cov, std::uint64_t seed);

/// Affine map from a standard field to physical properties:
/// logk = mean_logk + std_logk*field, phi = clamp(mean_phi + std_phi*field, 0.01, 0.99).
GeoModel field_to_model(const Vector& field, const CovarianceSpec& cov);

/// Centered SVD of the member log-permeability matrix. n_l is the smallest k
/// whose cumulative squared singular values reach energy_fraction. An
/// ensemble with no variance yields n_l = 0 with the mean preserved.
PcaBasis fit_pca(const Ensemble& ensemble, double energy_fraction);

/// logk = Phi*xi + mean; porosity follows by inverting field_to_model's
/// affine map for logk and reapplying it for phi.
GeoModel pca_reconstruct(const PcaBasis& basis, const Vector& xi, const CovarianceSpec& cov);

/// xi = Phi^T (logk - mean).
Vector pca_project(const PcaBasis& basis, const GeoModel& model);

} // namespace coastflow
