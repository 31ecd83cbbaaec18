#include "coastflow/geostat.hpp"

#include "coastflow/errors.hpp"
#include "coastflow/fft.hpp"
#include "coastflow/rng.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace coastflow {

void CovarianceSpec::validate() const {
    if (!(lx_corr > 0.0)) throw ConfigError("geostat.corr_len_x must be > 0");
    if (!(lz_corr > 0.0)) throw ConfigError("geostat.corr_len_z must be > 0");
    if (!(std_logk >= 0.0)) throw ConfigError("geostat.std_logk must be >= 0");
    if (!(std_phi >= 0.0)) throw ConfigError("geostat.std_phi must be >= 0");
}

Vector generate_field(const GridSpec& grid, const CovarianceSpec& cov, std::uint64_t seed) {
    cov.validate();
    const int mx = static_cast<int>(2 * grid.nx);
    const int mz = static_cast<int>(2 * grid.nz);
    const Index n_pad = static_cast<Index>(mx) * mz;

    // Circulant kernel on the padded torus; separable exponential.
    CVector spec(n_pad);
    for (int iz = 0; iz < mz; ++iz) {
        const int hz = std::min(iz, mz - iz);
        for (int ix = 0; ix < mx; ++ix) {
            const int hx = std::min(ix, mx - ix);
            spec(static_cast<Index>(iz) * mx + ix) =
                std::exp(-hx / cov.lx_corr - hz / cov.lz_corr);
        }
    }
    CVector lambda(n_pad);
    fft::c2c3(1, mz, mx, 1, spec.data(), lambda.data(), -1);

    // White noise, drawn row-major so the field is a pure function of the seed.
    Rng rng(seed);
    CVector noise(n_pad);
    for (Index i = 0; i < n_pad; ++i) noise(i) = Complex(rng.normal(), 0.0);

    CVector noise_hat(n_pad);
    fft::c2c3(1, mz, mx, 1, noise.data(), noise_hat.data(), -1);

    const double lam_max = lambda.real().maxCoeff();
    for (Index i = 0; i < n_pad; ++i) {
        double lam = lambda(i).real();
        if (lam < -1e-9 * lam_max)
            throw SolverError("circulant embedding produced a significantly negative eigenvalue");
        lam = std::max(lam, 0.0);
        noise_hat(i) *= std::sqrt(lam);
    }
    CVector field_pad(n_pad);
    fft::c2c3(1, mz, mx, 1, noise_hat.data(), field_pad.data(), +1);

    Vector field(grid.n_cells());
    const double inv_n = 1.0 / static_cast<double>(n_pad);
    for (Index iz = 0; iz < grid.nz; ++iz)
        for (Index ix = 0; ix < grid.nx; ++ix)
            field(grid.flat(ix, iz)) = field_pad(iz * mx + ix).real() * inv_n;
    return field;
}

GeoModel field_to_model(const Vector& field, const CovarianceSpec& cov) {
    if (!field.allFinite()) throw ConfigError("field_to_model: field has non-finite entries");
    GeoModel m;
    m.logk = cov.mean_logk + cov.std_logk * field.array();
    m.phi = (cov.mean_phi + cov.std_phi * field.array()).cwiseMax(0.01).cwiseMin(0.99);
    return m;
}

PcaBasis fit_pca(const Ensemble& ensemble, double energy_fraction) {
    const Index n_members = static_cast<Index>(ensemble.members.size());
    if (n_members < 2) throw ConfigError("fit_pca requires at least 2 ensemble members");
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
        throw ConfigError("energy_fraction must be in (0, 1]");
    const Index n_cells = ensemble.members.front().logk.size();
    for (const auto& m : ensemble.members)
        if (m.logk.size() != n_cells) throw ConfigError("fit_pca: members have mismatched shapes");

    Matrix data(n_cells, n_members);
    for (Index j = 0; j < n_members; ++j) data.col(j) = ensemble.members[static_cast<size_t>(j)].logk;

    PcaBasis b;
    b.mean = data.rowwise().mean();
    data.colwise() -= b.mean;

    Eigen::BDCSVD<Matrix> svd(data, Eigen::ComputeThinU);
    b.singular_values = svd.singularValues();

    const double total_energy = b.singular_values.squaredNorm();
    const double degenerate = 1e-12 * (1.0 + b.mean.norm());
    if (total_energy <= degenerate * degenerate) {
        b.n_l = 0;
        b.basis.resize(n_cells, 0);
        return b;
    }
    double cum = 0.0;
    Index k = 0;
    while (k < b.singular_values.size()) {
        cum += b.singular_values(k) * b.singular_values(k);
        ++k;
        if (cum >= energy_fraction * total_energy) break;
    }
    b.n_l = k;
    b.basis = svd.matrixU().leftCols(k);
    return b;
}

GeoModel pca_reconstruct(const PcaBasis& basis, const Vector& xi, const CovarianceSpec& cov) {
    if (xi.size() != basis.n_l)
        throw ConfigError("pca_reconstruct: latent vector has length " + std::to_string(xi.size()) +
                          ", basis expects " + std::to_string(basis.n_l));
    GeoModel m;
    m.logk = basis.mean;
    if (basis.n_l > 0) m.logk.noalias() += basis.basis * xi;
    Vector field;
    if (cov.std_logk > 0.0)
        field = (m.logk.array() - cov.mean_logk) / cov.std_logk;
    else
        field = Vector::Zero(m.logk.size());
    m.phi = (cov.mean_phi + cov.std_phi * field.array()).cwiseMax(0.01).cwiseMin(0.99);
    return m;
}

Vector pca_project(const PcaBasis& basis, const GeoModel& model) {
    if (model.logk.size() != basis.mean.size())
        throw ConfigError("pca_project: model shape does not match basis");
    return basis.basis.transpose() * (model.logk - basis.mean);
}

} // namespace coastflow
