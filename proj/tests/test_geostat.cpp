#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coastflow/errors.hpp"
#include "coastflow/geostat.hpp"
#include "coastflow/rng.hpp"

#include <cmath>

using namespace coastflow;

namespace {

GridSpec test_grid(Index nx = 28, Index nz = 40) {
    GridGeometry g;
    g.nx = nx;
    g.nz = nz;
    g.lx = 3.0 * static_cast<double>(nx);
    g.lz = 0.1 * static_cast<double>(nz);
    g.upland_elevation = g.lz;
    g.stream_elevation = g.lz;
    return build_grid(g);
}

Ensemble make_ensemble(const GridSpec& grid, const CovarianceSpec& cov, Index n,
                       std::uint64_t seed0) {
    Ensemble e;
    for (Index i = 0; i < n; ++i) {
        const auto seed = derive_seed(seed0, "field", static_cast<std::uint64_t>(i));
        e.members.push_back(field_to_model(generate_field(grid, cov, seed), cov));
        e.member_seeds.push_back(seed);
    }
    return e;
}

} // namespace

TEST_CASE("generate_field matches the target marginal law (Monte Carlo)") {
    const GridSpec grid = test_grid();
    const CovarianceSpec cov;
    const Index n_fields = 2000;
    const Index n_cells = grid.n_cells();

    Vector sum = Vector::Zero(n_cells), sum_sq = Vector::Zero(n_cells);
    // accumulators for the lag-5 correlation along x
    double lag_num = 0.0, lag_a2 = 0.0, lag_b2 = 0.0;
    const Index lag = 5;
    for (Index f = 0; f < n_fields; ++f) {
        const Vector field = generate_field(grid, cov, derive_seed(7, "mc", f));
        sum += field;
        sum_sq += field.cwiseProduct(field);
        for (Index iz = 0; iz < grid.nz; ++iz) {
            for (Index ix = 0; ix + lag < grid.nx; ++ix) {
                const double a = field(grid.flat(ix, iz));
                const double b = field(grid.flat(ix + lag, iz));
                lag_num += a * b;
                lag_a2 += a * a;
                lag_b2 += b * b;
            }
        }
    }
    const Vector mean = sum / static_cast<double>(n_fields);
    const Vector var = sum_sq / static_cast<double>(n_fields) - mean.cwiseProduct(mean);
    CHECK(mean.cwiseAbs().maxCoeff() < 0.08);
    CHECK((var.cwiseSqrt().array() - 1.0).abs().maxCoeff() < 0.08);

    const double corr = lag_num / std::sqrt(lag_a2 * lag_b2);
    CHECK(corr == doctest::Approx(std::exp(-1.0)).epsilon(0.05 / std::exp(-1.0)));
}

TEST_CASE("generate_field is deterministic in the seed") {
    const GridSpec grid = test_grid(12, 10);
    const CovarianceSpec cov;
    const Vector a = generate_field(grid, cov, 1234);
    const Vector b = generate_field(grid, cov, 1234);
    CHECK(a == b);
    const Vector c = generate_field(grid, cov, 1235);
    CHECK(a != c);
}

TEST_CASE("disjoint seeds give empirically uncorrelated members") {
    const GridSpec grid = test_grid();
    const CovarianceSpec cov;
    double mean_r = 0.0;
    const Index n_pairs = 200;
    for (Index p = 0; p < n_pairs; ++p) {
        const Vector a = generate_field(grid, cov, derive_seed(11, "pair-a", p));
        const Vector b = generate_field(grid, cov, derive_seed(11, "pair-b", p));
        const Vector da = a.array() - a.mean();
        const Vector db = b.array() - b.mean();
        mean_r += da.dot(db) / (da.norm() * db.norm());
    }
    mean_r /= static_cast<double>(n_pairs);
    CHECK(std::abs(mean_r) < 0.05);
}

TEST_CASE("field_to_model affine map and clamping") {
    const CovarianceSpec cov;
    Vector zeros = Vector::Zero(10);
    GeoModel m = field_to_model(zeros, cov);
    CHECK(m.logk.minCoeff() == 4.5);
    CHECK(m.logk.maxCoeff() == 4.5);
    CHECK(m.phi.minCoeff() == 0.5);

    Vector ones = Vector::Ones(10);
    m = field_to_model(ones, cov);
    CHECK(m.logk(0) == doctest::Approx(5.5).epsilon(1e-15));
    CHECK(m.phi(0) == doctest::Approx(0.55).epsilon(1e-15));

    Vector big = Vector::Constant(4, 20.0);
    m = field_to_model(big, cov);
    CHECK(m.phi(0) == 0.99); // clamped
    Vector small = Vector::Constant(4, -20.0);
    m = field_to_model(small, cov);
    CHECK(m.phi(0) == 0.01);
}

TEST_CASE("fit_pca on an ensemble with no variance") {
    const GridSpec grid = test_grid(6, 5);
    const CovarianceSpec cov;
    GeoModel one = field_to_model(generate_field(grid, cov, 3), cov);
    Ensemble e;
    e.members = {one, one, one};
    const PcaBasis b = fit_pca(e, 0.95);
    CHECK(b.n_l == 0);
    CHECK((b.mean - one.logk).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit_pca energy criterion with known singular values") {
    // construct a centered matrix with singular values {3, 2, 1}
    const Index n_cells = 8, n_members = 4;
    Matrix u = Eigen::HouseholderQR<Matrix>(Matrix::Random(n_cells, 3)).householderQ() *
               Matrix::Identity(n_cells, 3);
    // right vectors orthonormal and orthogonal to the ones vector, so the
    // column mean of the data matrix is exactly the mean vector
    Matrix vraw(n_members, 3);
    vraw.col(0) << 1, -1, 1, -1;
    vraw.col(1) << 1, 1, -1, -1;
    vraw.col(2) << 1, -1, -1, 1;
    vraw /= 2.0;
    const Vector s3 = (Vector(3) << 3.0, 2.0, 1.0).finished();
    Matrix data = u * s3.asDiagonal() * vraw.transpose();
    Vector mean = Vector::Constant(n_cells, 4.5);
    Ensemble e;
    for (Index j = 0; j < n_members; ++j) {
        GeoModel m;
        m.logk = mean + data.col(j);
        m.phi = Vector::Constant(n_cells, 0.5);
        e.members.push_back(m);
    }
    // cumulative squared energies: 9/14, 13/14, 14/14 -> n_l = 3 at 0.95
    const PcaBasis b = fit_pca(e, 0.95);
    CHECK(b.n_l == 3);
    CHECK(b.singular_values(0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(b.singular_values(1) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(b.singular_values(2) == doctest::Approx(1.0).epsilon(1e-10));
    // monotone: larger energy fraction never yields smaller n_l
    CHECK(fit_pca(e, 0.60).n_l <= fit_pca(e, 0.90).n_l);
    CHECK(fit_pca(e, 0.90).n_l <= fit_pca(e, 1.0).n_l);
}

TEST_CASE("pca basis orthonormality and full-rank reconstruction") {
    const GridSpec grid = test_grid(10, 8);
    const CovarianceSpec cov;
    Ensemble e = make_ensemble(grid, cov, 12, 99);
    const PcaBasis b = fit_pca(e, 1.0);
    const Matrix gram = b.basis.transpose() * b.basis;
    CHECK((gram - Matrix::Identity(b.n_l, b.n_l)).cwiseAbs().maxCoeff() < 1e-10);

    double worst = 0.0;
    for (const auto& m : e.members) {
        const Vector xi = pca_project(b, m);
        const GeoModel rec = pca_reconstruct(b, xi, cov);
        worst = std::max(worst, (rec.logk - m.logk).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("pca reconstruction error is non-increasing in n_l") {
    const GridSpec grid = test_grid(10, 8);
    const CovarianceSpec cov;
    Ensemble e = make_ensemble(grid, cov, 10, 5);
    const PcaBasis full = fit_pca(e, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (Index k = 1; k <= full.n_l; ++k) {
        PcaBasis trunc = full;
        trunc.n_l = k;
        trunc.basis = full.basis.leftCols(k);
        double err = 0.0;
        for (const auto& m : e.members) {
            const Vector xi = pca_project(trunc, m);
            err += (pca_reconstruct(trunc, xi, cov).logk - m.logk).squaredNorm();
        }
        CHECK(err <= prev * (1.0 + 1e-12));
        prev = err;
    }
}

TEST_CASE("pca round trips and linearity") {
    const GridSpec grid = test_grid(8, 6);
    const CovarianceSpec cov;
    Ensemble e = make_ensemble(grid, cov, 8, 21);
    const PcaBasis b = fit_pca(e, 1.0);
    REQUIRE(b.n_l >= 2);

    // xi = 0 -> mean model
    const GeoModel mean_model = pca_reconstruct(b, Vector::Zero(b.n_l), cov);
    CHECK((mean_model.logk - b.mean).cwiseAbs().maxCoeff() < 1e-14);

    Rng rng(17);
    Vector xi1(b.n_l), xi2(b.n_l);
    for (Index i = 0; i < b.n_l; ++i) {
        xi1(i) = rng.normal();
        xi2(i) = rng.normal();
    }
    // project(reconstruct(xi)) == xi
    const Vector back = pca_project(b, pca_reconstruct(b, xi1, cov));
    CHECK((back - xi1).cwiseAbs().maxCoeff() < 1e-10);

    // linearity of the reconstruction around the mean
    const Vector lhs = pca_reconstruct(b, xi1 + xi2, cov).logk - b.mean;
    const Vector rhs = (pca_reconstruct(b, xi1, cov).logk - b.mean) +
                       (pca_reconstruct(b, xi2, cov).logk - b.mean);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);

    // projection is non-expansive (orthonormal columns)
    GeoModel random_model = field_to_model(generate_field(grid, cov, 1000), cov);
    const Vector xi = pca_project(b, random_model);
    CHECK(xi.norm() <= (random_model.logk - b.mean).norm() + 1e-10);

    // dimension mismatch is rejected
    CHECK_THROWS_AS(pca_reconstruct(b, Vector::Zero(b.n_l + 1), cov), ConfigError);
}
