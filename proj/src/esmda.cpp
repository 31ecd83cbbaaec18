#include "coastflow/esmda.hpp"

#include "coastflow/errors.hpp"
#include "coastflow/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace coastflow::esmda {

void ObservationSet::validate() const {
    if (values.size() != noise_std.size())
        throw ConfigError("observation values and noise_std lengths differ");
    if (values.size() == 0) throw ConfigError("observation set is empty");
    if ((noise_std.array() <= 0.0).any())
        throw ConfigError("all observation noise standard deviations must be > 0");
}

void EsmdaConfig::validate() const {
    if (n_assim < 1) throw ConfigError("esmda.n_assim must be >= 1");
    if (static_cast<Index>(alphas.size()) != n_assim)
        throw ConfigError("esmda.alphas must list exactly n_assim coefficients");
    double inv_sum = 0.0;
    for (double a : alphas) {
        if (!(a > 0.0)) throw ConfigError("esmda.alphas must be > 0");
        inv_sum += 1.0 / a;
    }
    if (std::abs(inv_sum - 1.0) > 1e-10)
        throw ConfigError("esmda inflation coefficients must satisfy sum(1/alpha) = 1 (got " +
                          std::to_string(inv_sum) + ")");
    if (n_real < 2) throw ConfigError("esmda.n_real must be >= 2");
    if (forward_model != "surrogate" && forward_model != "simulator")
        throw ConfigError("esmda.forward_model must be 'surrogate' or 'simulator'");
}

LatentEnsemble sample_prior(Index n_real, Index n_latent, std::uint64_t seed) {
    if (n_real < 2) throw ConfigError("sample_prior: n_real must be >= 2");
    if (n_latent < 1) throw ConfigError("sample_prior: n_latent must be >= 1");
    LatentEnsemble e;
    e.members.resize(n_latent, n_real);
    for (Index j = 0; j < n_real; ++j) {
        Rng rng(derive_seed(seed, "latent-prior", static_cast<std::uint64_t>(j)));
        for (Index i = 0; i < n_latent; ++i) e.members(i, j) = rng.normal();
    }
    return e;
}

Vector perturb_observations(const ObservationSet& obs, double alpha, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw ConfigError("perturb_observations: alpha must be > 0");
    const double root_alpha = std::sqrt(alpha);
    Rng rng(seed);
    Vector out(obs.values.size());
    for (Index i = 0; i < out.size(); ++i)
        out(i) = obs.values(i) + root_alpha * obs.noise_std(i) * rng.normal();
    return out;
}

LatentEnsemble esmda_update(const LatentEnsemble& xi, const Matrix& simulated,
                            const ObservationSet& obs, double alpha, std::uint64_t seed) {
    obs.validate();
    const Index n_real = xi.n_real();
    const Index n_obs = obs.values.size();
    if (n_real < 2) throw ConfigError("esmda_update: need at least 2 members");
    if (simulated.cols() != n_real || simulated.rows() != n_obs)
        throw ConfigError("esmda_update: simulated-data ensemble has wrong shape");

    const double inv_nm1 = 1.0 / static_cast<double>(n_real - 1);
    const Vector xi_mean = xi.members.rowwise().mean();
    const Vector d_mean = simulated.rowwise().mean();
    Matrix xi_anom = xi.members.colwise() - xi_mean;
    Matrix d_anom = simulated.colwise() - d_mean;

    // C_d + alpha C_D, with sample covariance normalization 1/(N_r - 1)
    Matrix system = inv_nm1 * (d_anom * d_anom.transpose());
    system.diagonal() += alpha * obs.noise_std.array().square().matrix();

    Eigen::LDLT<Matrix> ldlt(system);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        const double jitter = 1e-10 * system.trace() / static_cast<double>(n_obs);
        system.diagonal().array() += jitter;
        ldlt.compute(system);
        if (ldlt.info() != Eigen::Success)
            throw SolverError("esmda_update: covariance factorization failed even with jitter; "
                              "consider a larger alpha or fewer observations");
    }

    // innovations with per-member perturbed observations
    Matrix innov(n_obs, n_real);
    for (Index j = 0; j < n_real; ++j)
        innov.col(j) = perturb_observations(obs, alpha,
                                            derive_seed(seed, "perturb",
                                                        static_cast<std::uint64_t>(j))) -
                       simulated.col(j);

    const Matrix solved = ldlt.solve(innov);              // (C_d + a C_D)^{-1} innov
    const Matrix cross = inv_nm1 * (xi_anom * d_anom.transpose()); // C_xi,d

    LatentEnsemble out;
    out.members = xi.members + cross * solved;
    if (!out.members.allFinite()) throw SolverError("esmda_update produced non-finite latents");
    return out;
}

EsmdaResult run_esmda(const LatentEnsemble& prior, const ForwardMap& forward,
                      const ObservationSet& obs, const EsmdaConfig& cfg) {
    cfg.validate();
    obs.validate();
    const Index n_obs = obs.values.size();
    const Index n_real = prior.n_real();

    EsmdaResult result;
    LatentEnsemble current = prior;

    const auto run_forward = [&](const LatentEnsemble& ens, Index step) {
        Matrix d(n_obs, n_real);
        for (Index j = 0; j < n_real; ++j) {
            Vector pred;
            try {
                pred = forward(ens.members.col(j), j);
            } catch (const std::exception&) {
                // one resample from the prior, then give up
                const std::uint64_t reseed =
                    derive_seed(cfg.seed, "member-resample",
                                static_cast<std::uint64_t>(step * n_real + j));
                Rng rng(reseed);
                Vector fresh(ens.n_latent());
                for (Index i = 0; i < fresh.size(); ++i) fresh(i) = rng.normal();
                try {
                    pred = forward(fresh, j);
                    const_cast<LatentEnsemble&>(ens).members.col(j) = fresh;
                } catch (const std::exception& e2) {
                    throw SolverError("forward map failed twice for member " + std::to_string(j) +
                                      " (resample seed " + std::to_string(reseed) +
                                      "): " + e2.what());
                }
            }
            if (pred.size() != n_obs)
                throw ConfigError("forward map returned " + std::to_string(pred.size()) +
                                  " values, expected " + std::to_string(n_obs));
            d.col(j) = pred;
        }
        return d;
    };

    const auto diagnose = [&](Index step, const LatentEnsemble& ens, const Matrix& d) {
        StepDiagnostics diag;
        diag.step = step;
        const Vector d_mean = d.rowwise().mean();
        diag.mean_mismatch = (((d_mean - obs.values).array() / obs.noise_std.array()).square())
                                 .sum() /
                             static_cast<double>(n_obs);
        const Vector mean = ens.members.rowwise().mean();
        const Matrix anom = ens.members.colwise() - mean;
        diag.latent_spread = std::sqrt(anom.array().square().sum() /
                                       static_cast<double>(ens.n_latent() * (ens.n_real() - 1)));
        return diag;
    };

    Matrix d = run_forward(current, 0);
    result.prior_predictions = d;
    result.diagnostics.push_back(diagnose(0, current, d));

    for (Index k = 0; k < cfg.n_assim; ++k) {
        const double alpha = cfg.alphas[static_cast<size_t>(k)];
        current = esmda_update(current, d, obs, alpha,
                               derive_seed(cfg.seed, "esmda-step", static_cast<std::uint64_t>(k)));
        d = run_forward(current, k + 1);
        result.diagnostics.push_back(diagnose(k + 1, current, d));
    }
    result.posterior = std::move(current);
    result.final_predictions = std::move(d);
    return result;
}

} // namespace coastflow::esmda
