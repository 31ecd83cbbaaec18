#pragma once

#include "coastflow/types.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace coastflow::esmda {

/// Noisy observations with per-entry standard deviations (diagonal C_D).
/// Ordering matches extract_observations: time-major, then location, then
/// quantity (head, salinity).
struct ObservationSet {
    Vector values;
    Vector noise_std;

    void validate() const;
};

struct EsmdaConfig {
    Index n_assim = 4;
    std::vector<double> alphas = {4.0, 4.0, 4.0, 4.0};
    Index n_real = 100;
    std::uint64_t seed = 1;
    std::string forward_model = "surrogate"; // or "simulator"

    /// Enforces len(alphas) == n_assim, alphas > 0 and sum(1/alpha) == 1
    /// within 1e-10 (Gaussian-linear consistency).
    void validate() const;
};

/// Columns are members: (n_l x n_real).
struct LatentEnsemble {
    Matrix members;

    Index n_latent() const { return members.rows(); }
    Index n_real() const { return members.cols(); }
};

/// i.i.d. standard-normal latent prior, deterministic in the seed
/// (member-major draw order). n_real must be >= 2.
LatentEnsemble sample_prior(Index n_real, Index n_latent, std::uint64_t seed);

/// d_obs + sqrt(alpha) * e with e ~ N(0, diag(noise_std^2)).
Vector perturb_observations(const ObservationSet& obs, double alpha, std::uint64_t seed);

/// One ESMDA step: xi_i += C_xd (C_d + alpha C_D)^{-1} (d_obs + sqrt(alpha) e_i - d_i)
/// with 1/(N_r - 1) sample covariances and per-member perturbations drawn
/// from derive_seed(seed, "perturb", member). The symmetric solve retries
/// once with jitter 1e-10*trace/n before failing.
LatentEnsemble esmda_update(const LatentEnsemble& xi, const Matrix& simulated,
                            const ObservationSet& obs, double alpha, std::uint64_t seed);

/// Forward map from one latent vector to predicted observations.
using ForwardMap = std::function<Vector(const Vector& xi, Index member)>;

struct StepDiagnostics {
    Index step = 0;               // 0 = prior
    double mean_mismatch = 0.0;   // sum(((dbar - d_obs)/sigma)^2)/n_obs
    double latent_spread = 0.0;   // sqrt(mean per-coordinate ensemble variance)
};

struct EsmdaResult {
    LatentEnsemble posterior;
    std::vector<StepDiagnostics> diagnostics; // prior entry + one per step
    Matrix prior_predictions;                 // n_obs x n_real, step-0 forward
    Matrix final_predictions;                 // forward on the posterior
};

/// N_a sequential updates, re-running the forward map on the updated
/// ensemble each step. A member whose forward fails is resampled from the
/// prior once; a second failure aborts with the member index and seed.
EsmdaResult run_esmda(const LatentEnsemble& prior, const ForwardMap& forward,
                      const ObservationSet& obs, const EsmdaConfig& cfg);

} // namespace coastflow::esmda
