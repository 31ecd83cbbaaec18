#include "coastflow/errors.hpp"
#include "coastflow/rng.hpp"

#include "ufno_internal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace coastflow::ufno {

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace {

constexpr double kStdFloor = 1e-8;

void mean_std(double sum, double sum_sq, double n, double& mean, double& std_out) {
    mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    std_out = std::max(std::sqrt(var), kStdFloor);
}

} // namespace

Normalizer fit_normalizer_input(const Dataset& ds) {
    if (ds.samples.empty()) throw ConfigError("fit_normalizer: empty dataset");
    double sum = 0.0, sum_sq = 0.0, n = 0.0;
    for (const auto& s : ds.samples) {
        sum += s.logk.sum();
        sum_sq += s.logk.squaredNorm();
        n += static_cast<double>(s.logk.size());
    }
    Normalizer norm;
    mean_std(sum, sum_sq, n, norm.in_mean, norm.in_std);
    return norm;
}

void fit_normalizer_output(const Dataset& ds, int quantity, Normalizer& norm) {
    if (ds.samples.empty()) throw ConfigError("fit_normalizer: empty dataset");
    double sum = 0.0, sum_sq = 0.0, n = 0.0;
    for (const auto& s : ds.samples) {
        sum += s.series.sum();
        sum_sq += s.series.squaredNorm();
        n += static_cast<double>(s.series.size());
    }
    if (quantity == kPressure)
        mean_std(sum, sum_sq, n, norm.out_mean_pressure, norm.out_std_pressure);
    else
        mean_std(sum, sum_sq, n, norm.out_mean_salinity, norm.out_std_salinity);
}

Tensor4 embed_series(const Matrix& series, const std::vector<int>& active_cells,
                     const FieldDims& dims, double mean, double inv_std) {
    if (series.rows() != static_cast<Index>(active_cells.size()))
        throw ConfigError("embed_series: series rows do not match active cell count");
    Tensor4 t(dims.nz, dims.nx, dims.nt, 1);
    for (Index c = 0; c < series.rows(); ++c) {
        const Index flat = active_cells[static_cast<size_t>(c)];
        const Index iz = flat / dims.nx, ix = flat % dims.nx;
        for (Index it = 0; it < dims.nt; ++it)
            t.at(iz, ix, it, 0) = (series(c, it) - mean) * inv_std;
    }
    return t;
}

// ---------------------------------------------------------------------------
// ADAM
// ---------------------------------------------------------------------------

AdamState AdamState::zeros(const UfnoConfig& cfg) {
    return {UfnoParams::zeros(cfg), UfnoParams::zeros(cfg)};
}

namespace {

struct Span {
    double* p;
    Index n;
};

std::vector<Span> spans_of(UfnoParams& p) {
    std::vector<Span> spans;
    for_each_span(p, [&](double* d, Index n) { spans.push_back({d, n}); });
    return spans;
}

} // namespace

void adam_step(UfnoParams& theta, const UfnoParams& grads, AdamState& state, Index t,
               const TrainConfig& cfg) {
    if (t < 1) throw ConfigError("adam_step: t must be >= 1");
    auto th = spans_of(theta);
    auto gr = spans_of(const_cast<UfnoParams&>(grads));
    auto ms = spans_of(state.m);
    auto vs = spans_of(state.v);
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t s = 0; s < th.size(); ++s) {
        Eigen::Map<Vector> w(th[s].p, th[s].n);
        Eigen::Map<const Vector> g(gr[s].p, gr[s].n);
        Eigen::Map<Vector> m(ms[s].p, ms[s].n);
        Eigen::Map<Vector> v(vs[s].p, vs[s].n);
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v.array().matrix() + (1.0 - cfg.beta2) * g.array().square().matrix();
        w.array() -= cfg.learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + cfg.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

void accumulate(UfnoParams& acc, const UfnoParams& g, double scale) {
    auto a = spans_of(acc);
    auto b = spans_of(const_cast<UfnoParams&>(g));
    for (size_t s = 0; s < a.size(); ++s)
        Eigen::Map<Vector>(a[s].p, a[s].n) +=
            scale * Eigen::Map<const Vector>(b[s].p, b[s].n);
}

double max_abs(const UfnoParams& p) {
    double m = 0.0;
    for_each_span(p, [&](const double* d, Index n) {
        for (Index i = 0; i < n; ++i) m = std::max(m, std::abs(d[i]));
    });
    return m;
}

} // namespace

TrainResult train(const Dataset& ds, const Normalizer& norm, int quantity, const TrainConfig& tc,
                  const UfnoConfig& uc) {
    tc.validate();
    uc.validate_for(ds.dims.nz, ds.dims.nx, ds.dims.nt);
    const Index n_total = static_cast<Index>(ds.samples.size());
    if (n_total < 2) throw ConfigError("train requires at least 2 samples");

    const Index n_val = static_cast<Index>(std::floor(tc.val_split * static_cast<double>(n_total)));
    const Index n_train = n_total - n_val;
    std::vector<Index> train_idx(static_cast<size_t>(n_train));
    std::iota(train_idx.begin(), train_idx.end(), 0);

    const double out_mean = norm.out_mean(quantity);
    const double inv_std = 1.0 / norm.out_std(quantity);

    const auto norm_input = [&](Index i) {
        return Vector(((ds.samples[static_cast<size_t>(i)].logk.array() - norm.in_mean) /
                       norm.in_std)
                          .matrix());
    };
    const auto target = [&](Index i) {
        return embed_series(ds.samples[static_cast<size_t>(i)].series, ds.active_cells, ds.dims,
                            out_mean, inv_std);
    };

    TrainResult result;
    result.params = UfnoParams::random_init(uc, derive_seed(tc.seed, "init", 0));
    AdamState adam = AdamState::zeros(uc);
    Index step = 0;

    for (Index epoch = 0; epoch < tc.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        // deterministic Fisher-Yates shuffle per epoch
        Rng shuffle_rng(derive_seed(tc.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        for (Index i = n_train - 1; i > 0; --i) {
            const Index j = static_cast<Index>(shuffle_rng.below(static_cast<std::uint64_t>(i + 1)));
            std::swap(train_idx[static_cast<size_t>(i)], train_idx[static_cast<size_t>(j)]);
        }

        double epoch_loss = 0.0;
        for (Index b0 = 0; b0 < n_train; b0 += tc.batch_size) {
            const Index bn = std::min(tc.batch_size, n_train - b0);
            UfnoParams grads = UfnoParams::zeros(uc);
            for (Index k = 0; k < bn; ++k) {
                const Index i = train_idx[static_cast<size_t>(b0 + k)];
                ForwardTrace trace;
                Tensor4 pred = forward_traced(norm_input(i), result.params, uc, ds.dims, trace);
                Tensor4 truth = target(i);
                const double sample_loss = loss(pred, truth, ds.active_mask, tc.lambda_active);
                if (!std::isfinite(sample_loss))
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                        ", batch " + std::to_string(b0 / tc.batch_size) +
                                        ", max |grad| so far " + std::to_string(max_abs(grads)));
                epoch_loss += sample_loss;
                Tensor4 gout = loss_gradient(pred, truth, ds.active_mask, tc.lambda_active);
                UfnoParams g = backward(gout, trace, result.params, uc);
                accumulate(grads, g, 1.0 / static_cast<double>(bn));
            }
            ++step;
            adam_step(result.params, grads, adam, step, tc);
        }
        epoch_loss /= static_cast<double>(n_train);

        double val_loss = 0.0;
        for (Index i = n_train; i < n_total; ++i) {
            Tensor4 pred = forward_normalized(norm_input(i), result.params, uc, ds.dims);
            val_loss += loss(pred, target(i), ds.active_mask, tc.lambda_active);
        }
        if (n_val > 0) val_loss /= static_cast<double>(n_val);

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                .count();
        result.log.push_back({epoch, epoch_loss, val_loss, wall});
    }
    return result;
}

} // namespace coastflow::ufno
