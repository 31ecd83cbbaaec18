#include "coastflow/analysis.hpp"

#include "coastflow/errors.hpp"
#include "coastflow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace coastflow::analysis {

double percentile(const Vector& values, double level) {
    const Index n = values.size();
    if (n == 0) throw ConfigError("percentile of an empty set");
    std::vector<double> sorted(values.data(), values.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const double h = (static_cast<double>(n) - 1.0) * level / 100.0;
    const Index lo = static_cast<Index>(std::floor(h));
    if (lo >= n - 1) return sorted[static_cast<size_t>(n - 1)];
    const double frac = h - static_cast<double>(lo);
    return sorted[static_cast<size_t>(lo)] +
           frac * (sorted[static_cast<size_t>(lo + 1)] - sorted[static_cast<size_t>(lo)]);
}

PercentileSeries percentiles(const Matrix& series, const Vector& times) {
    if (series.rows() < 2) throw ConfigError("percentiles require at least 2 members");
    if (series.cols() != times.size()) throw ConfigError("percentiles: time axis mismatch");
    PercentileSeries out;
    out.times = times;
    out.p10.resize(times.size());
    out.p50.resize(times.size());
    out.p90.resize(times.size());
    for (Index t = 0; t < times.size(); ++t) {
        const Vector col = series.col(t);
        out.p10(t) = percentile(col, 10.0);
        out.p50(t) = percentile(col, 50.0);
        out.p90(t) = percentile(col, 90.0);
    }
    return out;
}

FieldErrorMetrics field_error_metrics(const Vector& pred, const Vector& truth) {
    if (pred.size() != truth.size()) throw ConfigError("field_error_metrics: shape mismatch");
    FieldErrorMetrics m;
    m.abs_error = (pred - truth).cwiseAbs();
    m.max_abs = m.abs_error.size() > 0 ? m.abs_error.maxCoeff() : 0.0;
    m.relative_l2 = (pred - truth).norm() / std::max(truth.norm(), 1e-12);
    return m;
}

namespace {

Index nearest_centroid(const Matrix& centroids, const Vector& v) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.cols(); ++c) {
        const double d = (centroids.col(c) - v).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace

Clustering kmeans(const Matrix& vectors, Index k, std::uint64_t seed, Index max_iter) {
    const Index n = vectors.cols();
    if (k < 1) throw ConfigError("kmeans: k must be >= 1");
    if (k > n) throw ConfigError("kmeans: k exceeds the number of members");

    Rng rng(seed);
    Clustering cl;
    cl.k = k;
    cl.centroids.resize(vectors.rows(), k);

    // k-means++ seeding
    std::vector<Index> chosen;
    chosen.push_back(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
    cl.centroids.col(0) = vectors.col(chosen[0]);
    Vector d2 = (vectors.colwise() - vectors.col(chosen[0])).colwise().squaredNorm();
    for (Index c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index pick = 0;
        if (total <= 0.0) {
            pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        } else {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        }
        cl.centroids.col(c) = vectors.col(pick);
        for (Index i = 0; i < n; ++i)
            d2(i) = std::min(d2(i), (vectors.col(i) - vectors.col(pick)).squaredNorm());
    }

    cl.labels.assign(static_cast<size_t>(n), 0);
    double prev_inertia = std::numeric_limits<double>::infinity();
    for (Index iter = 0; iter < max_iter; ++iter) {
        // assignment
        double inertia = 0.0;
        for (Index i = 0; i < n; ++i) {
            const Index c = nearest_centroid(cl.centroids, vectors.col(i));
            cl.labels[static_cast<size_t>(i)] = c;
            inertia += (vectors.col(i) - cl.centroids.col(c)).squaredNorm();
        }
        if (inertia > prev_inertia * (1.0 + 1e-12))
            throw SolverError("kmeans inertia increased across an iteration");
        const bool converged = prev_inertia - inertia <= 1e-12 * std::max(1.0, prev_inertia) &&
                               iter > 0;
        cl.inertia = inertia;
        prev_inertia = inertia;

        // update with empty-cluster repair
        Matrix sums = Matrix::Zero(vectors.rows(), k);
        std::vector<Index> counts(static_cast<size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            sums.col(cl.labels[static_cast<size_t>(i)]) += vectors.col(i);
            ++counts[static_cast<size_t>(cl.labels[static_cast<size_t>(i)])];
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] > 0) {
                cl.centroids.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<size_t>(c)]);
            } else {
                // split the largest cluster: its farthest member seeds the empty one
                Index largest = 0;
                for (Index c2 = 1; c2 < k; ++c2)
                    if (counts[static_cast<size_t>(c2)] > counts[static_cast<size_t>(largest)])
                        largest = c2;
                Index far_i = 0;
                double far_d = -1.0;
                for (Index i = 0; i < n; ++i) {
                    if (cl.labels[static_cast<size_t>(i)] != largest) continue;
                    const double d = (vectors.col(i) - cl.centroids.col(largest)).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                cl.centroids.col(c) = vectors.col(far_i);
            }
        }
        if (converged) break;
    }
    return cl;
}

std::vector<Index> kmedoids_centers(const Matrix& vectors, const std::vector<Index>& labels,
                                    Index k) {
    if (static_cast<Index>(labels.size()) != vectors.cols())
        throw ConfigError("kmedoids_centers: label count mismatch");
    std::vector<Index> medoids(static_cast<size_t>(k), -1);
    for (Index c = 0; c < k; ++c) {
        std::vector<Index> members;
        for (Index i = 0; i < vectors.cols(); ++i)
            if (labels[static_cast<size_t>(i)] == c) members.push_back(i);
        if (members.empty())
            throw ConfigError("kmedoids_centers: cluster " + std::to_string(c) + " is empty");
        double best = std::numeric_limits<double>::infinity();
        Index best_i = members.front();
        for (Index i : members) {
            double sum = 0.0;
            for (Index j : members) sum += (vectors.col(i) - vectors.col(j)).norm();
            if (sum < best) { // strict: ties keep the lowest index
                best = sum;
                best_i = i;
            }
        }
        medoids[static_cast<size_t>(c)] = best_i;
    }
    return medoids;
}

void ensemble_moments(const Matrix& fields, Vector& mean, Vector& std_dev) {
    const Index n = fields.cols();
    if (n < 2) throw ConfigError("ensemble_moments require at least 2 members");
    mean = fields.rowwise().mean();
    const Matrix anom = fields.colwise() - mean;
    std_dev = (anom.array().square().rowwise().sum() / static_cast<double>(n - 1)).sqrt();
}

} // namespace coastflow::analysis
