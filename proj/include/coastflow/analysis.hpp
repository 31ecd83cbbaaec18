#pragma once

#include "coastflow/types.hpp"

#include <cstdint>
#include <vector>

namespace coastflow::analysis {

/// Per-time percentile bands across an ensemble of series.
struct PercentileSeries {
    Vector times;
    Vector p10, p50, p90;
};

/// Linear-interpolation percentile between order statistics:
/// h = (n-1)*p/100, value = x_(floor(h)) + frac(h)*(x_(floor(h)+1) - x_(floor(h))).
double percentile(const Vector& values, double level);

/// series: one row per member, columns are times. Requires >= 2 members.
PercentileSeries percentiles(const Matrix& series, const Vector& times);

struct FieldErrorMetrics {
    double max_abs = 0.0;
    double relative_l2 = 0.0; // ||err|| / max(||truth||, 1e-12)
    Vector abs_error;         // per active cell
};

/// Metrics over active cells only; pred/truth indexed per active cell.
FieldErrorMetrics field_error_metrics(const Vector& pred, const Vector& truth);

struct Clustering {
    Index k = 0;
    std::vector<Index> labels;   // per member, in [0, k)
    Matrix centroids;            // dim x k
    std::vector<Index> medoids;  // per cluster, set by kmedoids_centers
    double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding and deterministic empty-cluster
/// repair (the farthest member of the largest cluster becomes the empty
/// cluster's centroid). Inertia is asserted non-increasing per iteration.
Clustering kmeans(const Matrix& vectors, Index k, std::uint64_t seed, Index max_iter = 100);

/// Per cluster, the member minimizing the summed Euclidean distance to its
/// cluster's members; ties break to the lowest member index.
std::vector<Index> kmedoids_centers(const Matrix& vectors, const std::vector<Index>& labels,
                                    Index k);

/// Per-cell sample mean and sample std (1/(N-1)); columns are members.
void ensemble_moments(const Matrix& fields, Vector& mean, Vector& std_dev);

} // namespace coastflow::analysis
