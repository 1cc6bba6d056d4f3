#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "urbanprof/matrix.hpp"

namespace urbanprof {

struct HopkinsResult {
  double h = 0.0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
};

/// Hopkins clustering tendency, oriented so that clustered data gives H
/// near 0 and uniformly scattered data gives H near 0.5:
///   H = sum(w) / (sum(u) + sum(w)),
/// with w the nearest-neighbor distances of m sampled data points to the
/// rest of the data and u those of m uniform points drawn in the data's
/// bounding box. `m` = 0 selects max(1, n / 10).
HopkinsResult hopkins(const Matrix& data, std::size_t m, std::uint64_t seed);

struct CcaResult {
  std::vector<double> correlations;  ///< non-increasing, clipped to [0, 1]
  Matrix x_weights;                  ///< q1 x r canonical directions for X
  Matrix y_weights;                  ///< q2 x r canonical directions for Y
  double max_clip = 0.0;             ///< largest amount removed by clipping
};

/// Canonical correlations of X (n x q1) and Y (n x q2) by whitening each
/// covariance block, (C + ridge I)^{-1/2}, and taking singular values of the
/// whitened cross-covariance. `ridge` defaults to 1e-6 * trace(C) / q per
/// block; a ridge of 0 on a singular block throws NumericError.
CcaResult cca(const Matrix& x, const Matrix& y, std::optional<double> ridge = std::nullopt);

struct ClusterCca {
  std::map<int, CcaResult> by_cluster;
  std::vector<int> skipped;  ///< clusters with too few rows
};

/// cca restricted to the rows of each cluster (labels < 0 are ignored).
ClusterCca cca_by_cluster(const Matrix& x, const Matrix& y, std::span<const int> labels,
                          std::optional<double> ridge = std::nullopt);

/// Pearson correlation; throws DataError when either list is constant.
double pearson(std::span<const double> a, std::span<const double> b);

struct DistanceCorrelation {
  double r = 0.0;
  std::vector<int> clusters;               ///< cluster ids in ascending order
  std::vector<double> profile_distances;   ///< one per cluster pair (a < b)
  std::vector<double> timeline_distances;
};

/// Pearson r between Euclidean distances of cluster means in the two spaces,
/// over all cluster pairs. Needs at least 3 clusters.
DistanceCorrelation distance_correlation(const Matrix& profiles, const Matrix& timelines,
                                         std::span<const int> labels);

}  // namespace urbanprof
