#include "urbanprof/kernels.hpp"

#include <cmath>
#include <limits>

#include "urbanprof/errors.hpp"

namespace urbanprof::kernels {

namespace {

std::vector<double> row_norms(const Matrix& rows) {
  std::vector<double> norms(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    norms[i] = norm(rows.row(i));
    if (!(norms[i] > 0.0)) throw DataError("cosine similarity of a zero vector");
  }
  return norms;
}

// One row of the upper triangle; writes (i, j) and (j, i) for j >= i.
inline void cosine_row(const Matrix& rows, const std::vector<double>& norms, Matrix& out,
                       std::size_t i) {
  out(i, i) = 1.0;
  for (std::size_t j = i + 1; j < rows.rows(); ++j) {
    const double s = dot(rows.row(i), rows.row(j)) / (norms[i] * norms[j]);
    out(i, j) = s;
    out(j, i) = s;
  }
}

inline void nearest_centroid(const Matrix& points, const Matrix& centroids, std::size_t i,
                             std::size_t& label, double& best) {
  best = std::numeric_limits<double>::infinity();
  label = 0;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(points.row(i), centroids.row(c));
    if (d < best) {
      best = d;
      label = c;
    }
  }
}

inline double nearest_distance(const Matrix& data, const Matrix& queries, std::size_t i,
                               std::ptrdiff_t skip) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < data.rows(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) == skip) continue;
    best = std::min(best, squared_distance(queries.row(i), data.row(j)));
  }
  return std::sqrt(best);
}

inline void member_sum(const Matrix& rows, const std::vector<std::size_t>& members,
                       std::span<double> out) {
  for (std::size_t j : members) {
    const auto src = rows.row(j);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += src[c];
  }
}

void check_exclude(const Matrix& queries, std::span<const std::ptrdiff_t> exclude) {
  if (!exclude.empty() && exclude.size() != queries.rows())
    throw DataError("exclude list must match the number of queries");
}

}  // namespace

namespace serial {

Matrix cosine_similarity_matrix(const Matrix& rows) {
  const auto norms = row_norms(rows);
  Matrix out(rows.rows(), rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) cosine_row(rows, norms, out, i);
  return out;
}

void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> labels, std::span<double> sq_dist) {
  for (std::size_t i = 0; i < points.rows(); ++i)
    nearest_centroid(points, centroids, i, labels[i], sq_dist[i]);
}

std::vector<double> nearest_neighbor_distances(const Matrix& data, const Matrix& queries,
                                               std::span<const std::ptrdiff_t> exclude) {
  check_exclude(queries, exclude);
  std::vector<double> out(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i)
    out[i] = nearest_distance(data, queries, i, exclude.empty() ? -1 : exclude[i]);
  return out;
}

Matrix sum_member_rows(const Matrix& rows, const std::vector<std::vector<std::size_t>>& members) {
  Matrix out(members.size(), rows.cols());
  for (std::size_t i = 0; i < members.size(); ++i) member_sum(rows, members[i], out.row(i));
  return out;
}

}  // namespace serial

namespace omp {

Matrix cosine_similarity_matrix(const Matrix& rows) {
  const auto norms = row_norms(rows);
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
  Matrix out(rows.rows(), rows.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    cosine_row(rows, norms, out, static_cast<std::size_t>(i));
  return out;
}

void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> labels, std::span<double> sq_dist) {
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    nearest_centroid(points, centroids, u, labels[u], sq_dist[u]);
  }
}

std::vector<double> nearest_neighbor_distances(const Matrix& data, const Matrix& queries,
                                               std::span<const std::ptrdiff_t> exclude) {
  check_exclude(queries, exclude);
  std::vector<double> out(queries.rows());
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = nearest_distance(data, queries, u, exclude.empty() ? -1 : exclude[u]);
  }
  return out;
}

Matrix sum_member_rows(const Matrix& rows, const std::vector<std::vector<std::size_t>>& members) {
  Matrix out(members.size(), rows.cols());
  const auto n = static_cast<std::ptrdiff_t>(members.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    member_sum(rows, members[u], out.row(u));
  }
  return out;
}

}  // namespace omp

}  // namespace urbanprof::kernels
