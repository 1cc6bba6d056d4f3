#include "urbanprof/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "urbanprof/errors.hpp"
#include "urbanprof/kernels.hpp"
#include "urbanprof/linalg.hpp"

namespace urbanprof {

HopkinsResult hopkins(const Matrix& data, std::size_t m, std::uint64_t seed) {
  const std::size_t n = data.rows();
  const std::size_t q = data.cols();
  if (n < 2) throw DataError("Hopkins statistic needs at least 2 points");
  if (q < 1) throw DataError("Hopkins statistic needs at least one dimension");
  if (m == 0) m = std::max<std::size_t>(1, n / 10);
  m = std::min(m, n);

  std::vector<double> lo(q, std::numeric_limits<double>::infinity());
  std::vector<double> hi(q, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      lo[j] = std::min(lo[j], data(i, j));
      hi[j] = std::max(hi[j], data(i, j));
    }
  bool any_extent = false;
  for (std::size_t j = 0; j < q; ++j) any_extent = any_extent || hi[j] > lo[j];
  if (!any_extent) throw DataError("Hopkins statistic: degenerate bounding box");

  std::mt19937_64 rng(seed);
  // Real sample without replacement (partial Fisher-Yates).
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Matrix real(m, q);
  std::vector<std::ptrdiff_t> exclude(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto src = data.row(idx[i]);
    std::copy(src.begin(), src.end(), real.row(i).begin());
    exclude[i] = static_cast<std::ptrdiff_t>(idx[i]);
  }
  Matrix uniform(m, q);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < q; ++j) uniform(i, j) = lo[j] + unit(rng) * (hi[j] - lo[j]);

  const auto w = kernels::omp::nearest_neighbor_distances(data, real, exclude);
  const auto u = kernels::omp::nearest_neighbor_distances(data, uniform, {});
  double sw = 0.0, su = 0.0;
  for (double v : w) sw += v;
  for (double v : u) su += v;
  HopkinsResult out;
  out.m = m;
  out.seed = seed;
  out.h = (su + sw) > 0.0 ? sw / (su + sw) : 0.0;
  return out;
}

namespace {

Matrix centered(const Matrix& a) {
  Matrix c = a;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) mean += a(i, j);
    mean /= static_cast<double>(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) c(i, j) -= mean;
  }
  return c;
}

Matrix covariance(const Matrix& a, const Matrix& b) {
  Matrix c = multiply_at_b(a, b);
  const double scale = 1.0 / static_cast<double>(a.rows() - 1);
  for (double& v : c.data()) v *= scale;
  return c;
}

std::size_t numeric_rank(const Matrix& cov) {
  const Spectrum s = sym_eig(cov, 0);
  const double top = std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
  if (top == 0.0) return 0;
  return static_cast<std::size_t>(std::count_if(s.eigenvalues.begin(), s.eigenvalues.end(),
                                                [&](double v) { return v > 1e-10 * top; }));
}

void add_ridge(Matrix& cov, std::optional<double> ridge) {
  const std::size_t q = cov.rows();
  double amount = 0.0;
  if (ridge) {
    if (*ridge < 0.0) throw ConfigError("ridge must be non-negative");
    amount = *ridge;
  } else {
    double trace = 0.0;
    for (std::size_t i = 0; i < q; ++i) trace += cov(i, i);
    amount = 1e-6 * trace / static_cast<double>(q);
  }
  for (std::size_t i = 0; i < q; ++i) cov(i, i) += amount;
}

Matrix whitener(Matrix cov, std::optional<double> ridge, const char* side) {
  add_ridge(cov, ridge);
  try {
    return inverse_sqrt_spd(cov);
  } catch (const NumericError&) {
    throw NumericError(std::string("CCA: covariance of ") + side +
                       " is singular; use a ridge > 0");
  }
}

}  // namespace

CcaResult cca(const Matrix& x, const Matrix& y, std::optional<double> ridge) {
  const std::size_t n = x.rows();
  if (y.rows() != n) throw DataError("CCA: X and Y must have the same number of rows");
  if (n < 3) throw DataError("CCA needs at least 3 rows");
  if (x.cols() == 0 || y.cols() == 0) throw DataError("CCA needs non-empty feature sets");
  const Matrix xc = centered(x);
  const Matrix yc = centered(y);
  const Matrix cxx = covariance(xc, xc);
  const Matrix cyy = covariance(yc, yc);
  const Matrix cxy = covariance(xc, yc);
  const std::size_t r = std::min(numeric_rank(cxx), numeric_rank(cyy));

  const Matrix wx = whitener(cxx, ridge, "X");
  const Matrix wy = whitener(cyy, ridge, "Y");
  const Matrix k = multiply(multiply(wx, cxy), wy);  // q1 x q2

  // Singular values of K via the eigenproblem of K^T K (q2 x q2).
  const std::size_t q2 = y.cols();
  const Spectrum s = sym_eig(multiply_at_b(k, k), q2);
  CcaResult out;
  out.x_weights = Matrix(x.cols(), r);
  out.y_weights = Matrix(q2, r);
  for (std::size_t t = 0; t < r; ++t) {
    const std::size_t src = q2 - 1 - t;  // descending
    const double lambda = std::max(0.0, s.eigenvalues[src]);
    const double sigma = std::sqrt(lambda);
    const double clipped = std::clamp(sigma, 0.0, 1.0);
    out.max_clip = std::max(out.max_clip, std::abs(sigma - clipped));
    out.correlations.push_back(clipped);
    // y direction b = Wy v, x direction a = Wx K v / sigma.
    std::vector<double> v(q2), kv(x.cols(), 0.0);
    for (std::size_t i = 0; i < q2; ++i) v[i] = s.eigenvectors(i, src);
    for (std::size_t i = 0; i < x.cols(); ++i)
      for (std::size_t j = 0; j < q2; ++j) kv[i] += k(i, j) * v[j];
    for (std::size_t i = 0; i < q2; ++i) {
      double b = 0.0;
      for (std::size_t j = 0; j < q2; ++j) b += wy(i, j) * v[j];
      out.y_weights(i, t) = b;
    }
    for (std::size_t i = 0; i < x.cols(); ++i) {
      double a = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) a += wx(i, j) * kv[j];
      out.x_weights(i, t) = sigma > 0.0 ? a / sigma : 0.0;
    }
  }
  return out;
}

ClusterCca cca_by_cluster(const Matrix& x, const Matrix& y, std::span<const int> labels,
                          std::optional<double> ridge) {
  if (labels.size() != x.rows() || labels.size() != y.rows())
    throw DataError("CCA by cluster: labels must match the rows");
  std::map<int, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) rows[labels[i]].push_back(i);
  const std::size_t min_rows = std::min(x.cols(), y.cols()) + 1;
  ClusterCca out;
  for (const auto& [cluster, members] : rows) {
    if (members.size() <= min_rows || members.size() < 3) {
      out.skipped.push_back(cluster);
      continue;
    }
    out.by_cluster.emplace(cluster, cca(select_rows(x, members), select_rows(y, members), ridge));
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw DataError("pearson needs two equal lists of >= 2");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DataError("pearson correlation of a constant list");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

Matrix cluster_means(const Matrix& data, std::span<const int> labels, const std::vector<int>& ids) {
  Matrix means(ids.size(), data.cols());
  std::vector<double> counts(ids.size(), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    const auto slot = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin());
    auto row = means.row(slot);
    const auto src = data.row(i);
    for (std::size_t j = 0; j < data.cols(); ++j) row[j] += src[j];
    counts[slot] += 1.0;
  }
  for (std::size_t c = 0; c < ids.size(); ++c)
    for (double& v : means.row(c)) v /= counts[c];
  return means;
}

}  // namespace

DistanceCorrelation distance_correlation(const Matrix& profiles, const Matrix& timelines,
                                         std::span<const int> labels) {
  if (profiles.rows() != labels.size() || timelines.rows() != labels.size())
    throw DataError("distance correlation: labels must match the rows");
  DistanceCorrelation out;
  for (int l : labels)
    if (l >= 0) out.clusters.push_back(l);
  std::sort(out.clusters.begin(), out.clusters.end());
  out.clusters.erase(std::unique(out.clusters.begin(), out.clusters.end()), out.clusters.end());
  if (out.clusters.size() < 3)
    throw DataError("distance correlation needs at least 3 clusters");
  const Matrix pm = cluster_means(profiles, labels, out.clusters);
  const Matrix tm = cluster_means(timelines, labels, out.clusters);
  for (std::size_t a = 0; a < out.clusters.size(); ++a)
    for (std::size_t b = a + 1; b < out.clusters.size(); ++b) {
      out.profile_distances.push_back(std::sqrt(squared_distance(pm.row(a), pm.row(b))));
      out.timeline_distances.push_back(std::sqrt(squared_distance(tm.row(a), tm.row(b))));
    }
  out.r = pearson(out.profile_distances, out.timeline_distances);
  return out;
}

}  // namespace urbanprof
