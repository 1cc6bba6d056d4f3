#include "urbanprof/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>

#include <json.hpp>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/kernels.hpp"

namespace urbanprof {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DataError("cosine similarity of vectors of different length");
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw DataError("cosine similarity of a zero vector");
  return dot(u, v) / (nu * nv);
}

SimilarityGraph knn_graph(const Matrix& rows, std::span<const std::size_t> vertex_ids,
                          std::size_t k_nn, KnnSymmetrization symmetrization) {
  const std::size_t n = rows.rows();
  if (vertex_ids.size() != n) throw DataError("vertex ids must match the rows");
  if (k_nn < 1) throw ConfigError("k_nn must be >= 1");
  if (k_nn >= n)
    throw DataError("too few usable cells (" + std::to_string(n) + ") for k_nn = " +
                    std::to_string(k_nn));
  const Matrix sim = kernels::omp::cosine_similarity_matrix(rows);

  // selected[i * n + j] != 0 when j is among i's k_nn most similar.
  std::vector<std::uint8_t> selected(n * n, 0);
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < nn; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::vector<std::size_t> order;
    order.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_nn), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (sim(i, a) != sim(i, b)) return sim(i, a) > sim(i, b);
                        return a < b;
                      });
    for (std::size_t t = 0; t < k_nn; ++t) selected[i * n + order[t]] = 1;
  }

  SimilarityGraph g;
  g.vertices.assign(vertex_ids.begin(), vertex_ids.end());
  g.weights = Matrix(n, n);
  g.degrees.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool a = selected[i * n + j] != 0;
      const bool b = selected[j * n + i] != 0;
      const bool keep = symmetrization == KnnSymmetrization::either ? (a || b) : (a && b);
      if (!keep) continue;
      const double w = std::max(0.0, sim(i, j));
      g.weights(i, j) = w;
      g.weights(j, i) = w;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (double w : g.weights.row(i)) d += w;
    g.degrees[i] = d;
  }
  return g;
}

SimilarityGraph knn_graph(const ActivityProfileMatrix& profiles, std::size_t k_nn,
                          KnnSymmetrization symmetrization) {
  const auto cells = profiles.usable_cells();
  return knn_graph(select_rows(profiles.values, cells), cells, k_nn, symmetrization);
}

Matrix laplacian(const SimilarityGraph& graph, bool normalized) {
  const std::size_t n = graph.weights.rows();
  Matrix l(n, n);
  if (!normalized) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) l(i, j) = -graph.weights(i, j);
      l(i, i) = graph.degrees[i] - graph.weights(i, i);
    }
    return l;
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(graph.degrees[i] > 0.0))
      throw NumericError("normalized Laplacian undefined: vertex " + std::to_string(i) +
                         " has zero degree");
    inv_sqrt[i] = 1.0 / std::sqrt(graph.degrees[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) l(i, j) = -graph.weights(i, j) * (inv_sqrt[i] * inv_sqrt[j]);
    l(i, i) += 1.0;
  }
  return l;
}

std::size_t connected_components(const Matrix& weights) {
  const std::size_t n = weights.rows();
  std::vector<std::uint8_t> seen(n, 0);
  std::size_t components = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++components;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v) {
        if (!seen[v] && weights(u, v) > 0.0) {
          seen[v] = 1;
          q.push(v);
        }
      }
    }
  }
  return components;
}

EigengapChoice eigengap_k(std::span<const double> eigenvalues, std::size_t k_max) {
  if (k_max < 1) throw ConfigError("k_max must be >= 1");
  if (eigenvalues.size() < k_max + 1)
    throw DataError("eigengap needs at least k_max + 1 eigenvalues");
  EigengapChoice choice;
  std::size_t best = 1;
  for (std::size_t i = 1; i <= k_max; ++i) {
    const double gap = eigenvalues[i] - eigenvalues[i - 1];
    choice.gaps.push_back(gap);
    if (gap > choice.gaps[best - 1]) best = i;
  }
  choice.k = std::max<std::size_t>(best, 2);
  choice.clamped = best < 2;
  return choice;
}

namespace {

std::size_t distinct_rows(const Matrix& points) {
  std::vector<std::size_t> idx(points.rows());
  std::iota(idx.begin(), idx.end(), 0);
  const auto less = [&](std::size_t a, std::size_t b) {
    const auto ra = points.row(a), rb = points.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t distinct = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (less(idx[i - 1], idx[i])) ++distinct;
  return distinct;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Matrix kmeans_pp_init(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(rng() % n);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = first;
    if (c > 0) {
      double total = 0.0;
      for (double d : d2) total += d;
      if (total > 0.0) {
        const double target = uniform01(rng) * total;
        double acc = 0.0;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (d2[i] <= 0.0) continue;
          acc += d2[i];
          pick = i;
          if (acc > target) break;
        }
      }
    }
    const auto src = points.row(pick);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
  }
  return centroids;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iterations) {
  const std::size_t n = points.rows();
  const std::size_t k = centroids.rows();
  const std::size_t dim = points.cols();
  KMeansResult r;
  r.labels.assign(n, 0);
  std::vector<double> d2(n);
  std::vector<std::size_t> previous;
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    kernels::omp::assign_nearest(points, centroids, r.labels, d2);
    double inertia = 0.0;
    for (double d : d2) inertia += d;
    r.inertia_trace.push_back(inertia);
    r.iterations = iter + 1;
    if (r.labels == previous) break;
    previous = r.labels;

    Matrix sums(k, dim);
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(r.labels[i]);
      const auto p = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) s[j] += p[j];
      ++sizes[r.labels[i]];
    }
    std::vector<std::uint8_t> taken(n, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) {
        for (std::size_t j = 0; j < dim; ++j)
          centroids(c, j) = sums(c, j) / static_cast<double>(sizes[c]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its centroid.
      std::size_t far = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && d2[i] > best) {
          best = d2[i];
          far = i;
        }
      }
      taken[far] = 1;
      d2[far] = 0.0;
      const auto src = points.row(far);
      std::copy(src.begin(), src.end(), centroids.row(c).begin());
    }
  }
  r.inertia = r.inertia_trace.back();
  r.centroids = std::move(centroids);
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t restarts,
                    std::size_t max_iterations) {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (k > points.rows())
    throw DataError("k = " + std::to_string(k) + " exceeds the number of points");
  if (k > distinct_rows(points))
    throw DataError("k = " + std::to_string(k) + " exceeds the number of distinct points");
  std::mt19937_64 rng(seed);
  KMeansResult best;
  bool have = false;
  for (std::size_t run = 0; run < std::max<std::size_t>(restarts, 1); ++run) {
    KMeansResult r = lloyd(points, kmeans_pp_init(points, k, rng), std::max<std::size_t>(max_iterations, 1));
    if (!have || r.inertia < best.inertia) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

ClusterModel spectral_cluster_rows(const Matrix& rows, std::span<const std::size_t> vertex_ids,
                                   std::size_t label_count, const SpectralOptions& options) {
  std::vector<std::size_t> ids(vertex_ids.begin(), vertex_ids.end());
  Matrix data = rows;
  ClusterModel model;
  SimilarityGraph graph;
  // Drop zero-degree vertices until the normalized Laplacian is defined.
  while (true) {
    graph = knn_graph(data, ids, options.k_nn, options.symmetrization);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (graph.degrees[i] > 0.0) keep.push_back(i);
      else model.isolated.push_back(ids[i]);
    }
    if (keep.size() == ids.size()) break;
    data = select_rows(data, keep);
    std::vector<std::size_t> kept_ids;
    for (std::size_t i : keep) kept_ids.push_back(ids[i]);
    ids = std::move(kept_ids);
  }
  std::sort(model.isolated.begin(), model.isolated.end());

  const std::size_t n = ids.size();
  const std::size_t k_max = std::min(options.k_max, n - 1);
  if (options.k_override && (*options.k_override < 2 || *options.k_override > n))
    throw ConfigError("k_override must lie in [2, number of cells]");
  const std::size_t r = std::max(k_max + 1, options.k_override.value_or(0));
  const Spectrum spectrum = sym_eig(laplacian(graph, true), std::min(r, n));
  model.eigenvalues = spectrum.eigenvalues;
  const EigengapChoice choice = eigengap_k(spectrum.eigenvalues, k_max);
  model.eigengaps = choice.gaps;
  if (options.k_override) {
    model.k = *options.k_override;
  } else {
    model.k = choice.k;
    model.k_clamped = choice.clamped;
  }

  Matrix embedding(n, model.k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < model.k; ++j) embedding(i, j) = spectrum.eigenvectors(i, j);
    if (options.normalize_embedding) {
      const double len = norm(embedding.row(i));
      if (len > 0.0)
        for (double& v : embedding.row(i)) v /= len;
    }
  }
  const KMeansResult km = kmeans(embedding, model.k, options.seed, options.restarts);
  model.centroids = km.centroids;
  model.labels.assign(label_count, -1);
  for (std::size_t i = 0; i < n; ++i) model.labels[ids[i]] = static_cast<int>(km.labels[i]);
  return model;
}

ClusterModel spectral_cluster(const ActivityProfileMatrix& profiles, const SpectralOptions& options) {
  const auto cells = profiles.usable_cells();
  return spectral_cluster_rows(select_rows(profiles.values, cells), cells, profiles.values.rows(),
                               options);
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("labelings differ in length");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ca, cb;
  double n = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) continue;
    joint[{a[i], b[i]}] += 1.0;
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    n += 1.0;
  }
  const auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [key, c] : joint) index += pairs(c);
  for (const auto& [key, c] : ca) sa += pairs(c);
  for (const auto& [key, c] : cb) sb += pairs(c);
  const double total = pairs(n);
  if (total == 0.0) return 1.0;
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;  // both labelings trivial
  return (index - expected) / (max_index - expected);
}

void write_clusters_csv(std::ostream& out, const ClusterModel& model) {
  out << "cell_id,cluster\n";
  for (std::size_t l = 0; l < model.labels.size(); ++l)
    if (model.labels[l] >= 0) out << l << ',' << model.labels[l] << '\n';
}

std::vector<int> read_clusters_csv(std::istream& in, std::size_t cell_count) {
  std::string line;
  if (!csv::read_line(in, line) || line != "cell_id,cluster")
    throw DataError("clusters CSV row 1: expected header 'cell_id,cluster'");
  std::vector<int> labels(cell_count, -1);
  std::size_t row = 1;
  while (csv::read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    const auto cell = f.size() == 2 ? csv::parse_int(f[0]) : std::nullopt;
    const auto label = f.size() == 2 ? csv::parse_int(f[1]) : std::nullopt;
    if (!cell || !label || *cell < 0 || static_cast<std::size_t>(*cell) >= cell_count || *label < 0)
      throw DataError("clusters CSV row " + std::to_string(row) + ": invalid entry");
    labels[static_cast<std::size_t>(*cell)] = static_cast<int>(*label);
  }
  return labels;
}

void write_spectrum_csv(std::ostream& out, const ClusterModel& model) {
  out << "i,lambda,gap\n";
  for (std::size_t i = 0; i < model.eigenvalues.size(); ++i) {
    out << (i + 1) << ',' << csv::format_double(model.eigenvalues[i]) << ',';
    if (i < model.eigengaps.size()) out << csv::format_double(model.eigengaps[i]);
    out << '\n';
  }
}

void write_clusters_geojson(std::ostream& out, const Grid& grid, std::span<const int> labels) {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < labels.size(); ++l) {
    if (labels[l] < 0) continue;
    nlohmann::ordered_json ring = nlohmann::ordered_json::array();
    for (const LonLat& p : grid.cell_ring(CellId{l})) ring.push_back({p.lon, p.lat});
    features.push_back({{"type", "Feature"},
                        {"properties", {{"cell_id", l}, {"cluster", labels[l]}}},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}});
  }
  nlohmann::ordered_json doc = {{"type", "FeatureCollection"}, {"features", features}};
  out << doc.dump() << '\n';
}

}  // namespace urbanprof
