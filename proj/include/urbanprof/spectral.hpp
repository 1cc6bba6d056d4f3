#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "urbanprof/activity_profiles.hpp"
#include "urbanprof/geo_grid.hpp"
#include "urbanprof/linalg.hpp"
#include "urbanprof/matrix.hpp"

namespace urbanprof {

/// Cosine of the angle between u and v. Throws DataError for zero vectors.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

enum class KnnSymmetrization {
  either,  ///< keep i-j if either endpoint selects the other
  mutual,  ///< keep i-j only if both select each other
};

/// Weighted kNN similarity graph over a subset of cells.
struct SimilarityGraph {
  std::vector<std::size_t> vertices;  ///< cell id of each vertex
  Matrix weights;                     ///< symmetric, zero diagonal
  std::vector<double> degrees;
};

/// kNN graph over the rows of `rows` (vertex i is cell `vertex_ids[i]`).
/// Neighbors are ranked by cosine similarity, ties by lower index.
SimilarityGraph knn_graph(const Matrix& rows, std::span<const std::size_t> vertex_ids,
                          std::size_t k_nn,
                          KnnSymmetrization symmetrization = KnnSymmetrization::either);

/// Graph over the usable (non-empty, non-zero) rows of the profile matrix.
SimilarityGraph knn_graph(const ActivityProfileMatrix& profiles, std::size_t k_nn,
                          KnnSymmetrization symmetrization = KnnSymmetrization::either);

/// D - W, or I - D^{-1/2} W D^{-1/2} when `normalized`. The normalized form
/// throws NumericError on a zero-degree vertex.
Matrix laplacian(const SimilarityGraph& graph, bool normalized);

/// Number of connected components of the graph (edges with weight > 0).
std::size_t connected_components(const Matrix& weights);

struct EigengapChoice {
  std::size_t k = 2;
  bool clamped = false;       ///< raw argmax was 1 and got raised to 2
  std::vector<double> gaps;   ///< gaps[i-1] = lambda_{i+1} - lambda_i, i = 1..k_max
};

/// k = argmax_{i in [1, k_max]} (lambda_{i+1} - lambda_i) with 1-based
/// ascending eigenvalues; ties pick the smaller i; result clamped to >= 2.
EigengapChoice eigengap_k(std::span<const double> eigenvalues, std::size_t k_max);

struct KMeansResult {
  std::vector<std::size_t> labels;
  Matrix centroids;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  ///< per Lloyd iteration of the best restart
  std::size_t iterations = 0;
};

/// Lloyd's algorithm from k-means++ seeds; best inertia over `restarts`.
/// Deterministic for a given seed. Throws DataError if k exceeds the number
/// of distinct points.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t restarts = 10, std::size_t max_iterations = 300);

struct SpectralOptions {
  std::size_t k_nn = 10;
  std::optional<std::size_t> k_override;
  std::size_t k_max = 20;
  std::uint64_t seed = 42;
  std::size_t restarts = 10;
  bool normalize_embedding = true;
  KnnSymmetrization symmetrization = KnnSymmetrization::either;
};

struct ClusterModel {
  std::size_t k = 0;
  std::vector<int> labels;             ///< per cell; -1 for unlabeled cells
  Matrix centroids;                    ///< k x k in embedding space
  std::vector<double> eigenvalues;     ///< ascending, all of them
  std::vector<double> eigengaps;       ///< lambda_{i+1} - lambda_i for i = 1..k_max
  bool k_clamped = false;
  std::vector<std::size_t> isolated;   ///< usable cells dropped for zero degree
};

/// kNN graph -> normalized Laplacian -> eigengap (unless overridden) ->
/// optionally row-normalized spectral embedding -> k-means.
ClusterModel spectral_cluster(const ActivityProfileMatrix& profiles, const SpectralOptions& options);

/// Same pipeline on arbitrary rows; `vertex_ids` map rows to label slots in
/// a label vector of length `label_count`.
ClusterModel spectral_cluster_rows(const Matrix& rows, std::span<const std::size_t> vertex_ids,
                                   std::size_t label_count, const SpectralOptions& options);

/// Adjusted Rand index between two labelings of the same items. Items with a
/// negative label in either labeling are ignored.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

void write_clusters_csv(std::ostream& out, const ClusterModel& model);
/// Reads `cell_id,cluster`; cells absent from the file are -1.
std::vector<int> read_clusters_csv(std::istream& in, std::size_t cell_count);
void write_spectrum_csv(std::ostream& out, const ClusterModel& model);
/// FeatureCollection with one polygon per labeled cell, property `cluster`.
void write_clusters_geojson(std::ostream& out, const Grid& grid, std::span<const int> labels);

}  // namespace urbanprof
