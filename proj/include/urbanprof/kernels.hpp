#pragma once

// Data-parallel hot loops. Every kernel exists twice: `serial` is the
// reference used by tests, `omp` is what the library calls. Both evaluate
// each output element with the same arithmetic in the same order, so their
// results are bit-identical for any thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "urbanprof/matrix.hpp"

namespace urbanprof::kernels {

namespace serial {

/// Pairwise cosine similarity of the rows; rows must have non-zero norm.
/// Diagonal is exactly 1.
Matrix cosine_similarity_matrix(const Matrix& rows);

/// For each point, index of the nearest centroid (lowest index on ties) and
/// the squared distance to it.
void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> labels, std::span<double> sq_dist);

/// Euclidean distance from each query row to its nearest data row. Entry
/// `exclude[i]` names a data row to skip for query i (negative: none).
std::vector<double> nearest_neighbor_distances(const Matrix& data, const Matrix& queries,
                                               std::span<const std::ptrdiff_t> exclude);

/// out.row(i) = sum over j in members[i] of rows.row(j), summed in the
/// listed order.
Matrix sum_member_rows(const Matrix& rows, const std::vector<std::vector<std::size_t>>& members);

}  // namespace serial

namespace omp {

Matrix cosine_similarity_matrix(const Matrix& rows);
void assign_nearest(const Matrix& points, const Matrix& centroids,
                    std::span<std::size_t> labels, std::span<double> sq_dist);
std::vector<double> nearest_neighbor_distances(const Matrix& data, const Matrix& queries,
                                               std::span<const std::ptrdiff_t> exclude);
Matrix sum_member_rows(const Matrix& rows, const std::vector<std::vector<std::size_t>>& members);

}  // namespace omp

}  // namespace urbanprof::kernels
