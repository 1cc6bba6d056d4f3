#pragma once

#include <cstddef>
#include <vector>

#include "urbanprof/matrix.hpp"

namespace urbanprof {

/// Eigenvalues of a symmetric matrix in ascending order, with the
/// eigenvectors of the first `vectors.cols()` of them as orthonormal columns.
struct Spectrum {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
};

/// Dense symmetric eigensolver: Householder tridiagonalization followed by
/// implicit-shift QL iteration. Returns all eigenvalues and the first `r`
/// eigenvectors. Every returned pair satisfies
/// ||M v - lambda v|| <= tol * ||M||_2, otherwise NumericError is thrown.
/// Throws DataError if `m` is not square or not symmetric within 1e-12
/// (relative to its largest entry).
Spectrum sym_eig(const Matrix& m, std::size_t r, double tol = 1e-8);

/// M^{-1/2} of a symmetric positive definite matrix. Throws NumericError if
/// any eigenvalue is not strictly positive.
Matrix inverse_sqrt_spd(const Matrix& m);

}  // namespace urbanprof
