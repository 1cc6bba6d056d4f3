#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/linalg.hpp"

using namespace urbanprof;
using testsupport::Mat;

namespace {

double residual(const Matrix& m, const Spectrum& s, std::size_t j) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double mv = 0.0;
    for (std::size_t k = 0; k < m.cols(); ++k) mv += m(i, k) * s.eigenvectors(k, j);
    const double d = mv - s.eigenvalues[j] * s.eigenvectors(i, j);
    r += d * d;
  }
  return std::sqrt(r);
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("identity: all eigenvalues 1, orthonormal vectors") {
  auto s = sym_eig(Matrix::identity(5), 5);
  for (double l : s.eigenvalues) CHECK(l == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) {
      double d = 0.0;
      for (std::size_t i = 0; i < 5; ++i) d += s.eigenvectors(i, a) * s.eigenvectors(i, b);
      CHECK(d == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("diag(3,1,2) sorts to (1,2,3) with axis vectors") {
  Matrix m(3, 3);
  m(0, 0) = 3;
  m(1, 1) = 1;
  m(2, 2) = 2;
  auto s = sym_eig(m, 3);
  CHECK(s.eigenvalues == std::vector<double>{1, 2, 3});
  CHECK(std::abs(s.eigenvectors(1, 0)) == 1.0);
  CHECK(std::abs(s.eigenvectors(2, 1)) == 1.0);
  CHECK(std::abs(s.eigenvectors(0, 2)) == 1.0);
}

TEST_CASE("random 8x8 matches the Jacobi oracle") {
  testsupport::Gen gen(51);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = gen.symmetric(8);
    const Matrix m = testsupport::to_matrix(a);
    auto s = sym_eig(m, 8);
    auto o = testsupport::jacobi_eigen(a);
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(std::abs(s.eigenvalues[j] - o.values[j]) <= 1e-8);
      double d = 0.0;
      for (std::size_t i = 0; i < 8; ++i) d += s.eigenvectors(i, j) * o.vectors[j][i];
      CHECK(std::abs(std::abs(d) - 1.0) <= 1e-8);
    }
  }
}

TEST_CASE("partial vector request returns the lowest pairs") {
  testsupport::Gen gen(52);
  const Matrix m = testsupport::to_matrix(gen.symmetric(20, 3.0));
  auto s = sym_eig(m, 4);
  CHECK(s.eigenvalues.size() == 20);
  CHECK(s.eigenvectors.cols() == 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(residual(m, s, j) <= 1e-10);
}

TEST_CASE("degenerate spectra still give orthonormal vectors") {
  // Block with a triple eigenvalue.
  Matrix m(6, 6);
  for (std::size_t i = 0; i < 3; ++i) m(i, i) = 2.0;
  m(3, 3) = 1.0;
  m(4, 4) = m(5, 5) = 5.0;
  m(4, 5) = m(5, 4) = 1.0;
  auto s = sym_eig(m, 6);
  for (std::size_t a = 0; a < 6; ++a) {
    CHECK(residual(m, s, a) <= 1e-12);
    for (std::size_t b = 0; b < 6; ++b) {
      double d = 0.0;
      for (std::size_t i = 0; i < 6; ++i) d += s.eigenvectors(i, a) * s.eigenvectors(i, b);
      CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) <= 1e-10);
    }
  }
}

TEST_CASE("input validation") {
  Matrix rect(2, 3);
  CHECK_THROWS_AS(sym_eig(rect, 1), DataError);
  Matrix asym = Matrix::identity(3);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(sym_eig(asym, 1), DataError);
  Matrix bad = Matrix::identity(2);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(sym_eig(bad, 1), NumericError);
  CHECK(sym_eig(Matrix(0, 0), 0).eigenvalues.empty());
}

TEST_CASE("inverse square root of an SPD matrix") {
  testsupport::Gen gen(53);
  const Mat g = gen.gaussian(30, 4);
  Matrix c(4, 4);
  for (const auto& r : g)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) c(i, j) += r[i] * r[j];
  auto w = inverse_sqrt_spd(c);
  auto wcw = multiply(multiply(w, c), w);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(wcw(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-10);
  Matrix singular(2, 2, 1.0);
  CHECK_THROWS_AS(inverse_sqrt_spd(singular), NumericError);
}

TEST_CASE("property: eigenpairs of random sizes satisfy the residual bound") {
  testsupport::Gen gen(54);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + gen.index(40);
    const Matrix m = testsupport::to_matrix(gen.symmetric(n, std::exp(gen.uniform(-5, 5))));
    auto s = sym_eig(m, n);
    auto o = testsupport::jacobi_eigen(testsupport::from_matrix(m));
    const double norm2 = std::max(std::abs(o.values.front()), std::abs(o.values.back()));
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(residual(m, s, j) <= 1e-8 * norm2);
      CHECK(std::abs(s.eigenvalues[j] - o.values[j]) <= 1e-10 * std::max(1.0, norm2));
      if (j) CHECK(s.eigenvalues[j - 1] <= s.eigenvalues[j]);
    }
  }
}

TEST_CASE("matrix helpers") {
  Matrix a(2, 3);
  a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
  a(1, 0) = 4; a(1, 1) = 5; a(1, 2) = 6;
  auto at = transpose(a);
  CHECK(at(2, 1) == 6);
  auto ata = multiply_at_b(a, a);
  CHECK(ata == multiply(at, a));
  CHECK(ata(0, 0) == 17);
  CHECK(max_abs(a) == 6);
  CHECK(frobenius_norm(a) == doctest::Approx(std::sqrt(91.0)));
  const std::size_t rows[] = {1, 1};
  auto sel = select_rows(a, rows);
  CHECK(sel.rows() == 2);
  CHECK(sel(1, 2) == 6);
  CHECK_THROWS_AS(multiply(a, a), DataError);
}

}
