#include "urbanprof/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "urbanprof/errors.hpp"

namespace urbanprof {

// --- Matrix helpers ---------------------------------------------------------

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DataError("matrix dimension mismatch in multiply");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DataError("matrix dimension mismatch in multiply_at_b");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto arow = a.row(k);
    const auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      auto out = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += arow[i] * brow[j];
    }
  }
  return c;
}

Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = a.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double frobenius_norm(const Matrix& a) { return norm(a.data()); }

// --- Symmetric eigensolver --------------------------------------------------

namespace {

constexpr std::size_t kParallelMin = 256;

struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples i and i+1; off[n-1] = 0
  // Householder vectors; reflector k acts on indices k+1..n-1 and is stored
  // densely over those indices. Empty when the step was skipped.
  std::vector<std::vector<double>> reflectors;
};

Tridiagonal tridiagonalize(Matrix a) {
  const std::size_t n = a.rows();
  Tridiagonal t;
  t.reflectors.resize(n > 2 ? n - 2 : 0);
  std::vector<double> p(n), w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    double tail = 0.0;
    for (std::size_t i = k + 2; i < n; ++i) tail += a(k, i) * a(k, i);
    if (tail == 0.0) continue;  // column already reduced
    const double x0 = a(k, k + 1);
    const double sigma = std::sqrt(x0 * x0 + tail);
    const double alpha = x0 >= 0.0 ? -sigma : sigma;
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = a(k, k + 1 + i);
    v[0] -= alpha;
    const double vn = norm(v);
    for (double& x : v) x /= vn;

    const auto mm = static_cast<std::ptrdiff_t>(m);
    // p = B v over the trailing block B = a[k+1.., k+1..].
#pragma omp parallel for schedule(static) if (m >= kParallelMin)
    for (std::ptrdiff_t ii = 0; ii < mm; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const double* row = &a(k + 1 + i, k + 1);
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += row[j] * v[j];
      p[i] = s;
    }
    double gamma = 0.0;
    for (std::size_t i = 0; i < m; ++i) gamma += v[i] * p[i];
    for (std::size_t i = 0; i < m; ++i) w[i] = p[i] - gamma * v[i];
    // B <- B - 2 (v w^T + w v^T)
#pragma omp parallel for schedule(static) if (m >= kParallelMin)
    for (std::ptrdiff_t ii = 0; ii < mm; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      double* row = &a(k + 1 + i, k + 1);
      for (std::size_t j = 0; j < m; ++j) row[j] -= 2.0 * (v[i] * w[j] + w[i] * v[j]);
    }
    a(k, k + 1) = alpha;
    a(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) {
      a(k, i) = 0.0;
      a(i, k) = 0.0;
    }
    t.reflectors[k] = std::move(v);
  }
  t.diag.resize(n);
  t.off.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    t.diag[i] = a(i, i);
    if (i + 1 < n) t.off[i] = a(i, i + 1);
  }
  return t;
}

// Implicit-shift QL on the tridiagonal. Row i of `zt` accumulates the i-th
// eigenvector of the tridiagonal matrix.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, Matrix& zt) {
  const std::size_t n = d.size();
  constexpr int kMaxIterations = 60;
  const double eps = std::numeric_limits<double>::epsilon();
  const auto nn = static_cast<std::ptrdiff_t>(n);
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    while (true) {
      std::size_t m = l;
      for (; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > kMaxIterations)
        throw NumericError("symmetric eigensolver did not converge (eigenvalue " +
                           std::to_string(l) + ")");
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool deflated = false;
      for (std::size_t i = m; i-- > l;) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        double* zi = &zt(i, 0);
        double* zi1 = &zt(i + 1, 0);
#pragma omp parallel for schedule(static) if (n >= 4 * kParallelMin)
        for (std::ptrdiff_t k = 0; k < nn; ++k) {
          const double t = zi1[k];
          zi1[k] = s * zi[k] + c * t;
          zi[k] = c * zi[k] - s * t;
        }
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }
}

}  // namespace

Spectrum sym_eig(const Matrix& m, std::size_t r, double tol) {
  if (m.rows() != m.cols()) throw DataError("sym_eig requires a square matrix");
  const std::size_t n = m.rows();
  r = std::min(r, n);
  const double scale = std::max(1.0, max_abs(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale)
        throw DataError("sym_eig requires a symmetric matrix");
  for (double v : m.data())
    if (!std::isfinite(v)) throw NumericError("sym_eig input contains non-finite values");

  Spectrum out;
  if (n == 0) return out;

  Tridiagonal t = tridiagonalize(m);
  Matrix zt = Matrix::identity(n);
  tridiagonal_ql(t.diag, t.off, zt);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t.diag[a] < t.diag[b]; });
  out.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.eigenvalues[i] = t.diag[order[i]];

  // Back-transform the requested vectors: v = H_0 H_1 ... H_{n-3} y.
  out.eigenvectors = Matrix(n, r);
  const auto rr = static_cast<std::ptrdiff_t>(r);
#pragma omp parallel for schedule(static) if (n >= kParallelMin)
  for (std::ptrdiff_t jj = 0; jj < rr; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    std::vector<double> y(zt.row(order[j]).begin(), zt.row(order[j]).end());
    for (std::size_t k = t.reflectors.size(); k-- > 0;) {
      const auto& v = t.reflectors[k];
      if (v.empty()) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * y[k + 1 + i];
      for (std::size_t i = 0; i < v.size(); ++i) y[k + 1 + i] -= 2.0 * s * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = y[i];
  }

  const double spectral_norm =
      std::max(std::abs(out.eigenvalues.front()), std::abs(out.eigenvalues.back()));
  const double bound = tol * std::max(spectral_norm, std::numeric_limits<double>::min());
  std::vector<double> mv(n);
  for (std::size_t j = 0; j < r; ++j) {
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += m(i, k) * out.eigenvectors(k, j);
      const double d = s - out.eigenvalues[j] * out.eigenvectors(i, j);
      res += d * d;
    }
    if (std::sqrt(res) > bound)
      throw NumericError("sym_eig residual " + std::to_string(std::sqrt(res)) +
                         " exceeds tolerance for eigenpair " + std::to_string(j));
  }
  return out;
}

Matrix inverse_sqrt_spd(const Matrix& m) {
  const std::size_t n = m.rows();
  Spectrum s = sym_eig(m, n);
  // Eigenvalues at rounding level of the largest one count as zero.
  double top = 0.0;
  for (double lambda : s.eigenvalues) top = std::max(top, std::abs(lambda));
  const double floor = top * static_cast<double>(n) * std::numeric_limits<double>::epsilon();
  for (double lambda : s.eigenvalues)
    if (!(lambda > floor)) throw NumericError("matrix is not positive definite");
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = 1.0 / std::sqrt(s.eigenvalues[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = s.eigenvectors(i, k) * f;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * s.eigenvectors(j, k);
    }
  }
  return out;
}

}  // namespace urbanprof
