#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace testsupport {

urbanprof::Matrix to_matrix(const Mat& m) {
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m[0].size() : 0;
  urbanprof::Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out(i, j) = m[i][j];
  return out;
}

Mat from_matrix(const urbanprof::Matrix& m) {
  Mat out(m.rows(), Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

double Gen::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double Gen::normal(double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

std::size_t Gen::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

int Gen::integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Mat Gen::symmetric(std::size_t n, double scale) {
  Mat a(n, Vec(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) a[i][j] = a[j][i] = scale * uniform(-1.0, 1.0);
  return a;
}

Mat Gen::gaussian(std::size_t rows, std::size_t cols) {
  Mat a(rows, Vec(cols));
  for (auto& r : a)
    for (auto& v : r) v = normal();
  return a;
}

Mat Gen::uniform_box(std::size_t rows, std::size_t cols, double lo, double hi) {
  Mat a(rows, Vec(cols));
  for (auto& r : a)
    for (auto& v : r) v = uniform(lo, hi);
  return a;
}

JacobiResult jacobi_eigen(const Mat& input) {
  Mat a = input;
  const std::size_t n = a.size();
  Mat v(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  double total = 0.0;
  for (const auto& r : a)
    for (double x : r) total += x * x;

  JacobiResult res;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off <= 1e-34 * total || off == 0.0) break;
    res.sweeps = sweep + 1;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = tau >= 0.0 ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                    : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double kp = a[k][p], kq = a[k][q];
          a[k][p] = c * kp - s * kq;
          a[k][q] = s * kp + c * kq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double pk = a[p][k], qk = a[q][k];
          a[p][k] = c * pk - s * qk;
          a[q][k] = s * pk + c * qk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double kp = v[k][p], kq = v[k][q];
          v[k][p] = c * kp - s * kq;
          v[k][q] = s * kp + c * kq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i][i] < a[j][j]; });
  for (std::size_t i : order) {
    res.values.push_back(a[i][i]);
    Vec col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    res.vectors.push_back(std::move(col));
  }
  return res;
}

std::size_t component_count(const Mat& w) {
  const std::size_t n = w.size();
  std::vector<bool> seen(n, false);
  std::size_t comps = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    ++comps;
    std::queue<std::size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v) {
        if (!seen[v] && (w[u][v] > 0.0 || w[v][u] > 0.0)) {
          seen[v] = true;
          q.push(v);
        }
      }
    }
  }
  return comps;
}

double pearson_naive(const Vec& a, const Vec& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::pair<double, double> mean_sd(const Vec& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

namespace {

Vec project(const Mat& m, double angle) {
  Vec out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    out[i] = std::cos(angle) * m[i][0] + std::sin(angle) * m[i][1];
  return out;
}

double abs_corr(const Mat& x, const Mat& y, double a, double b) {
  return std::abs(pearson_naive(project(x, a), project(y, b)));
}

// Angle of the direction d with d' C u = 0 for the sample covariance C.
double complement_angle(const Mat& m, double angle) {
  double m0 = 0.0, m1 = 0.0;
  for (const auto& r : m) {
    m0 += r[0];
    m1 += r[1];
  }
  m0 /= static_cast<double>(m.size());
  m1 /= static_cast<double>(m.size());
  double c00 = 0.0, c01 = 0.0, c11 = 0.0;
  for (const auto& r : m) {
    c00 += (r[0] - m0) * (r[0] - m0);
    c01 += (r[0] - m0) * (r[1] - m1);
    c11 += (r[1] - m1) * (r[1] - m1);
  }
  const double u0 = std::cos(angle), u1 = std::sin(angle);
  const double g0 = c00 * u0 + c01 * u1;
  const double g1 = c01 * u0 + c11 * u1;
  return std::atan2(g0, -g1);  // direction perpendicular to C u
}

}  // namespace

BruteCca brute_cca_2x2(const Mat& x, const Mat& y) {
  const double pi = std::acos(-1.0);
  double best = -1.0, ba = 0.0, bb = 0.0;
  const int steps = 360;
  for (int i = 0; i < steps; ++i) {
    for (int j = 0; j < steps; ++j) {
      const double a = pi * i / steps, b = pi * j / steps;
      const double c = abs_corr(x, y, a, b);
      if (c > best) {
        best = c;
        ba = a;
        bb = b;
      }
    }
  }
  // Compass search around the best grid point.
  for (double h = pi / steps; h > 1e-10; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (const auto& [da, db] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}) {
        const double c = abs_corr(x, y, ba + da, bb + db);
        if (c > best) {
          best = c;
          ba += da;
          bb += db;
          moved = true;
        }
      }
    }
  }
  BruteCca out;
  out.rho1 = best;
  out.rho2 = abs_corr(x, y, complement_angle(x, ba), complement_angle(y, bb));
  return out;
}

Mat brute_profiles(const BruteGrid& g, const std::vector<LocalPoi>& pois,
                   const std::map<std::string, std::vector<std::pair<std::size_t, double>>>& shares,
                   unsigned h, double step, double cap) {
  const std::size_t n = g.cols * g.rows;
  std::vector<std::map<std::string, double>> counts(n);
  for (const auto& p : pois) {
    const auto col = static_cast<std::size_t>(std::floor(p.x / g.w));
    const auto row = static_cast<std::size_t>(std::floor(p.y / g.h));
    if (col >= g.cols || row >= g.rows) throw std::logic_error("fixture POI outside grid");
    counts[row * g.cols + col][p.feature] += 1.0;
  }
  std::map<std::string, double> df;
  double occupied = 0.0;
  for (const auto& c : counts) {
    if (!c.empty()) occupied += 1.0;
    for (const auto& [f, k] : c) df[f] += 1.0;
  }

  // tf-idf weight of each feature in each cell.
  std::vector<std::map<std::string, double>> weight(n);
  for (std::size_t l = 0; l < n; ++l) {
    double mx = 0.0;
    for (const auto& [f, k] : counts[l]) mx = std::max(mx, k);
    for (const auto& [f, k] : counts[l]) weight[l][f] = (k / mx) * std::log(occupied / df[f]);
  }

  Mat a(n, Vec(10, 0.0));
  for (std::size_t l = 0; l < n; ++l) {
    const double cx = (static_cast<double>(l % g.cols) + 0.5) * g.w;
    const double cy = (static_cast<double>(l / g.cols) + 0.5) * g.h;
    std::vector<std::size_t> members;
    for (int k = 0;; ++k) {
      const double r = std::min(k * step, cap);
      members.clear();
      double total = 0.0;
      for (std::size_t m = 0; m < n; ++m) {
        const double x0 = static_cast<double>(m % g.cols) * g.w;
        const double y0 = static_cast<double>(m / g.cols) * g.h;
        const double dx = std::max({x0 - cx, 0.0, cx - (x0 + g.w)});
        const double dy = std::max({y0 - cy, 0.0, cy - (y0 + g.h)});
        if (std::sqrt(dx * dx + dy * dy) <= r) {
          members.push_back(m);
          for (const auto& [f, c] : counts[m]) total += c;
        }
      }
      if (total >= h || r >= cap) break;
    }
    for (std::size_t m : members)
      for (const auto& [f, w] : weight[m])
        for (const auto& [cat, s] : shares.at(f)) a[l][cat] += w * s;
  }
  return a;
}

BruteGrid tfidf_fixture_grid() { return {100.0, 100.0, 3, 3}; }

std::vector<LocalPoi> tfidf_fixture_pois() {
  const std::vector<std::pair<std::size_t, std::vector<std::string>>> cells = {
      {0, {"amenity:restaurant", "amenity:restaurant", "amenity:restaurant", "amenity:school"}},
      {1, {"amenity:restaurant", "office:company", "office:company"}},
      {3, {"amenity:cafe", "amenity:cafe", "shop:supermarket"}},
      {4, {"amenity:restaurant", "amenity:school", "office:company", "leisure:park", "amenity:bar"}},
      {6, {"leisure:park", "leisure:park"}},
      {7, {"amenity:bar", "shop:supermarket"}},
      {8, {"amenity:restaurant"}},
  };
  std::vector<LocalPoi> out;
  for (const auto& [cell, feats] : cells) {
    for (std::size_t k = 0; k < feats.size(); ++k) {
      const double x = static_cast<double>(cell % 3) * 100.0 + 12.0 + 15.0 * static_cast<double>(k);
      const double y = static_cast<double>(cell / 3) * 100.0 + 80.0 - 13.0 * static_cast<double>(k);
      out.push_back({x, y, feats[k]});
    }
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("urbanprof_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
