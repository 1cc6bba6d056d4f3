#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/stats.hpp"

using namespace urbanprof;
using testsupport::Mat;

namespace {

Matrix two_blobs(testsupport::Gen& gen, std::size_t n) {
  Matrix m(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = i % 2 ? 10.0 : -10.0;
    m(i, 0) = cx + gen.normal(0, 0.1);
    m(i, 1) = gen.normal(0, 0.1);
  }
  return m;
}

Matrix linear_map(testsupport::Gen& gen, const Matrix& x, std::size_t q2, double noise) {
  Matrix b = testsupport::to_matrix(gen.gaussian(x.cols(), q2));
  Matrix y = multiply(x, b);
  for (double& v : y.data()) v += gen.normal(0, noise);
  return y;
}

Matrix random_orthogonal(testsupport::Gen& gen, std::size_t q) {
  // Gram-Schmidt on a Gaussian matrix.
  Mat a = gen.gaussian(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double d = 0;
      for (std::size_t k = 0; k < q; ++k) d += a[i][k] * a[j][k];
      for (std::size_t k = 0; k < q; ++k) a[i][k] -= d * a[j][k];
    }
    double nrm = 0;
    for (double v : a[i]) nrm += v * v;
    for (double& v : a[i]) v /= std::sqrt(nrm);
  }
  return testsupport::to_matrix(a);
}

}  // namespace

TEST_SUITE("stats_corr") {

TEST_CASE("Hopkins: two tight blobs are strongly clustered") {
  testsupport::Gen gen(71);
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto r = hopkins(two_blobs(gen, 400), 40, s);
    CHECK(r.h >= 0.0);
    CHECK(r.h <= 1.0);
    sum += r.h;
  }
  CHECK(sum / 20 < 0.1);
}

TEST_CASE("Hopkins: uniform data sits near one half") {
  testsupport::Gen gen(72);
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s)
    sum += hopkins(testsupport::to_matrix(gen.uniform_box(400, 2, 0, 1)), 40, s).h;
  CHECK(std::abs(sum / 20 - 0.5) < 0.1);
}

TEST_CASE("Hopkins: deterministic per seed, default m, errors") {
  testsupport::Gen gen(73);
  auto data = two_blobs(gen, 200);
  auto a = hopkins(data, 0, 5), b = hopkins(data, 0, 5);
  CHECK(a.h == b.h);
  CHECK(a.m == 20);
  CHECK(hopkins(data, 0, 6).h != a.h);
  CHECK_THROWS_AS(hopkins(Matrix(1, 2, 1.0), 1, 1), DataError);
  CHECK_THROWS_AS(hopkins(Matrix(10, 2, 1.0), 1, 1), DataError);
}

TEST_CASE("CCA: Y = X gives all ones") {
  testsupport::Gen gen(74);
  Matrix x = testsupport::to_matrix(gen.gaussian(100, 4));
  auto r = cca(x, x, 0.0);
  REQUIRE(r.correlations.size() == 4);
  for (double rho : r.correlations) CHECK(std::abs(rho - 1.0) <= 1e-9);
}

TEST_CASE("CCA: independent noise stays small, linear maps near one") {
  testsupport::Gen gen(75);
  Matrix x = testsupport::to_matrix(gen.gaussian(500, 5));
  Matrix y = testsupport::to_matrix(gen.gaussian(500, 5));
  CHECK(cca(x, y).correlations[0] <= 0.3);
  CHECK(cca(x, linear_map(gen, x, 3, 0.05)).correlations[0] >= 0.99);
}

TEST_CASE("CCA: 2x2 cases match the brute-force maximizer") {
  testsupport::Gen gen(76);
  for (int trial = 0; trial < 5; ++trial) {
    Mat x = gen.gaussian(150, 2), y(150, testsupport::Vec(2));
    const double a = gen.uniform(-1, 1), b = gen.uniform(-1, 1);
    for (std::size_t i = 0; i < 150; ++i) {
      y[i][0] = a * x[i][0] + gen.normal(0, 0.8);
      y[i][1] = b * x[i][1] + 0.5 * x[i][0] + gen.normal(0, 1.2);
    }
    auto got = cca(testsupport::to_matrix(x), testsupport::to_matrix(y), 0.0);
    auto want = testsupport::brute_cca_2x2(x, y);
    CHECK(std::abs(got.correlations[0] - want.rho1) <= 1e-3);
    CHECK(std::abs(got.correlations[1] - want.rho2) <= 1e-3);
  }
}

TEST_CASE("CCA: singular block with ridge 0 is a numeric error") {
  testsupport::Gen gen(77);
  Matrix x = testsupport::to_matrix(gen.gaussian(50, 3));
  for (std::size_t i = 0; i < 50; ++i) x(i, 2) = x(i, 0) + x(i, 1);
  Matrix y = testsupport::to_matrix(gen.gaussian(50, 2));
  CHECK_THROWS_AS(cca(x, y, 0.0), NumericError);
  CHECK_NOTHROW(cca(x, y));
  CHECK_THROWS_AS(cca(x, y, -1.0), ConfigError);
}

TEST_CASE("property: correlations sorted, clipped, bounded") {
  testsupport::Gen gen(78);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t q1 = 1 + gen.index(5), q2 = 1 + gen.index(5);
    Matrix x = testsupport::to_matrix(gen.gaussian(80, q1));
    Matrix y = gen.uniform() < 0.5 ? testsupport::to_matrix(gen.gaussian(80, q2)) : linear_map(gen, x, q2, 0.3);
    auto r = cca(x, y);
    CHECK(r.correlations.size() == std::min(q1, q2));
    for (std::size_t i = 0; i < r.correlations.size(); ++i) {
      CHECK(r.correlations[i] >= 0.0);
      CHECK(r.correlations[i] <= 1.0);
      if (i) CHECK(r.correlations[i] <= r.correlations[i - 1]);
    }
    CHECK(r.max_clip <= 1e-6);
  }
}

TEST_CASE("property: invariance under orthogonal maps (ridge) and affine maps (no ridge)") {
  testsupport::Gen gen(79);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x = testsupport::to_matrix(gen.gaussian(120, 3));
    Matrix y = linear_map(gen, x, 3, 1.0);
    auto base = cca(x, y);
    auto rot = cca(multiply(x, random_orthogonal(gen, 3)), multiply(y, random_orthogonal(gen, 3)));
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(base.correlations[i] - rot.correlations[i]) <= 1e-9);

    Matrix t = testsupport::to_matrix(gen.gaussian(3, 3));
    Matrix xa = multiply(x, t);
    for (std::size_t r = 0; r < xa.rows(); ++r) xa(r, 1) += 7.0;
    auto b0 = cca(x, y, 0.0), a0 = cca(xa, y, 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(b0.correlations[i] - a0.correlations[i]) <= 1e-8);
  }
}

TEST_CASE("CCA by cluster: one cluster equals global, duplicate rows give one") {
  testsupport::Gen gen(80);
  Matrix x = testsupport::to_matrix(gen.gaussian(90, 3));
  Matrix y = linear_map(gen, x, 2, 1.0);
  std::vector<int> one(90, 4);
  auto by = cca_by_cluster(x, y, one);
  REQUIRE(by.by_cluster.count(4));
  CHECK(by.by_cluster.at(4).correlations == cca(x, y).correlations);

  std::vector<int> labels(90);
  Matrix y2 = testsupport::to_matrix(gen.gaussian(90, 3));
  for (std::size_t i = 0; i < 90; ++i) {
    labels[i] = i < 45 ? 0 : 1;
    if (i < 45)
      for (std::size_t c = 0; c < 3; ++c) y2(i, c) = x(i, c);
  }
  labels[89] = -1;
  auto dup = cca_by_cluster(x, y2, labels);
  CHECK(dup.by_cluster.at(0).correlations[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(dup.by_cluster.at(1).correlations[0] < 0.9);
}

TEST_CASE("CCA by cluster: undersized clusters are skipped") {
  testsupport::Gen gen(81);
  Matrix x = testsupport::to_matrix(gen.gaussian(40, 3));
  Matrix y = testsupport::to_matrix(gen.gaussian(40, 3));
  std::vector<int> labels(40, 0);
  labels[0] = labels[1] = 7;
  auto r = cca_by_cluster(x, y, labels);
  CHECK(r.skipped == std::vector<int>{7});
  CHECK(r.by_cluster.count(0) == 1);
}

TEST_CASE("planted per-cluster noise ranks the leading correlations") {
  testsupport::Gen gen(82);
  const double noise[] = {0.1, 0.5, 1.0, 2.0};
  Matrix x(400, 3), y(400, 3);
  std::vector<int> labels(400);
  for (std::size_t c = 0; c < 4; ++c) {
    Matrix b = testsupport::to_matrix(gen.gaussian(3, 3));
    for (std::size_t k = 0; k < 100; ++k) {
      const std::size_t r = c * 100 + k;
      labels[r] = static_cast<int>(c);
      for (std::size_t j = 0; j < 3; ++j) x(r, j) = gen.normal();
      for (std::size_t j = 0; j < 3; ++j) {
        double v = 0;
        for (std::size_t i = 0; i < 3; ++i) v += x(r, i) * b(i, j);
        y(r, j) = v + gen.normal(0, noise[c]);
      }
    }
  }
  auto by = cca_by_cluster(x, y, labels);
  for (int c = 1; c < 4; ++c)
    CHECK(by.by_cluster.at(c).correlations[0] < by.by_cluster.at(c - 1).correlations[0]);
}

TEST_CASE("pearson: matches naive, symmetric, scale-free") {
  testsupport::Gen gen(83);
  for (int trial = 0; trial < 20; ++trial) {
    testsupport::Vec a(30), b(30);
    for (std::size_t i = 0; i < 30; ++i) {
      a[i] = gen.normal();
      b[i] = a[i] * gen.uniform(-1, 1) + gen.normal();
    }
    const double r = pearson(a, b);
    CHECK(r == doctest::Approx(testsupport::pearson_naive(a, b)).epsilon(1e-12));
    CHECK(pearson(b, a) == doctest::Approx(r).epsilon(1e-14));
    testsupport::Vec s = a;
    for (double& v : s) v *= 13.5;
    CHECK(pearson(s, b) == doctest::Approx(r).epsilon(1e-12));
  }
  const double c[] = {1, 1, 1}, d[] = {1, 2, 3};
  CHECK_THROWS_AS(pearson(c, d), DataError);
}

TEST_CASE("distance correlation: identical means give r = 1") {
  testsupport::Gen gen(84);
  Matrix p = testsupport::to_matrix(gen.gaussian(60, 4));
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < 60; ++i) labels[i] = static_cast<int>(i % 5);
  auto r = distance_correlation(p, p, labels);
  CHECK(r.r == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.clusters.size() == 5);
  CHECK(r.profile_distances.size() == 10);
  std::vector<int> two(60, 0);
  two[0] = 1;
  CHECK_THROWS_AS(distance_correlation(p, p, two), DataError);
}

TEST_CASE("distance correlation: unrelated cluster means give small r on average") {
  testsupport::Gen gen(85);
  double sum = 0.0;
  const int trials = 200;
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < 60; ++i) labels[i] = static_cast<int>(i % 6);
  for (int t = 0; t < trials; ++t) {
    Matrix p = testsupport::to_matrix(gen.gaussian(60, 10));
    Matrix q = testsupport::to_matrix(gen.gaussian(60, 8));
    sum += distance_correlation(p, q, labels).r;
  }
  CHECK(std::abs(sum / trials) < 0.1);
}

TEST_CASE("distance correlation: oracle over cluster means") {
  testsupport::Gen gen(86);
  Mat p = gen.gaussian(50, 3), q = gen.gaussian(50, 2);
  std::vector<int> labels(50);
  for (std::size_t i = 0; i < 50; ++i) labels[i] = static_cast<int>(gen.index(4));
  auto means = [&](const Mat& m) {
    Mat mu(4, testsupport::Vec(m[0].size(), 0.0));
    std::vector<double> cnt(4, 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      cnt[static_cast<std::size_t>(labels[i])] += 1;
      for (std::size_t c = 0; c < m[i].size(); ++c) mu[static_cast<std::size_t>(labels[i])][c] += m[i][c];
    }
    for (std::size_t k = 0; k < 4; ++k)
      for (double& v : mu[k]) v /= cnt[k];
    return mu;
  };
  const Mat mp = means(p), mq = means(q);
  testsupport::Vec dp, dq;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      double sp = 0, sq = 0;
      for (std::size_t c = 0; c < 3; ++c) sp += std::pow(mp[a][c] - mp[b][c], 2);
      for (std::size_t c = 0; c < 2; ++c) sq += std::pow(mq[a][c] - mq[b][c], 2);
      dp.push_back(std::sqrt(sp));
      dq.push_back(std::sqrt(sq));
    }
  auto r = distance_correlation(testsupport::to_matrix(p), testsupport::to_matrix(q), labels);
  CHECK(r.r == doctest::Approx(testsupport::pearson_naive(dp, dq)).epsilon(1e-12));
}

}
