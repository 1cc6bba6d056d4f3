#include <doctest.h>

#include <omp.h>

#include <bit>
#include <cstdint>
#include <cstring>

#include "support.hpp"
#include "urbanprof/kernels.hpp"

using namespace urbanprof;
namespace ks = urbanprof::kernels;

namespace {

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (std::bit_cast<std::uint64_t>(a(i, j)) != std::bit_cast<std::uint64_t>(b(i, j))) return false;
  return true;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Threads {
  int saved = omp_get_max_threads();
  explicit Threads(int n) { omp_set_num_threads(n); }
  ~Threads() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("serial and parallel kernels agree bit for bit") {
  testsupport::Gen gen(91);
  for (int threads : {1, 3, 4, 8}) {
    Threads t(threads);
    for (int trial = 0; trial < 5; ++trial) {
      const std::size_t n = 20 + gen.index(200), d = 1 + gen.index(12), k = 1 + gen.index(9);
      auto rows = testsupport::to_matrix(gen.uniform_box(n, d, 0.01, 3.0));
      CHECK(bit_equal(ks::serial::cosine_similarity_matrix(rows), ks::omp::cosine_similarity_matrix(rows)));

      auto cent = testsupport::to_matrix(gen.gaussian(k, d));
      std::vector<std::size_t> l1(n), l2(n);
      std::vector<double> d1(n), d2(n);
      ks::serial::assign_nearest(rows, cent, l1, d1);
      ks::omp::assign_nearest(rows, cent, l2, d2);
      CHECK(l1 == l2);
      CHECK(bit_equal(d1, d2));

      auto queries = testsupport::to_matrix(gen.gaussian(n / 2, d));
      std::vector<std::ptrdiff_t> exclude(n / 2);
      for (std::size_t i = 0; i < exclude.size(); ++i)
        exclude[i] = gen.index(3) == 0 ? -1 : static_cast<std::ptrdiff_t>(gen.index(n));
      CHECK(bit_equal(ks::serial::nearest_neighbor_distances(rows, queries, exclude),
                      ks::omp::nearest_neighbor_distances(rows, queries, exclude)));

      std::vector<std::vector<std::size_t>> members(n / 3 + 1);
      for (auto& m : members)
        for (std::size_t j = gen.index(15); j > 0; --j) m.push_back(gen.index(n));
      CHECK(bit_equal(ks::serial::sum_member_rows(rows, members), ks::omp::sum_member_rows(rows, members)));
    }
  }
}

TEST_CASE("kernel examples") {
  const auto rows = testsupport::to_matrix({{1, 0}, {1, 1}, {0, 2}});
  const auto cs = ks::serial::cosine_similarity_matrix(rows);
  CHECK(cs(0, 0) == 1.0);
  CHECK(cs(0, 2) == doctest::Approx(0.0));
  CHECK(cs(0, 1) == doctest::Approx(std::sqrt(0.5)));

  const auto cent = testsupport::to_matrix({{0, 0}, {0, 2}});
  std::vector<std::size_t> labels(3);
  std::vector<double> sq(3);
  ks::serial::assign_nearest(rows, cent, labels, sq);
  CHECK(labels == std::vector<std::size_t>{0, 0, 1});  // (1,1) is equidistant; lower index wins
  CHECK(sq[1] == doctest::Approx(2.0));

  std::vector<std::ptrdiff_t> exclude = {0, -1};
  const auto nn = ks::serial::nearest_neighbor_distances(rows, testsupport::to_matrix({{1, 0}, {1, 0}}), exclude);
  CHECK(nn[0] == doctest::Approx(1.0));
  CHECK(nn[1] == 0.0);

  const auto sums = ks::serial::sum_member_rows(rows, {{0, 2}, {}, {1, 1}});
  CHECK(testsupport::from_matrix(sums) == testsupport::Mat{{1, 2}, {0, 0}, {2, 2}});
}

}
