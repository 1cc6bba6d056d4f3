#pragma once

// Independent reference implementations and random generators for tests.
// Nothing here calls into the library's numeric code; fixtures are plain
// vectors so that the oracles cannot share bugs with what they check.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "urbanprof/matrix.hpp"

namespace testsupport {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

urbanprof::Matrix to_matrix(const Mat& m);
Mat from_matrix(const urbanprof::Matrix& m);

// ---- generators -----------------------------------------------------------

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0);
  double normal(double mean = 0.0, double sd = 1.0);
  std::size_t index(std::size_t n);  // uniform in [0, n)
  int integer(int lo, int hi);       // inclusive

  Mat symmetric(std::size_t n, double scale = 1.0);
  Mat gaussian(std::size_t rows, std::size_t cols);
  Mat uniform_box(std::size_t rows, std::size_t cols, double lo, double hi);
};

// ---- oracles --------------------------------------------------------------

struct JacobiResult {
  Vec values;  // ascending
  Mat vectors; // vectors[i] is the unit eigenvector of values[i]
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
JacobiResult jacobi_eigen(const Mat& a);

// Connected components of an undirected graph given by w[i][j] > 0 (BFS).
std::size_t component_count(const Mat& w);

struct BruteCca {
  double rho1 = 0.0;
  double rho2 = 0.0;
};

// Two-column X and Y: scans direction angles for the maximal |corr| pair,
// refines locally, then evaluates the uncorrelated complementary pair.
BruteCca brute_cca_2x2(const Mat& x, const Mat& y);

double pearson_naive(const Vec& a, const Vec& b);

// Population mean and stdev.
std::pair<double, double> mean_sd(const Vec& v);

// Fixture POI placed in local meters on the grid.
struct LocalPoi {
  double x = 0.0;
  double y = 0.0;
  std::string feature;
};

struct BruteGrid {
  double w = 0.0;
  double h = 0.0;
  std::size_t cols = 0;
  std::size_t rows = 0;
};

// Activity profile matrix by explicit loops over (cell, radius, member,
// feature, category). `shares` maps feature -> (category index, share).
Mat brute_profiles(const BruteGrid& g, const std::vector<LocalPoi>& pois,
                   const std::map<std::string, std::vector<std::pair<std::size_t, double>>>& shares,
                   unsigned h, double step, double cap);

// 3x3 grid of 100 m cells holding 20 POIs; cells 2 and 5 are empty.
BruteGrid tfidf_fixture_grid();
std::vector<LocalPoi> tfidf_fixture_pois();

// ---- files ----------------------------------------------------------------

std::string slurp(const std::filesystem::path& p);
// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace testsupport
