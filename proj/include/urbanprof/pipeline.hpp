#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "urbanprof/activity_profiles.hpp"
#include "urbanprof/classifiers.hpp"
#include "urbanprof/geo_grid.hpp"
#include "urbanprof/spectral.hpp"
#include "urbanprof/synth.hpp"
#include "urbanprof/timeline.hpp"

namespace urbanprof {

inline constexpr int kFormatVersion = 1;

/// Effective pipeline settings. Built from a flat `key = value` file; see
/// README for the key list. Paths are absolute after loading.
struct PipelineConfig {
  GridSpec grid;
  std::filesystem::path out_dir;
  std::filesystem::path poi_path;
  std::filesystem::path cdr_path;
  std::filesystem::path landuse_path;
  std::filesystem::path truth_path;
  std::optional<std::filesystem::path> mapping_path;

  AggregationParams aggregation;
  IdfCorpus idf_corpus = IdfCorpus::occupied;
  SpectralOptions spectral;
  MonthSpec month;
  FeatureMode timeline_features = FeatureMode::mean_day;

  std::size_t folds = 10;
  std::uint64_t seed = 42;
  std::string classify_target = "cluster";  ///< cluster | truth
  std::string eval_model = "random_forest";
  TreeParams tree;
  ForestParams forest;
  std::size_t hopkins_m = 0;
  std::optional<double> cca_ridge;
  CityScenario synth;

  /// Canonical `key=value` lines (sorted, out_dir excluded) used for hashing.
  std::string canonical_text;
  std::uint64_t hash = 0;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
};

/// Grammar: one `key = value` per line; blank lines and lines whose first
/// non-blank character is '#' are ignored. Unknown or repeated keys are
/// errors. Relative paths resolve against `base_dir`; `${out}` expands to
/// the output directory.
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir,
                            const ConfigOverrides& overrides = {});
PipelineConfig load_config(const std::filesystem::path& file, const ConfigOverrides& overrides = {});

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

const std::vector<std::string>& pipeline_commands();

struct RunOptions {
  std::ostream* log = nullptr;  ///< progress messages; null for quiet
};

/// Runs one command. Throws ConfigError / DataError / NumericError; on
/// failure the command's partial artifacts are removed.
void run_command(std::string_view command, const PipelineConfig& config,
                 const RunOptions& options = {});

}  // namespace urbanprof
