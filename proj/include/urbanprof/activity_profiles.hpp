#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "urbanprof/geo_grid.hpp"
#include "urbanprof/matrix.hpp"
#include "urbanprof/poi_ingest.hpp"

namespace urbanprof {

/// Occurrence counts N(f, l) of each feature f in each cell l.
struct PoiCellCounts {
  std::size_t cell_count = 0;
  std::vector<std::string> features;  ///< sorted vocabulary; column order of `counts`
  std::vector<std::uint32_t> counts;  ///< cell_count x features.size(), row-major
  std::vector<std::uint32_t> totals;  ///< per-cell sum over features
  std::size_t dropped_outside = 0;    ///< POIs that fell outside the grid

  std::uint32_t count(std::size_t cell, std::size_t feature) const {
    return counts[cell * features.size() + feature];
  }
  /// Index of `feature` in the vocabulary, or features.size() if absent.
  std::size_t feature_index(std::string_view feature) const;
  /// Number of cells containing the feature at least once.
  std::size_t document_frequency(std::size_t feature) const;
  std::size_t occupied_cells() const;
};

PoiCellCounts count_pois(const Grid& grid, std::span<const PoiRecord> pois);

struct AggregationParams {
  std::uint32_t h = 50;           ///< POI threshold per neighborhood
  double radius_step_m = 117.5;
  double radius_cap_m = 2350.0;
};

/// Per-cell neighborhood reaching at least `h` POIs.
struct AggregationPlan {
  std::vector<double> radius_m;
  std::vector<std::vector<std::size_t>> members;  ///< ascending cell indices, includes self
  std::vector<std::uint64_t> poi_total;           ///< POIs inside the neighborhood
  std::vector<std::uint8_t> capped;               ///< 1 when the cap stopped growth below h
};

/// Grows each cell's radius 0, step, 2*step, ... (the last step is clamped to
/// the cap) until the member cells hold at least `h` POIs.
AggregationPlan plan_aggregation(const Grid& grid, const PoiCellCounts& counts,
                                 const AggregationParams& params);

/// Which cells count as documents in the idf term.
enum class IdfCorpus { occupied, all };

/// tf-idf of a feature in a cell: N(f,l) / max_w N(w,l) * ln(|L| / df(f)).
/// Throws DataError if the cell holds no POIs or the feature never occurs.
double tf_idf(const PoiCellCounts& counts, std::size_t feature, std::size_t cell,
              IdfCorpus corpus = IdfCorpus::occupied);

/// Full cell x feature tf-idf table; rows of empty cells are zero.
Matrix tf_idf_table(const PoiCellCounts& counts, IdfCorpus corpus = IdfCorpus::occupied);

enum ProfileFlag : std::uint8_t {
  kProfileOk = 0,
  kProfileEmpty = 1,   ///< no POIs in the neighborhood
  kProfileCapped = 2,  ///< radius cap reached below threshold
  kProfileZero = 4,    ///< POIs present but every weight is zero
};

/// n x 10 activity-profile matrix with per-row flags.
struct ActivityProfileMatrix {
  Matrix values;
  std::vector<std::uint8_t> flags;

  /// Rows usable for similarity computations (non-zero weight vector).
  bool usable(std::size_t cell) const {
    return (flags[cell] & (kProfileEmpty | kProfileZero)) == 0;
  }
  std::vector<std::size_t> usable_cells() const;
};

/// A[l][c] = sum over members m of l, over features f: tf_idf(f, m) * share(f, c).
ActivityProfileMatrix build_profiles(const AggregationPlan& plan, const PoiCellCounts& counts,
                                     const CategoryMapping& mapping,
                                     IdfCorpus corpus = IdfCorpus::occupied);

std::string profile_flags_text(std::uint8_t flags);

/// Header `cell_id,<10 activities>,flags`.
void write_profiles_csv(std::ostream& out, const ActivityProfileMatrix& profiles);
ActivityProfileMatrix read_profiles_csv(std::istream& in);

void write_aggregation_csv(std::ostream& out, const AggregationPlan& plan);

}  // namespace urbanprof
