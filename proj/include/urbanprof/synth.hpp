#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "urbanprof/geo_grid.hpp"
#include "urbanprof/landuse.hpp"
#include "urbanprof/poi_ingest.hpp"
#include "urbanprof/timeline.hpp"

namespace urbanprof {

/// A planted area type: activity mix and the diurnal slot template of its
/// phone activity. Values are synthetic, not measured.
struct Archetype {
  std::string name;
  std::array<double, kActivityCount> mix{};
  std::array<double, kSlotCount> slots{};
  std::string landuse;  ///< coarse land-use class emitted for its cells
};

/// Per-activity diurnal signature used to derive default templates.
const std::array<double, kSlotCount>& activity_signature(Activity a);

/// Six default types in two groups: working, shopping, educational (daytime)
/// and residential, sporting, entertainment (evening). Templates are the
/// mix-weighted sum of activity signatures; land use coarsens the types to
/// commercial, residential and recreation.
std::vector<Archetype> default_archetypes();

enum class TimelineLink {
  archetype,  ///< a cell's timelines follow its own type
  shuffled,   ///< a cell's timelines follow a uniformly drawn type
};

struct CityScenario {
  GridSpec grid{9.10, 45.40, 235.0, 235.0, 20, 20};
  std::vector<Archetype> archetypes = default_archetypes();
  std::size_t patches_per_archetype = 3;
  std::size_t features_per_category = 4;  ///< size of each activity's feature pool
  double poi_mean = 80.0;       ///< expected POIs per cell
  double poi_noise = 0.1;       ///< lognormal sigma on the category mix; 0 = exact counts
  double timeline_noise = 0.1;  ///< lognormal sigma per (cell, day, slot)
  double volume_mean = 400.0;   ///< activity per slot at template value 1
  double volume_spread = 0.3;   ///< lognormal sigma of the per-cell volume
  MonthSpec month;
  TimelineLink link = TimelineLink::archetype;
  std::uint64_t seed = 42;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct SyntheticCity {
  std::vector<PoiRecord> pois;
  std::vector<CdrRecord> cdr;
  std::vector<int> truth;              ///< archetype of every cell
  std::vector<int> timeline_type;      ///< archetype driving each cell's timelines
  std::vector<double> volume;          ///< per-cell volume multiplier
  std::vector<LandusePolygon> landuse; ///< one square per cell
};

/// Fully determined by the scenario (including its seed).
SyntheticCity generate(const CityScenario& scenario,
                       const CategoryMapping& mapping = CategoryMapping::defaults());

/// Expected total activity of a cell over the month, before noise.
double expected_cell_mass(const CityScenario& scenario, const SyntheticCity& city, std::size_t cell);

/// Header `cell_id,archetype,name,landuse`.
void write_truth_csv(std::ostream& out, const CityScenario& scenario, const SyntheticCity& city);
/// Reads the archetype column of a truth file.
std::vector<int> read_truth_csv(std::istream& in, std::size_t cell_count);

}  // namespace urbanprof
