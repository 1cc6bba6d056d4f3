#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace urbanprof {

/// The ten human-activity categories, in column order of the profile matrix.
enum class Activity : std::size_t {
  eating,
  educational,
  entertainment,
  health,
  outdoor,
  residential,
  shopping,
  sporting,
  traveling,
  working,
};

inline constexpr std::size_t kActivityCount = 10;

std::string_view activity_name(Activity a);
std::optional<Activity> parse_activity(std::string_view name);
const std::array<Activity, kActivityCount>& all_activities();

/// A point of interest. `feature` is "key:value" in lower case, e.g.
/// "amenity:restaurant".
struct PoiRecord {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  std::string feature;

  friend bool operator==(const PoiRecord&, const PoiRecord&) = default;
};

struct CategoryShare {
  Activity category;
  double share;
};

/// Feature -> weighted activity categories. Shares of each feature sum to 1.
class CategoryMapping {
 public:
  /// Line format `feature,category,share`; blank lines and lines starting
  /// with '#' are ignored. Throws DataError naming the line on bad input or
  /// when a feature's shares do not sum to 1 (within 1e-6).
  static CategoryMapping parse(std::istream& in);
  /// Built-in mapping of common OSM features.
  static const CategoryMapping& defaults();

  bool contains(std::string_view feature) const;
  /// Empty span for unmapped features.
  std::span<const CategoryShare> shares(std::string_view feature) const;
  const std::map<std::string, std::vector<CategoryShare>, std::less<>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }

  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::vector<CategoryShare>, std::less<>> entries_;
};

/// Recognized OSM tag keys in precedence order.
const std::array<std::string_view, 9>& recognized_osm_keys();

struct OsmParseResult {
  std::vector<PoiRecord> records;
  std::size_t skipped_unrecognized = 0;  ///< nodes without a recognized tag
  std::size_t skipped_invalid = 0;       ///< nodes with missing/bad id, lat or lon
  std::size_t skipped() const { return skipped_unrecognized + skipped_invalid; }
};

/// Reads `node` elements from an OSM XML document; `way` and `relation`
/// are ignored. Throws DataError with the line number on malformed XML.
OsmParseResult parse_osm_xml(std::istream& in);

/// Header must be exactly `id,lon,lat,feature`. Throws DataError naming the
/// row (1-based, header is row 1) on bad input.
std::vector<PoiRecord> parse_poi_csv(std::istream& in);
void write_poi_csv(std::ostream& out, std::span<const PoiRecord> pois);

/// Records whose feature appears in the mapping, in input order.
std::vector<PoiRecord> filter_relevant(std::span<const PoiRecord> pois,
                                       const CategoryMapping& mapping);

}  // namespace urbanprof
