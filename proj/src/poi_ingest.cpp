#include "urbanprof/poi_ingest.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"

namespace urbanprof {

namespace {

constexpr std::array<std::string_view, kActivityCount> kActivityNames = {
    "eating",      "educational", "entertainment", "health",    "outdoor",
    "residential", "shopping",    "sporting",      "traveling", "working",
};

// Shipped stand-in for an activity ontology. Features split across several
// categories where the activity they support is mixed.
constexpr std::string_view kDefaultMapping = R"(# feature,category,share
amenity:restaurant,eating,1
amenity:fast_food,eating,1
amenity:cafe,eating,0.7
amenity:cafe,entertainment,0.3
amenity:bar,entertainment,0.6
amenity:bar,eating,0.4
amenity:pub,entertainment,0.6
amenity:pub,eating,0.4
amenity:ice_cream,eating,1
amenity:food_court,eating,1
amenity:biergarten,eating,0.5
amenity:biergarten,entertainment,0.5
amenity:school,educational,1
amenity:university,educational,1
amenity:college,educational,1
amenity:kindergarten,educational,1
amenity:library,educational,0.8
amenity:library,entertainment,0.2
amenity:language_school,educational,1
amenity:cinema,entertainment,1
amenity:theatre,entertainment,1
amenity:nightclub,entertainment,1
amenity:arts_centre,entertainment,1
tourism:museum,entertainment,0.7
tourism:museum,educational,0.3
tourism:gallery,entertainment,1
tourism:attraction,entertainment,0.5
tourism:attraction,outdoor,0.5
amenity:hospital,health,1
amenity:clinic,health,1
amenity:doctors,health,1
amenity:dentist,health,1
amenity:pharmacy,health,0.7
amenity:pharmacy,shopping,0.3
leisure:park,outdoor,1
leisure:garden,outdoor,1
leisure:playground,outdoor,1
leisure:dog_park,outdoor,1
tourism:viewpoint,outdoor,1
tourism:picnic_site,outdoor,1
amenity:fountain,outdoor,1
building:residential,residential,1
building:apartments,residential,1
building:house,residential,1
landuse:residential,residential,1
shop:supermarket,shopping,0.8
shop:supermarket,eating,0.2
shop:convenience,shopping,0.8
shop:convenience,residential,0.2
shop:clothes,shopping,1
shop:shoes,shopping,1
shop:bakery,shopping,0.5
shop:bakery,eating,0.5
shop:hairdresser,shopping,1
shop:mall,shopping,1
shop:department_store,shopping,1
amenity:marketplace,shopping,1
leisure:sports_centre,sporting,1
leisure:pitch,sporting,1
leisure:stadium,sporting,0.7
leisure:stadium,entertainment,0.3
leisure:fitness_centre,sporting,1
leisure:swimming_pool,sporting,1
sport:soccer,sporting,1
sport:tennis,sporting,1
highway:bus_stop,traveling,1
amenity:parking,traveling,1
amenity:fuel,traveling,1
amenity:taxi,traveling,1
amenity:bicycle_rental,traveling,1
tourism:hotel,traveling,0.8
tourism:hotel,working,0.2
tourism:hostel,traveling,1
office:company,working,1
office:government,working,1
office:insurance,working,1
office:lawyer,working,1
office:it,working,1
amenity:bank,working,0.6
amenity:bank,shopping,0.4
amenity:atm,shopping,0.5
amenity:atm,working,0.5
building:office,working,1
building:commercial,working,0.6
building:commercial,shopping,0.4
landuse:commercial,working,0.5
landuse:commercial,shopping,0.5
amenity:post_office,working,0.5
amenity:post_office,shopping,0.5
amenity:townhall,working,1
amenity:police,working,1
)";

constexpr std::array<std::string_view, 9> kRecognizedKeys = {
    "amenity", "shop", "leisure", "tourism", "building", "landuse", "highway", "office", "sport",
};

constexpr std::array<Activity, kActivityCount> kAllActivities = {
    Activity::eating,      Activity::educational, Activity::entertainment, Activity::health,
    Activity::outdoor,     Activity::residential, Activity::shopping,      Activity::sporting,
    Activity::traveling,   Activity::working,
};

}  // namespace

std::string_view activity_name(Activity a) { return kActivityNames[static_cast<std::size_t>(a)]; }

std::optional<Activity> parse_activity(std::string_view name) {
  const std::string lower = csv::to_lower(csv::trim(name));
  for (std::size_t i = 0; i < kActivityCount; ++i)
    if (kActivityNames[i] == lower) return static_cast<Activity>(i);
  return std::nullopt;
}

const std::array<Activity, kActivityCount>& all_activities() { return kAllActivities; }

const std::array<std::string_view, 9>& recognized_osm_keys() { return kRecognizedKeys; }

CategoryMapping CategoryMapping::parse(std::istream& in) {
  CategoryMapping mapping;
  std::string line;
  std::size_t line_no = 0;
  while (csv::read_line(in, line)) {
    ++line_no;
    const auto text = csv::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = csv::split_line(text);
    const auto where = "mapping line " + std::to_string(line_no);
    if (fields.size() != 3) throw DataError(where + ": expected feature,category,share");
    const std::string feature = csv::to_lower(csv::trim(fields[0]));
    if (feature.empty()) throw DataError(where + ": empty feature");
    const auto category = parse_activity(fields[1]);
    if (!category) throw DataError(where + ": unknown activity category '" + fields[1] + "'");
    const auto share = csv::parse_double(fields[2]);
    if (!share || !(*share > 0.0) || *share > 1.0)
      throw DataError(where + ": share must be in (0, 1]");
    auto& list = mapping.entries_[feature];
    bool merged = false;
    for (auto& existing : list) {
      if (existing.category == *category) {
        existing.share += *share;
        merged = true;
      }
    }
    if (!merged) list.push_back({*category, *share});
  }
  for (const auto& [feature, list] : mapping.entries_) {
    double total = 0.0;
    for (const auto& s : list) total += s.share;
    if (std::abs(total - 1.0) > 1e-6)
      throw DataError("mapping shares of '" + feature + "' sum to " + csv::format_double(total) +
                      ", expected 1");
  }
  return mapping;
}

const CategoryMapping& CategoryMapping::defaults() {
  static const CategoryMapping mapping = [] {
    std::istringstream in{std::string(kDefaultMapping)};
    return parse(in);
  }();
  return mapping;
}

bool CategoryMapping::contains(std::string_view feature) const {
  return entries_.find(feature) != entries_.end();
}

std::span<const CategoryShare> CategoryMapping::shares(std::string_view feature) const {
  const auto it = entries_.find(feature);
  if (it == entries_.end()) return {};
  return it->second;
}

void CategoryMapping::write(std::ostream& out) const {
  out << "# feature,category,share\n";
  for (const auto& [feature, list] : entries_)
    for (const auto& s : list)
      out << csv::escape(feature) << ',' << activity_name(s.category) << ','
          << csv::format_double(s.share) << '\n';
}

std::vector<PoiRecord> parse_poi_csv(std::istream& in) {
  std::vector<PoiRecord> out;
  std::string line;
  if (!csv::read_line(in, line)) return out;
  if (!line.empty() && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (csv::trim(line) != "id,lon,lat,feature")
    throw DataError("POI CSV row 1: header must be exactly 'id,lon,lat,feature'");
  std::size_t row = 1;
  while (csv::read_line(in, line)) {
    ++row;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    const auto where = "POI CSV row " + std::to_string(row);
    if (fields.size() != 4) throw DataError(where + ": expected 4 fields");
    const auto lon = csv::parse_double(fields[1]);
    const auto lat = csv::parse_double(fields[2]);
    if (!lon || !std::isfinite(*lon)) throw DataError(where + ": invalid lon '" + fields[1] + "'");
    if (!lat || !std::isfinite(*lat)) throw DataError(where + ": invalid lat '" + fields[2] + "'");
    std::string feature = csv::to_lower(csv::trim(fields[3]));
    if (feature.empty()) throw DataError(where + ": empty feature");
    out.push_back({fields[0], *lon, *lat, std::move(feature)});
  }
  return out;
}

void write_poi_csv(std::ostream& out, std::span<const PoiRecord> pois) {
  out << "id,lon,lat,feature\n";
  for (const auto& p : pois)
    out << csv::escape(p.id) << ',' << csv::format_double(p.lon) << ','
        << csv::format_double(p.lat) << ',' << csv::escape(p.feature) << '\n';
}

std::vector<PoiRecord> filter_relevant(std::span<const PoiRecord> pois,
                                       const CategoryMapping& mapping) {
  std::vector<PoiRecord> out;
  for (const auto& p : pois)
    if (mapping.contains(p.feature)) out.push_back(p);
  return out;
}

}  // namespace urbanprof
