#include "urbanprof/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"

namespace urbanprof {

namespace {

//                                               00   07   09   11   14   17   19   21
constexpr std::array<std::array<double, kSlotCount>, kActivityCount> kSignatures = {{
    {0.1, 0.6, 0.4, 2.0, 0.8, 0.8, 2.2, 1.0},  // eating
    {0.0, 2.2, 2.4, 1.4, 1.4, 0.3, 0.1, 0.0},  // educational
    {0.6, 0.1, 0.2, 0.4, 0.5, 1.0, 2.4, 3.0},  // entertainment
    {0.3, 1.6, 2.0, 1.6, 1.4, 0.8, 0.4, 0.3},  // health
    {0.1, 0.8, 0.8, 1.0, 1.4, 1.8, 1.0, 0.2},  // outdoor
    {1.2, 1.4, 0.4, 0.5, 0.5, 1.4, 2.0, 2.0},  // residential
    {0.0, 0.2, 1.2, 1.8, 2.4, 2.4, 1.0, 0.1},  // shopping
    {0.1, 1.0, 0.6, 0.6, 0.8, 2.6, 2.0, 0.4},  // sporting
    {0.3, 2.6, 1.0, 0.8, 0.9, 2.6, 0.8, 0.4},  // traveling
    {0.1, 1.4, 2.8, 2.2, 2.6, 1.2, 0.2, 0.1},  // working
}};

Archetype make_archetype(std::string name, std::string landuse,
                         std::initializer_list<std::pair<Activity, double>> mix) {
  Archetype a;
  a.name = std::move(name);
  a.landuse = std::move(landuse);
  for (const auto& [act, share] : mix) a.mix[static_cast<std::size_t>(act)] = share;
  for (std::size_t c = 0; c < kActivityCount; ++c)
    for (std::size_t s = 0; s < kSlotCount; ++s) a.slots[s] += a.mix[c] * kSignatures[c][s];
  return a;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (seed, purpose, cell).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t cell) {
  return std::mt19937_64(splitmix(splitmix(seed ^ (purpose << 56)) + cell));
}

enum : std::uint64_t { kPlacement = 1, kPois = 2, kVolume = 3, kTimeline = 4, kLink = 5 };

double round_to(double v, double unit) { return std::round(v / unit) * unit; }

}  // namespace

const std::array<double, kSlotCount>& activity_signature(Activity a) {
  return kSignatures[static_cast<std::size_t>(a)];
}

std::vector<Archetype> default_archetypes() {
  using A = Activity;
  // Daytime types share traveling + health, evening types eating + outdoor;
  // each type also carries a little of its group mates' main activities.
  const auto day = [](std::string name, std::string landuse, A main, A mate1, A mate2) {
    return make_archetype(std::move(name), std::move(landuse),
                          {{main, 0.4}, {mate1, 0.075}, {mate2, 0.075}, {A::traveling, 0.225},
                           {A::health, 0.225}});
  };
  const auto evening = [](std::string name, std::string landuse, A main, A mate1, A mate2) {
    return make_archetype(std::move(name), std::move(landuse),
                          {{main, 0.4}, {mate1, 0.075}, {mate2, 0.075}, {A::eating, 0.225},
                           {A::outdoor, 0.225}});
  };
  return {
      day("working", "commercial", A::working, A::shopping, A::educational),
      day("shopping", "commercial", A::shopping, A::working, A::educational),
      day("educational", "residential", A::educational, A::working, A::shopping),
      evening("residential", "residential", A::residential, A::sporting, A::entertainment),
      evening("sporting", "recreation", A::sporting, A::residential, A::entertainment),
      evening("entertainment", "recreation", A::entertainment, A::residential, A::sporting),
  };
}

void CityScenario::validate() const {
  Grid{grid};
  if (archetypes.empty()) throw ConfigError("scenario needs at least one archetype");
  for (const auto& a : archetypes) {
    double sum = 0.0;
    for (double v : a.mix) {
      if (!(v >= 0.0)) throw ConfigError("archetype " + a.name + ": negative mix share");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("archetype " + a.name + ": mix must sum to 1");
    for (double v : a.slots)
      if (!(v >= 0.0)) throw ConfigError("archetype " + a.name + ": negative template value");
  }
  if (patches_per_archetype < 1) throw ConfigError("synth.patches must be >= 1");
  if (features_per_category < 1) throw ConfigError("synth.features_per_category must be >= 1");
  if (!(poi_mean > 0.0)) throw ConfigError("synth.poi_mean must be > 0");
  if (!(poi_noise >= 0.0)) throw ConfigError("synth.poi_noise must be >= 0");
  if (!(timeline_noise >= 0.0)) throw ConfigError("synth.timeline_noise must be >= 0");
  if (!(volume_mean > 0.0)) throw ConfigError("synth.volume_mean must be > 0");
  if (!(volume_spread >= 0.0)) throw ConfigError("synth.volume_spread must be >= 0");
  month.days();
}

SyntheticCity generate(const CityScenario& scenario, const CategoryMapping& mapping) {
  scenario.validate();
  const Grid grid(scenario.grid);
  const std::size_t n = grid.cell_count();
  const std::size_t k = scenario.archetypes.size();
  SyntheticCity city;

  // Placement: Voronoi patches around random seeds, patch p belongs to type p % k.
  {
    auto rng = stream(scenario.seed, kPlacement, 0);
    const double width = scenario.grid.cell_width_m * static_cast<double>(grid.n_cols());
    const double height = scenario.grid.cell_height_m * static_cast<double>(grid.n_rows());
    std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height);
    std::vector<LocalPoint> seeds(k * scenario.patches_per_archetype);
    for (auto& s : seeds) s = {ux(rng), uy(rng)};
    city.truth.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const LocalPoint c = grid.centroid_local(CellId{i});
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t p = 0; p < seeds.size(); ++p) {
        const double d = std::hypot(c.x_m - seeds[p].x_m, c.y_m - seeds[p].y_m);
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
      city.truth[i] = static_cast<int>(best % k);
    }
  }

  // Inverse mapping: features attributed entirely to one category, else the
  // features with the largest share for it.
  std::array<std::vector<std::string>, kActivityCount> features_of;
  for (std::size_t c = 0; c < kActivityCount; ++c) {
    double best_share = 0.0;
    std::vector<std::string> best;
    for (const auto& [feature, shares] : mapping.entries()) {
      for (const auto& s : shares) {
        if (static_cast<std::size_t>(s.category) != c) continue;
        if (s.share > best_share + 1e-12) {
          best_share = s.share;
          best.clear();
        }
        if (std::abs(s.share - best_share) <= 1e-12) best.push_back(feature);
      }
    }
    if (best.size() > scenario.features_per_category) best.resize(scenario.features_per_category);
    features_of[c] = std::move(best);
  }
  for (const auto& a : scenario.archetypes)
    for (std::size_t c = 0; c < kActivityCount; ++c)
      if (a.mix[c] > 0.0 && features_of[c].empty())
        throw ConfigError("mapping has no feature for activity " +
                          std::string(activity_name(static_cast<Activity>(c))));

  const double margin_x = 0.01 * scenario.grid.cell_width_m;
  const double margin_y = 0.01 * scenario.grid.cell_height_m;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = stream(scenario.seed, kPois, i);
    const Archetype& a = scenario.archetypes[static_cast<std::size_t>(city.truth[i])];
    std::vector<std::size_t> categories;
    if (scenario.poi_noise == 0.0) {
      for (std::size_t c = 0; c < kActivityCount; ++c) {
        const auto count = static_cast<std::size_t>(std::llround(scenario.poi_mean * a.mix[c]));
        categories.insert(categories.end(), count, c);
      }
    } else {
      std::array<double, kActivityCount> mix{};
      std::normal_distribution<double> gauss(0.0, scenario.poi_noise);
      for (std::size_t c = 0; c < kActivityCount; ++c) {
        const double z = gauss(rng);
        mix[c] = a.mix[c] * std::exp(z - scenario.poi_noise * scenario.poi_noise / 2.0);
      }
      std::poisson_distribution<std::size_t> total(scenario.poi_mean);
      std::discrete_distribution<std::size_t> pick(mix.begin(), mix.end());
      const std::size_t count = total(rng);
      for (std::size_t j = 0; j < count; ++j) categories.push_back(pick(rng));
    }
    const LocalPoint sw = {scenario.grid.cell_width_m * static_cast<double>(grid.col_of(CellId{i})),
                           scenario.grid.cell_height_m * static_cast<double>(grid.row_of(CellId{i}))};
    std::uniform_real_distribution<double> ux(sw.x_m + margin_x, sw.x_m + scenario.grid.cell_width_m - margin_x);
    std::uniform_real_distribution<double> uy(sw.y_m + margin_y, sw.y_m + scenario.grid.cell_height_m - margin_y);
    std::array<std::size_t, kActivityCount> cycle{};
    for (std::size_t j = 0; j < categories.size(); ++j) {
      const auto& pool = features_of[categories[j]];
      std::size_t f = 0;
      if (scenario.poi_noise == 0.0) {
        f = cycle[categories[j]]++ % pool.size();
      } else {
        f = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
      }
      const LonLat p = grid.to_lonlat({ux(rng), uy(rng)});
      city.pois.push_back({"s" + std::to_string(i) + "-" + std::to_string(j), round_to(p.lon, 1e-7),
                           round_to(p.lat, 1e-7), pool[f]});
    }
  }

  city.timeline_type = city.truth;
  if (scenario.link == TimelineLink::shuffled) {
    for (std::size_t i = 0; i < n; ++i) {
      auto rng = stream(scenario.seed, kLink, i);
      city.timeline_type[i] = std::uniform_int_distribution<int>(0, static_cast<int>(k) - 1)(rng);
    }
  }

  city.volume.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = stream(scenario.seed, kVolume, i);
    const double s = scenario.volume_spread;
    city.volume[i] = std::lognormal_distribution<double>(-s * s / 2.0, s)(rng);
  }

  const MonthSpec& month = scenario.month;
  const std::size_t days = month.days();
  const std::int64_t first_day =
      std::chrono::sys_days{std::chrono::year{month.year} / std::chrono::month{month.month} /
                            std::chrono::day{1}}
          .time_since_epoch()
          .count();
  const double sigma = scenario.timeline_noise;
  // Channel shares: sms_in, sms_out, call_in, call_out, internet.
  constexpr std::array<double, 5> kChannels = {0.1, 0.1, 0.1, 0.1, 0.6};
  city.cdr.reserve(n * days * kSlotCount);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = stream(scenario.seed, kTimeline, i);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Archetype& a = scenario.archetypes[static_cast<std::size_t>(city.timeline_type[i])];
    const double flat = std::accumulate(a.slots.begin(), a.slots.end(), 0.0) / kSlotCount;
    for (std::size_t d = 0; d < days; ++d) {
      const bool weekend = month.is_weekend(d);
      for (std::size_t s = 0; s < kSlotCount; ++s) {
        const double shape = weekend ? 0.7 * a.slots[s] + 0.3 * flat : a.slots[s];
        const double noise = sigma > 0.0 ? std::exp(sigma * gauss(rng) - sigma * sigma / 2.0) : 1.0;
        const double v = scenario.volume_mean * city.volume[i] * shape * noise;
        CdrRecord r;
        r.cell = CellId{i};
        r.timestamp = (first_day + static_cast<std::int64_t>(d)) * 1440 + kSlotStartMinute[s] -
                      month.utc_offset_min;
        r.sms_in = round_to(v * kChannels[0], 1e-3);
        r.sms_out = round_to(v * kChannels[1], 1e-3);
        r.call_in = round_to(v * kChannels[2], 1e-3);
        r.call_out = round_to(v * kChannels[3], 1e-3);
        r.internet = round_to(v * kChannels[4], 1e-3);
        city.cdr.push_back(r);
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto ring = grid.cell_ring(CellId{i});
    city.landuse.push_back({"cell-" + std::to_string(i),
                            scenario.archetypes[static_cast<std::size_t>(city.truth[i])].landuse,
                            {std::vector<LonLat>(ring.begin(), ring.end())}});
  }
  return city;
}

double expected_cell_mass(const CityScenario& scenario, const SyntheticCity& city, std::size_t cell) {
  const Archetype& a = scenario.archetypes[static_cast<std::size_t>(city.timeline_type[cell])];
  const double flat = std::accumulate(a.slots.begin(), a.slots.end(), 0.0) / kSlotCount;
  double mass = 0.0;
  for (std::size_t d = 0; d < scenario.month.days(); ++d)
    for (std::size_t s = 0; s < kSlotCount; ++s)
      mass += scenario.month.is_weekend(d) ? 0.7 * a.slots[s] + 0.3 * flat : a.slots[s];
  return mass * scenario.volume_mean * city.volume[cell];
}

void write_truth_csv(std::ostream& out, const CityScenario& scenario, const SyntheticCity& city) {
  out << "cell_id,archetype,name,landuse\n";
  for (std::size_t i = 0; i < city.truth.size(); ++i) {
    const Archetype& a = scenario.archetypes[static_cast<std::size_t>(city.truth[i])];
    out << i << ',' << city.truth[i] << ',' << csv::escape(a.name) << ',' << csv::escape(a.landuse)
        << '\n';
  }
}

std::vector<int> read_truth_csv(std::istream& in, std::size_t cell_count) {
  std::string line;
  if (!csv::read_line(in, line) || line != "cell_id,archetype,name,landuse")
    throw DataError("truth CSV: expected header cell_id,archetype,name,landuse");
  std::vector<int> truth(cell_count, -1);
  std::size_t row = 1;
  while (csv::read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    const auto cell = f.size() == 4 ? csv::parse_int(f[0]) : std::nullopt;
    const auto label = f.size() == 4 ? csv::parse_int(f[1]) : std::nullopt;
    if (!cell || !label || *cell < 0 || static_cast<std::size_t>(*cell) >= cell_count || *label < 0)
      throw DataError("truth CSV row " + std::to_string(row) + ": malformed");
    truth[static_cast<std::size_t>(*cell)] = static_cast<int>(*label);
  }
  return truth;
}

}  // namespace urbanprof
