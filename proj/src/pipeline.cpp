#include "urbanprof/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/landuse.hpp"
#include "urbanprof/poi_ingest.hpp"
#include "urbanprof/stats.hpp"

namespace urbanprof {

namespace fs = std::filesystem;

// --- Config -----------------------------------------------------------------

namespace {

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "grid.origin_lon", "grid.origin_lat", "grid.cell_width_m", "grid.cell_height_m",
      "grid.cols", "grid.rows", "out_dir", "poi_path", "cdr_path", "landuse_path", "truth_path",
      "mapping_path", "h", "radius_step_m", "radius_cap_m", "idf_corpus", "k_nn", "k_override",
      "k_max", "knn_symmetrization", "normalize_embedding", "kmeans_restarts", "month",
      "utc_offset_min", "timeline_features", "folds", "seed", "classify.target",
      "classify.eval_model", "tree.max_depth", "tree.min_leaf", "forest.n_trees",
      "forest.max_depth", "forest.min_leaf", "forest.mtry", "forest.bootstrap", "hopkins.m",
      "cca.ridge", "synth.patches", "synth.features_per_category", "synth.poi_mean",
      "synth.poi_noise", "synth.timeline_noise", "synth.volume_mean", "synth.volume_spread",
      "synth.link",
  };
  return keys;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

  std::optional<std::string> text(const std::string& key) const {
    const auto it = raw_.find(key);
    if (it == raw_.end()) return std::nullopt;
    return it->second;
  }

  double real(const std::string& key, double fallback, double lo, double hi) const {
    const auto t = text(key);
    if (!t) return fallback;
    const auto v = csv::parse_double(*t);
    if (!v || !std::isfinite(*v) || *v < lo || *v > hi)
      throw ConfigError("config key " + key + ": expected a number in [" + csv::format_double(lo) +
                        ", " + csv::format_double(hi) + "], got '" + *t + "'");
    return *v;
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo,
                       std::int64_t hi) const {
    const auto t = text(key);
    if (!t) return fallback;
    const auto v = csv::parse_int(*t);
    if (!v || *v < lo || *v > hi)
      throw ConfigError("config key " + key + ": expected an integer in [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "], got '" + *t + "'");
    return *v;
  }

  bool boolean(const std::string& key, bool fallback) const {
    const auto t = text(key);
    if (!t) return fallback;
    const std::string v = csv::to_lower(*t);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("config key " + key + ": expected true or false, got '" + *t + "'");
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     std::initializer_list<const char*> allowed) const {
    const auto t = text(key);
    if (!t) return fallback;
    const std::string v = csv::to_lower(*t);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string list;
    for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw ConfigError("config key " + key + ": expected one of " + list + ", got '" + *t + "'");
  }

 private:
  std::map<std::string, std::string> raw_;
};

fs::path resolve(std::string value, const fs::path& base, const fs::path& out) {
  for (std::size_t at; (at = value.find("${out}")) != std::string::npos;)
    value.replace(at, 6, out.string());
  fs::path p(value);
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

PipelineConfig parse_config(std::istream& in, const fs::path& base_dir, const ConfigOverrides& overrides) {
  std::map<std::string, std::string> raw;
  std::string line;
  std::size_t line_no = 0;
  while (csv::read_line(in, line)) {
    ++line_no;
    const auto body = csv::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = csv::to_lower(csv::trim(body.substr(0, eq)));
    const std::string value(csv::trim(body.substr(eq + 1)));
    if (!known_keys().contains(key))
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!raw.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  if (overrides.seed) raw["seed"] = std::to_string(*overrides.seed);

  PipelineConfig c;
  {
    std::string canon;
    for (const auto& [k, v] : raw)
      if (k != "out_dir") canon += k + "=" + v + "\n";
    c.canonical_text = canon;
    c.hash = fnv1a(canon);
  }
  const Reader r(raw);

  if (!r.text("grid.origin_lon") || !r.text("grid.origin_lat"))
    throw ConfigError("config must set grid.origin_lon and grid.origin_lat");
  c.grid.origin_lon = r.real("grid.origin_lon", 0, -180, 180);
  c.grid.origin_lat = r.real("grid.origin_lat", 0, -89, 89);
  c.grid.cell_width_m = r.real("grid.cell_width_m", 235.0, 1e-3, 1e6);
  c.grid.cell_height_m = r.real("grid.cell_height_m", 235.0, 1e-3, 1e6);
  c.grid.n_cols = static_cast<std::size_t>(r.integer("grid.cols", 100, 1, 100000));
  c.grid.n_rows = static_cast<std::size_t>(r.integer("grid.rows", 100, 1, 100000));
  Grid{c.grid};

  c.out_dir = overrides.out_dir ? fs::absolute(*overrides.out_dir).lexically_normal()
                                : resolve(r.text("out_dir").value_or("out"), base_dir, {});
  c.poi_path = resolve(r.text("poi_path").value_or("${out}/pois.csv"), base_dir, c.out_dir);
  c.cdr_path = resolve(r.text("cdr_path").value_or("${out}/cdr.csv"), base_dir, c.out_dir);
  c.landuse_path = resolve(r.text("landuse_path").value_or("${out}/landuse.geojson"), base_dir, c.out_dir);
  c.truth_path = resolve(r.text("truth_path").value_or("${out}/truth.csv"), base_dir, c.out_dir);
  if (const auto m = r.text("mapping_path")) c.mapping_path = resolve(*m, base_dir, c.out_dir);

  c.aggregation.h = static_cast<std::uint32_t>(r.integer("h", 50, 1, 1'000'000'000));
  c.aggregation.radius_step_m = r.real("radius_step_m", 117.5, 1e-3, 1e7);
  c.aggregation.radius_cap_m = r.real("radius_cap_m", 2350.0, 0.0, 1e8);
  c.idf_corpus = r.choice("idf_corpus", "occupied", {"occupied", "all"}) == "all" ? IdfCorpus::all
                                                                                : IdfCorpus::occupied;

  c.seed = static_cast<std::uint64_t>(r.integer("seed", 42, 0, INT64_MAX));
  c.spectral.k_nn = static_cast<std::size_t>(r.integer("k_nn", 10, 1, 100000));
  if (const auto ko = r.integer("k_override", 0, 0, 100000); ko > 0) {
    if (ko < 2) throw ConfigError("config key k_override: must be >= 2 (0 disables)");
    c.spectral.k_override = static_cast<std::size_t>(ko);
  }
  c.spectral.k_max = static_cast<std::size_t>(r.integer("k_max", 20, 2, 100000));
  c.spectral.symmetrization = r.choice("knn_symmetrization", "either", {"either", "mutual"}) == "mutual"
                                  ? KnnSymmetrization::mutual
                                  : KnnSymmetrization::either;
  c.spectral.normalize_embedding = r.boolean("normalize_embedding", true);
  c.spectral.restarts = static_cast<std::size_t>(r.integer("kmeans_restarts", 10, 1, 10000));
  c.spectral.seed = c.seed;

  if (const auto m = r.text("month")) {
    const auto dash = m->find('-');
    const auto y = dash == std::string::npos ? std::nullopt : csv::parse_int(m->substr(0, dash));
    const auto mo = dash == std::string::npos ? std::nullopt : csv::parse_int(m->substr(dash + 1));
    if (!y || !mo || *y < 1900 || *y > 2200 || *mo < 1 || *mo > 12)
      throw ConfigError("config key month: expected YYYY-MM, got '" + *m + "'");
    c.month.year = static_cast<int>(*y);
    c.month.month = static_cast<unsigned>(*mo);
  }
  c.month.utc_offset_min = static_cast<int>(r.integer("utc_offset_min", 60, -14 * 60, 14 * 60));
  c.timeline_features = r.choice("timeline_features", "mean_day", {"mean_day", "weekday_weekend"}) ==
                                "weekday_weekend"
                            ? FeatureMode::weekday_weekend
                            : FeatureMode::mean_day;

  c.folds = static_cast<std::size_t>(r.integer("folds", 10, 2, 1000));
  c.classify_target = r.choice("classify.target", "cluster", {"cluster", "truth"});
  c.eval_model = r.choice("classify.eval_model", "random_forest",
                          {"random", "majority", "knn_k5", "decision_tree", "random_forest"});
  c.tree.max_depth = static_cast<int>(r.integer("tree.max_depth", -1, -1, 10000));
  c.tree.min_leaf = static_cast<std::size_t>(r.integer("tree.min_leaf", 1, 1, 1000000));
  c.forest.n_trees = static_cast<std::size_t>(r.integer("forest.n_trees", 100, 1, 100000));
  c.forest.max_depth = static_cast<int>(r.integer("forest.max_depth", -1, -1, 10000));
  c.forest.min_leaf = static_cast<std::size_t>(r.integer("forest.min_leaf", 1, 1, 1000000));
  c.forest.mtry = static_cast<std::size_t>(r.integer("forest.mtry", 0, 0, 100000));
  c.forest.bootstrap = r.boolean("forest.bootstrap", true);
  c.forest.seed = c.seed;
  c.hopkins_m = static_cast<std::size_t>(r.integer("hopkins.m", 0, 0, 100000000));
  if (const auto ridge = r.text("cca.ridge"); ridge && csv::to_lower(*ridge) != "auto")
    c.cca_ridge = r.real("cca.ridge", 0.0, 0.0, 1e12);

  c.synth.grid = c.grid;
  c.synth.month = c.month;
  c.synth.seed = c.seed;
  c.synth.patches_per_archetype = static_cast<std::size_t>(r.integer("synth.patches", 3, 1, 10000));
  c.synth.features_per_category =
      static_cast<std::size_t>(r.integer("synth.features_per_category", 4, 1, 1000));
  c.synth.poi_mean = r.real("synth.poi_mean", 80.0, 1e-9, 1e6);
  c.synth.poi_noise = r.real("synth.poi_noise", 0.1, 0.0, 10.0);
  c.synth.timeline_noise = r.real("synth.timeline_noise", 0.1, 0.0, 10.0);
  c.synth.volume_mean = r.real("synth.volume_mean", 400.0, 1e-9, 1e12);
  c.synth.volume_spread = r.real("synth.volume_spread", 0.3, 0.0, 10.0);
  c.synth.link = r.choice("synth.link", "archetype", {"archetype", "shuffled"}) == "shuffled"
                     ? TimelineLink::shuffled
                     : TimelineLink::archetype;
  return c;
}

PipelineConfig load_config(const fs::path& file, const ConfigOverrides& overrides) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  return parse_config(in, fs::absolute(file).parent_path(), overrides);
}

const std::vector<std::string>& pipeline_commands() {
  static const std::vector<std::string> commands = {
      "synth", "ingest-poi", "profiles", "cluster", "timelines", "hopkins",
      "cca",   "classify",   "landuse-compare",     "report",
  };
  return commands;
}

// --- Artifacts --------------------------------------------------------------

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

/// Writes a command's artifacts via temp file + rename and its manifest on
/// success. Destroying an unfinished stage removes what it wrote.
class Stage {
 public:
  Stage(const PipelineConfig& config, std::string command, const RunOptions& options)
      : config_(config), command_(std::move(command)), options_(options),
        start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + config.out_dir.string());
  }
  Stage(const Stage&) = delete;
  Stage& operator=(const Stage&) = delete;

  ~Stage() {
    if (finished_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    for (const auto& p : pending_) fs::remove(p, ec);
  }

  fs::path path(const std::string& name) const { return config_.out_dir / name; }

  void write_to(const fs::path& target, const std::function<void(std::ostream&)>& body) {
    fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    pending_.push_back(tmp);
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write " + tmp.string());
      body(out);
      out.flush();
      if (!out) throw DataError("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
    pending_.pop_back();
    written_.push_back(target);
    log("wrote " + display(target));
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    write_to(path(name), body);
  }

  void log(const std::string& message) const {
    if (options_.log) *options_.log << "[" << command_ << "] " << message << '\n';
  }

  void finish() {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start_)
                             .count();
    nlohmann::ordered_json m;
    m["command"] = command_;
    m["format_version"] = kFormatVersion;
    m["config_hash"] = hex64(config_.hash);
    m["seed"] = config_.seed;
    m["elapsed_ms"] = elapsed;
    m["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& p : written_)
      m["artifacts"].push_back({{"path", display(p)}, {"fnv1a", hex64(fnv1a(read_file(p)))}});
    write("manifest_" + command_ + ".json", [&](std::ostream& out) { out << m.dump(2) << '\n'; });
    finished_ = true;
  }

 private:
  std::string display(const fs::path& p) const {
    const auto rel = p.lexically_relative(config_.out_dir);
    if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
    return p.filename().generic_string();
  }

  const PipelineConfig& config_;
  std::string command_;
  const RunOptions& options_;
  std::chrono::steady_clock::time_point start_;
  std::vector<fs::path> written_;
  std::vector<fs::path> pending_;
  bool finished_ = false;
};

void require(const fs::path& p, std::string_view producer) {
  if (!fs::exists(p))
    throw ConfigError("missing " + p.filename().string() + "; run `urbanprof " +
                      std::string(producer) + "` first");
}

void require_input(const fs::path& p, std::string_view what) {
  if (!fs::exists(p))
    throw ConfigError(std::string(what) + " not found: " + p.string() +
                      " (set it in the config or run `urbanprof synth`)");
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

CategoryMapping load_mapping(const PipelineConfig& c) {
  if (!c.mapping_path) return CategoryMapping::defaults();
  require_input(*c.mapping_path, "mapping file");
  auto in = open_in(*c.mapping_path);
  return CategoryMapping::parse(in);
}

struct CellMatrix {
  std::vector<std::size_t> cells;
  Matrix values;
};

void write_cell_matrix(std::ostream& out, const std::vector<std::string>& columns,
                       const CellMatrix& m) {
  out << "cell_id";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < m.cells.size(); ++i) {
    out << m.cells[i];
    for (double v : m.values.row(i)) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

CellMatrix read_cell_matrix(const fs::path& p, std::size_t cell_count) {
  auto in = open_in(p);
  std::string line;
  if (!csv::read_line(in, line)) throw DataError(p.filename().string() + ": empty file");
  const auto header = csv::split_line(line);
  if (header.empty() || header[0] != "cell_id")
    throw DataError(p.filename().string() + ": header must start with cell_id");
  const std::size_t q = header.size() - 1;
  CellMatrix m;
  std::vector<double> values;
  std::size_t row = 1;
  while (csv::read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = csv::split_line(line);
    const auto cell = f.size() == q + 1 ? csv::parse_int(f[0]) : std::nullopt;
    if (!cell || *cell < 0 || static_cast<std::size_t>(*cell) >= cell_count)
      throw DataError(p.filename().string() + " row " + std::to_string(row) + ": bad cell id");
    m.cells.push_back(static_cast<std::size_t>(*cell));
    for (std::size_t j = 1; j <= q; ++j) {
      const auto v = csv::parse_double(f[j]);
      if (!v) throw DataError(p.filename().string() + " row " + std::to_string(row) + ": bad number");
      values.push_back(*v);
    }
  }
  m.values = Matrix(m.cells.size(), q);
  std::copy(values.begin(), values.end(), m.values.data().begin());
  return m;
}

std::vector<std::string> feature_names(FeatureMode mode) {
  std::vector<std::string> names;
  for (std::size_t s = 0; s < kSlotCount; ++s)
    names.push_back((mode == FeatureMode::weekday_weekend ? "weekday_slot" : "slot") + std::to_string(s));
  if (mode == FeatureMode::weekday_weekend)
    for (std::size_t s = 0; s < kSlotCount; ++s) names.push_back("weekend_slot" + std::to_string(s));
  return names;
}

struct StatRow {
  std::string statistic;
  std::string scope;
  double value;
};

void write_stats_csv(std::ostream& out, const std::vector<StatRow>& rows, std::uint64_t seed) {
  out << "statistic,scope,value,seed\n";
  for (const auto& r : rows)
    out << r.statistic << ',' << csv::escape(r.scope) << ',' << csv::format_double(r.value) << ','
        << seed << '\n';
}

std::vector<StatRow> read_stats_csv(const fs::path& p) {
  auto in = open_in(p);
  std::string line;
  csv::read_line(in, line);
  std::vector<StatRow> rows;
  while (csv::read_line(in, line)) {
    const auto f = csv::split_line(line);
    if (f.size() != 4) continue;
    rows.push_back({f[0], f[1], csv::parse_double(f[2]).value_or(NAN)});
  }
  return rows;
}

ModelSpec model_spec(const std::string& name, const PipelineConfig& c) {
  if (name == "random") return RandomSpec{c.seed};
  if (name == "majority") return MajoritySpec{};
  if (name == "knn_k5") return KnnSpec{5};
  if (name == "decision_tree") return TreeSpec{c.tree};
  if (name == "random_forest") return ForestSpec{c.forest};
  throw ConfigError("unknown model " + name);
}

const std::vector<std::string>& model_suite() {
  static const std::vector<std::string> suite = {"random", "majority", "knn_k5", "decision_tree",
                                                 "random_forest"};
  return suite;
}

// Rows of `features` whose cell has a non-negative label.
std::pair<Matrix, std::vector<int>> labelled_rows(const CellMatrix& features,
                                                  const std::vector<int>& label_of_cell) {
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < features.cells.size(); ++i) {
    const int label = label_of_cell[features.cells[i]];
    if (label < 0) continue;
    rows.push_back(i);
    labels.push_back(label);
  }
  return {select_rows(features.values, rows), labels};
}

Matrix one_hot_rows(const std::vector<int>& labels) {
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  Matrix m(labels.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) m(i, static_cast<std::size_t>(labels[i])) = 1.0;
  return m;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// --- Commands ---------------------------------------------------------------

void cmd_synth(const PipelineConfig& c, Stage& stage) {
  const CategoryMapping mapping = load_mapping(c);
  const SyntheticCity city = generate(c.synth, mapping);
  stage.log("generated " + std::to_string(city.pois.size()) + " POIs, " +
            std::to_string(city.cdr.size()) + " CDR rows");
  stage.write_to(c.poi_path, [&](std::ostream& o) { write_poi_csv(o, city.pois); });
  stage.write_to(c.cdr_path, [&](std::ostream& o) { write_cdr_csv(o, city.cdr, c.month.utc_offset_min); });
  stage.write_to(c.landuse_path, [&](std::ostream& o) { write_landuse_geojson(o, city.landuse); });
  stage.write_to(c.truth_path, [&](std::ostream& o) { write_truth_csv(o, c.synth, city); });
}

void cmd_ingest(const PipelineConfig& c, Stage& stage) {
  require_input(c.poi_path, "POI input");
  const CategoryMapping mapping = load_mapping(c);
  auto in = open_in(c.poi_path);
  const std::string ext = csv::to_lower(c.poi_path.extension().string());
  OsmParseResult parsed;
  if (ext == ".osm" || ext == ".xml") {
    parsed = parse_osm_xml(in);
  } else {
    parsed.records = parse_poi_csv(in);
  }
  const auto relevant = filter_relevant(parsed.records, mapping);
  stage.log(std::to_string(relevant.size()) + " of " + std::to_string(parsed.records.size()) +
            " POIs map to activities");
  stage.write("pois_relevant.csv", [&](std::ostream& o) { write_poi_csv(o, relevant); });
  stage.write("ingest_summary.csv", [&](std::ostream& o) {
    o << "statistic,value\n";
    o << "records," << parsed.records.size() << '\n';
    o << "relevant," << relevant.size() << '\n';
    o << "unmapped," << parsed.records.size() - relevant.size() << '\n';
    o << "skipped_unrecognized," << parsed.skipped_unrecognized << '\n';
    o << "skipped_invalid," << parsed.skipped_invalid << '\n';
  });
}

void cmd_profiles(const PipelineConfig& c, Stage& stage) {
  const fs::path input = stage.path("pois_relevant.csv");
  require(input, "ingest-poi");
  const Grid grid(c.grid);
  auto in = open_in(input);
  const auto pois = parse_poi_csv(in);
  const CategoryMapping mapping = load_mapping(c);
  const PoiCellCounts counts = count_pois(grid, pois);
  if (counts.dropped_outside) stage.log(std::to_string(counts.dropped_outside) + " POIs outside the grid");
  const AggregationPlan plan = plan_aggregation(grid, counts, c.aggregation);
  const ActivityProfileMatrix profiles = build_profiles(plan, counts, mapping, c.idf_corpus);
  stage.write("aggregation.csv", [&](std::ostream& o) { write_aggregation_csv(o, plan); });
  stage.write("profiles.csv", [&](std::ostream& o) { write_profiles_csv(o, profiles); });
}

ActivityProfileMatrix load_profiles(const Stage& stage, const Grid& grid) {
  const fs::path p = stage.path("profiles.csv");
  require(p, "profiles");
  auto in = open_in(p);
  auto profiles = read_profiles_csv(in);
  if (profiles.values.rows() != grid.cell_count())
    throw DataError("profiles.csv has " + std::to_string(profiles.values.rows()) +
                    " cells but the grid has " + std::to_string(grid.cell_count()));
  return profiles;
}

std::vector<int> load_clusters(const Stage& stage, const Grid& grid) {
  const fs::path p = stage.path("clusters.csv");
  require(p, "cluster");
  auto in = open_in(p);
  return read_clusters_csv(in, grid.cell_count());
}

CellMatrix load_features(const Stage& stage, const Grid& grid) {
  const fs::path p = stage.path("timeline_features.csv");
  require(p, "timelines");
  return read_cell_matrix(p, grid.cell_count());
}

void cmd_cluster(const PipelineConfig& c, Stage& stage) {
  const Grid grid(c.grid);
  const auto profiles = load_profiles(stage, grid);
  const ClusterModel model = spectral_cluster(profiles, c.spectral);
  stage.log("k = " + std::to_string(model.k) + (model.k_clamped ? " (clamped)" : ""));
  stage.write("clusters.csv", [&](std::ostream& o) { write_clusters_csv(o, model); });
  stage.write("spectrum.csv", [&](std::ostream& o) { write_spectrum_csv(o, model); });
  stage.write("clusters.geojson", [&](std::ostream& o) { write_clusters_geojson(o, grid, model.labels); });
}

void cmd_timelines(const PipelineConfig& c, Stage& stage) {
  const Grid grid(c.grid);
  require_input(c.cdr_path, "CDR input");
  auto in = open_in(c.cdr_path);
  const auto records = parse_cdr_csv(in, c.month.utc_offset_min);
  const TimelineTensor tensor = build_tensor(records, grid.cell_count(), c.month);
  const NormalizedTimeline nt = zscore(tensor);
  const Matrix all = timeline_features(nt, c.timeline_features, c.month);
  CellMatrix features;
  features.cells = nt.unflagged_cells();
  features.values = select_rows(all, features.cells);
  stage.log(std::to_string(features.cells.size()) + " cells with usable timelines");
  stage.write("timelines_normalized.csv", [&](std::ostream& o) { write_normalized_csv(o, nt); });
  stage.write("timeline_flags.csv", [&](std::ostream& o) { write_timeline_flags_csv(o, nt); });
  stage.write("timeline_features.csv", [&](std::ostream& o) {
    write_cell_matrix(o, feature_names(c.timeline_features), features);
  });
}

void cmd_hopkins(const PipelineConfig& c, Stage& stage) {
  const Grid grid(c.grid);
  const auto profiles = load_profiles(stage, grid);
  const auto features = load_features(stage, grid);
  const auto usable = profiles.usable_cells();
  const HopkinsResult hp = hopkins(select_rows(profiles.values, usable), c.hopkins_m, c.seed);
  const HopkinsResult ht = hopkins(features.values, c.hopkins_m, c.seed);
  stage.log("H(profiles) = " + fixed(hp.h) + ", H(timelines) = " + fixed(ht.h));
  stage.write("hopkins.csv", [&](std::ostream& o) {
    write_stats_csv(o,
                    {{"hopkins", "profiles", hp.h},
                     {"hopkins_m", "profiles", static_cast<double>(hp.m)},
                     {"hopkins", "timelines", ht.h},
                     {"hopkins_m", "timelines", static_cast<double>(ht.m)}},
                    c.seed);
  });
}

void cmd_cca(const PipelineConfig& c, Stage& stage) {
  const Grid grid(c.grid);
  const auto profiles = load_profiles(stage, grid);
  const auto features = load_features(stage, grid);
  const auto labels = load_clusters(stage, grid);
  std::vector<std::size_t> prof_rows, feat_rows;
  std::vector<int> row_labels;
  for (std::size_t i = 0; i < features.cells.size(); ++i) {
    const std::size_t cell = features.cells[i];
    if (!profiles.usable(cell)) continue;
    prof_rows.push_back(cell);
    feat_rows.push_back(i);
    row_labels.push_back(labels[cell]);
  }
  const Matrix x = select_rows(profiles.values, prof_rows);
  const Matrix y = select_rows(features.values, feat_rows);
  std::vector<StatRow> rows;
  const CcaResult global = cca(x, y, c.cca_ridge);
  for (std::size_t j = 0; j < global.correlations.size(); ++j)
    rows.push_back({"cca_rho_" + std::to_string(j + 1), "global", global.correlations[j]});
  const ClusterCca per = cca_by_cluster(x, y, row_labels, c.cca_ridge);
  for (const auto& [label, res] : per.by_cluster)
    for (std::size_t j = 0; j < res.correlations.size(); ++j)
      rows.push_back({"cca_rho_" + std::to_string(j + 1), "S" + std::to_string(label + 1),
                      res.correlations[j]});
  for (int label : per.skipped) {
    stage.log("cluster S" + std::to_string(label + 1) + " too small for CCA; skipped");
    rows.push_back({"cca_skipped", "S" + std::to_string(label + 1), 1.0});
  }
  const DistanceCorrelation dc = distance_correlation(x, y, row_labels);
  rows.push_back({"distance_correlation", "global", dc.r});
  stage.log("rho_1 = " + fixed(global.correlations.empty() ? NAN : global.correlations[0]) +
            ", distance r = " + fixed(dc.r));
  stage.write("cca.csv", [&](std::ostream& o) { write_stats_csv(o, rows, c.seed); });
}

std::vector<int> target_labels(const PipelineConfig& c, const Stage& stage, const Grid& grid) {
  if (c.classify_target == "truth") {
    require_input(c.truth_path, "truth file");
    auto in = open_in(c.truth_path);
    return read_truth_csv(in, grid.cell_count());
  }
  return load_clusters(stage, grid);
}

void cmd_classify(const PipelineConfig& c, Stage& stage) {
  const Grid grid(c.grid);
  const auto features = load_features(stage, grid);
  const auto labels = target_labels(c, stage, grid);
  auto [x, y] = labelled_rows(features, labels);
  const Dataset data = make_dataset(std::move(x), y);
  std::ostringstream table;
  table << "model,cv_error,overall_acc,n,classes,folds,stratified\n";
  std::optional<EvalReport> eval;
  for (const auto& name : model_suite()) {
    const CvResult cv = cross_validate(data, model_spec(name, c), c.folds, c.seed);
    if (!cv.stratified) stage.log("a class has fewer rows than folds; used a plain shuffle");
    EvalReport report = evaluate(cv.predicted, cv.scores, data.y, data.class_count());
    report.cv_error = cv.cv_error;
    stage.log(name + ": cv_error " + fixed(cv.cv_error) + ", accuracy " + pct(report.overall_acc));
    table << name << ',' << csv::format_double(cv.cv_error) << ','
          << csv::format_double(report.overall_acc) << ',' << data.size() << ','
          << data.class_count() << ',' << c.folds << ',' << (cv.stratified ? 1 : 0) << '\n';
    if (name == c.eval_model) eval = std::move(report);
  }
  stage.write("classify.csv", [&](std::ostream& o) { o << table.str(); });
  stage.write("eval.csv", [&](std::ostream& o) { write_eval_csv(o, *eval, data.class_names); });
  stage.write("roc.csv", [&](std::ostream& o) { write_roc_csv(o, *eval, data.class_names); });
}

void cmd_landuse(const PipelineConfig& c, Stage& stage) {
  const Grid grid(c.grid);
  const auto clusters = load_clusters(stage, grid);
  const auto features = load_features(stage, grid);
  require_input(c.landuse_path, "land-use GeoJSON");
  auto in = open_in(c.landuse_path);
  const LanduseLabels lu = landuse_labels(grid, parse_landuse_geojson(in));

  std::vector<std::string> classes;
  for (const auto& l : lu.label)
    if (l != kUnknownLanduse) classes.push_back(l);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<int> lu_code(grid.cell_count(), -1);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), lu.label[i]);
    if (it != classes.end() && *it == lu.label[i]) lu_code[i] = static_cast<int>(it - classes.begin());
  }

  int k = 0;
  for (int l : clusters) k = std::max(k, l + 1);
  std::vector<std::vector<std::size_t>> cross(classes.size(), std::vector<std::size_t>(static_cast<std::size_t>(k)));
  std::vector<std::size_t> lu_total(classes.size()), cl_total(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    if (lu_code[i] < 0 || clusters[i] < 0) continue;
    ++cross[static_cast<std::size_t>(lu_code[i])][static_cast<std::size_t>(clusters[i])];
    ++lu_total[static_cast<std::size_t>(lu_code[i])];
    ++cl_total[static_cast<std::size_t>(clusters[i])];
  }

  std::vector<int> truth;
  if (fs::exists(c.truth_path)) {
    auto tin = open_in(c.truth_path);
    truth = read_truth_csv(tin, grid.cell_count());
  }

  const ModelSpec spec = model_spec(c.eval_model, c);
  std::ostringstream table;
  table << "features,target,model,n,classes,cv_error,accuracy\n";
  const auto compare = [&](const std::string& feature_name, const Matrix& x, const std::string& target,
                           const std::vector<int>& y) {
    const Dataset data = make_dataset(x, y);
    const CvResult cv = cross_validate(data, spec, c.folds, c.seed);
    const double acc = evaluate(cv.predicted, cv.scores, data.y, data.class_count()).overall_acc;
    stage.log(feature_name + " -> " + target + ": accuracy " + pct(acc));
    table << feature_name << ',' << target << ',' << c.eval_model << ',' << data.size() << ','
          << data.class_count() << ',' << csv::format_double(cv.cv_error) << ','
          << csv::format_double(acc) << '\n';
  };

  {
    auto [x, y] = labelled_rows(features, clusters);
    compare("timeline", x, "cluster", y);
  }
  {
    auto [x, y] = labelled_rows(features, lu_code);
    compare("timeline", x, "landuse", y);
  }
  std::vector<int> cl_feat, lu_feat, cl_y, lu_y, truth_y;
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    if (lu_code[i] < 0 || clusters[i] < 0) continue;
    cl_feat.push_back(clusters[i]);
    lu_feat.push_back(lu_code[i]);
    if (!truth.empty()) truth_y.push_back(truth[i]);
  }
  compare("landuse", one_hot_rows(lu_feat), "cluster", cl_feat);
  compare("cluster", one_hot_rows(cl_feat), "landuse", lu_feat);
  if (!truth.empty() &&
      std::none_of(truth_y.begin(), truth_y.end(), [](int t) { return t < 0; })) {
    compare("cluster", one_hot_rows(cl_feat), "truth", truth_y);
    compare("landuse", one_hot_rows(lu_feat), "truth", truth_y);
  }

  stage.write("landuse_labels.csv", [&](std::ostream& o) { write_landuse_csv(o, lu); });
  stage.write("landuse_crosstab.csv", [&](std::ostream& o) {
    o << "landuse,cluster,count,share_of_landuse,share_of_cluster\n";
    for (std::size_t a = 0; a < classes.size(); ++a)
      for (std::size_t b = 0; b < static_cast<std::size_t>(k); ++b)
        o << csv::escape(classes[a]) << ",S" << b + 1 << ',' << cross[a][b] << ','
          << csv::format_double(lu_total[a] ? static_cast<double>(cross[a][b]) / static_cast<double>(lu_total[a]) : 0.0)
          << ','
          << csv::format_double(cl_total[b] ? static_cast<double>(cross[a][b]) / static_cast<double>(cl_total[b]) : 0.0)
          << '\n';
  });
  stage.write("landuse_compare.csv", [&](std::ostream& o) { o << table.str(); });
}

void cmd_report(const PipelineConfig& c, Stage& stage) {
  const fs::path classify_path = stage.path("classify.csv");
  const fs::path eval_path = stage.path("eval.csv");
  require(classify_path, "classify");
  require(eval_path, "classify");

  std::ostringstream r;
  auto in = open_in(classify_path);
  std::string line;
  csv::read_line(in, line);
  std::vector<std::vector<std::string>> models;
  while (csv::read_line(in, line))
    if (!line.empty()) models.push_back(csv::split_line(line));
  if (models.empty()) throw DataError("classify.csv has no rows");
  const std::size_t classes = static_cast<std::size_t>(csv::parse_int(models[0][4]).value_or(1));
  char buf[256];

  r << "Predictive models (" << c.folds << "-fold cross-validation, target: " << c.classify_target
    << ", n = " << models[0][3] << ", classes = " << classes << ")\n";
  std::snprintf(buf, sizeof buf, "%-16s %12s %10s\n", "model", "cv_error", "accuracy");
  r << buf;
  for (const auto& m : models) {
    std::snprintf(buf, sizeof buf, "%-16s %12s %10s\n", m[0].c_str(),
                  fixed(csv::parse_double(m[1]).value_or(NAN)).c_str(),
                  pct(csv::parse_double(m[2]).value_or(NAN)).c_str());
    r << buf;
  }
  r << "chance level 1/k = " << pct(1.0 / static_cast<double>(classes)) << "\n\n";

  // Confusion matrix and per-class metrics of the evaluated model.
  auto ein = open_in(eval_path);
  csv::read_line(ein, line);
  std::vector<std::string> names;
  std::map<std::pair<std::string, std::string>, std::string> cells;
  std::map<std::string, std::string> summary;
  while (csv::read_line(ein, line)) {
    const auto f = csv::split_line(line);
    if (f.size() != 4) continue;
    if (f[0] == "summary") summary[f[1]] = f[3];
    if (f[0] == "confusion") {
      if (std::find(names.begin(), names.end(), f[1]) == names.end()) names.push_back(f[1]);
      cells[{f[1], f[2]}] = f[3];
    }
    if (f[0] == "class") cells[{f[1], f[2]}] = f[3];
  }
  r << "Confusion matrix (" << c.eval_model << ", fraction of all instances; rows truth)\n";
  std::snprintf(buf, sizeof buf, "%-8s", "");
  r << buf;
  for (const auto& n : names) {
    std::snprintf(buf, sizeof buf, "%9s", n.c_str());
    r << buf;
  }
  r << '\n';
  for (const auto& a : names) {
    std::snprintf(buf, sizeof buf, "%-8s", a.c_str());
    r << buf;
    for (const auto& b : names) {
      std::snprintf(buf, sizeof buf, "%9s", fixed(csv::parse_double(cells[{a, b}]).value_or(NAN)).c_str());
      r << buf;
    }
    r << '\n';
  }
  r << '\n';
  std::snprintf(buf, sizeof buf, "%-8s %10s %10s %10s %8s\n", "class", "precision", "recall", "F", "AUC");
  r << buf;
  const auto metric = [&](const std::string& cls, const std::string& key) {
    const auto v = csv::parse_double(cells[{cls, key}]);
    return v ? pct(*v) : std::string("NA");
  };
  for (const auto& n : names) {
    const auto auc = csv::parse_double(cells[{n, "auc"}]);
    std::snprintf(buf, sizeof buf, "%-8s %10s %10s %10s %8s\n", n.c_str(), metric(n, "precision").c_str(),
                  metric(n, "recall").c_str(), metric(n, "f_measure").c_str(),
                  auc ? fixed(*auc, 3).c_str() : "NA");
    r << buf;
  }
  r << "overall accuracy " << pct(csv::parse_double(summary["overall_acc"]).value_or(NAN)) << '\n';

  const auto stats_block = [&](const std::string& file, const std::string& title) {
    const fs::path p = stage.path(file);
    if (!fs::exists(p)) return;
    r << '\n' << title << '\n';
    for (const auto& row : read_stats_csv(p)) {
      std::snprintf(buf, sizeof buf, "%-22s %-10s %s\n", row.statistic.c_str(), row.scope.c_str(),
                    fixed(row.value).c_str());
      r << buf;
    }
  };
  stats_block("hopkins.csv", "Clustering tendency (Hopkins; small H = clustered)");
  stats_block("cca.csv", "Profile / timeline correlation");

  const fs::path lc = stage.path("landuse_compare.csv");
  if (fs::exists(lc)) {
    r << "\nLand-use comparison (" << c.eval_model << ")\n";
    auto lin = open_in(lc);
    csv::read_line(lin, line);
    while (csv::read_line(lin, line)) {
      const auto f = csv::split_line(line);
      if (f.size() != 7) continue;
      std::snprintf(buf, sizeof buf, "%-10s -> %-8s accuracy %s\n", f[0].c_str(), f[1].c_str(),
                    pct(csv::parse_double(f[6]).value_or(NAN)).c_str());
      r << buf;
    }
  }
  stage.write("report.txt", [&](std::ostream& o) { o << r.str(); });
}

}  // namespace

void run_command(std::string_view command, const PipelineConfig& config, const RunOptions& options) {
  static const std::map<std::string, void (*)(const PipelineConfig&, Stage&), std::less<>> table = {
      {"synth", cmd_synth},         {"ingest-poi", cmd_ingest}, {"profiles", cmd_profiles},
      {"cluster", cmd_cluster},     {"timelines", cmd_timelines}, {"hopkins", cmd_hopkins},
      {"cca", cmd_cca},             {"classify", cmd_classify}, {"landuse-compare", cmd_landuse},
      {"report", cmd_report},
  };
  const auto it = table.find(command);
  if (it == table.end()) throw ConfigError("unknown command '" + std::string(command) + "'");
  Stage stage(config, it->first, options);
  it->second(config, stage);
  stage.finish();
}

}  // namespace urbanprof
