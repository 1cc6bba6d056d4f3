#include "urbanprof/activity_profiles.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/kernels.hpp"

namespace urbanprof {

std::size_t PoiCellCounts::feature_index(std::string_view feature) const {
  const auto it = std::lower_bound(features.begin(), features.end(), feature);
  if (it == features.end() || *it != feature) return features.size();
  return static_cast<std::size_t>(it - features.begin());
}

std::size_t PoiCellCounts::document_frequency(std::size_t feature) const {
  std::size_t df = 0;
  for (std::size_t l = 0; l < cell_count; ++l)
    if (count(l, feature) > 0) ++df;
  return df;
}

std::size_t PoiCellCounts::occupied_cells() const {
  return static_cast<std::size_t>(
      std::count_if(totals.begin(), totals.end(), [](std::uint32_t t) { return t > 0; }));
}

PoiCellCounts count_pois(const Grid& grid, std::span<const PoiRecord> pois) {
  PoiCellCounts out;
  out.cell_count = grid.cell_count();
  for (const auto& p : pois) out.features.push_back(p.feature);
  std::sort(out.features.begin(), out.features.end());
  out.features.erase(std::unique(out.features.begin(), out.features.end()), out.features.end());
  out.counts.assign(out.cell_count * out.features.size(), 0);
  out.totals.assign(out.cell_count, 0);
  for (const auto& p : pois) {
    const auto cell = grid.cell_of_point({p.lon, p.lat});
    if (!cell) {
      ++out.dropped_outside;
      continue;
    }
    ++out.counts[cell->index * out.features.size() + out.feature_index(p.feature)];
    ++out.totals[cell->index];
  }
  // Vocabulary restricted to features that landed inside the grid.
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < out.features.size(); ++f)
    if (out.document_frequency(f) > 0) keep.push_back(f);
  if (keep.size() != out.features.size()) {
    std::vector<std::string> features;
    std::vector<std::uint32_t> counts(out.cell_count * keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) {
      features.push_back(out.features[keep[j]]);
      for (std::size_t l = 0; l < out.cell_count; ++l)
        counts[l * keep.size() + j] = out.count(l, keep[j]);
    }
    out.features = std::move(features);
    out.counts = std::move(counts);
  }
  return out;
}

AggregationPlan plan_aggregation(const Grid& grid, const PoiCellCounts& counts,
                                 const AggregationParams& params) {
  if (params.h < 1) throw ConfigError("aggregation threshold h must be >= 1");
  if (!(params.radius_step_m > 0.0)) throw ConfigError("radius_step_m must be positive");
  if (!(params.radius_cap_m >= 0.0)) throw ConfigError("radius_cap_m must be non-negative");
  if (counts.cell_count != grid.cell_count())
    throw DataError("POI counts do not match the grid");
  const std::size_t n = grid.cell_count();
  AggregationPlan plan;
  plan.radius_m.resize(n);
  plan.members.resize(n);
  plan.poi_total.resize(n);
  plan.capped.assign(n, 0);
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 32)
  for (std::ptrdiff_t ii = 0; ii < nn; ++ii) {
    const auto l = static_cast<std::size_t>(ii);
    for (std::size_t step = 0;; ++step) {
      const double radius =
          std::min(static_cast<double>(step) * params.radius_step_m, params.radius_cap_m);
      std::vector<CellId> cells = grid.cells_within_radius(CellId{l}, radius);
      std::uint64_t total = 0;
      for (CellId c : cells) total += counts.totals[c.index];
      const bool at_cap = radius >= params.radius_cap_m;
      if (total >= params.h || at_cap) {
        plan.radius_m[l] = radius;
        plan.members[l].clear();
        for (CellId c : cells) plan.members[l].push_back(c.index);
        plan.poi_total[l] = total;
        plan.capped[l] = total < params.h ? 1 : 0;
        break;
      }
    }
  }
  return plan;
}

namespace {

std::size_t corpus_size(const PoiCellCounts& counts, IdfCorpus corpus) {
  return corpus == IdfCorpus::all ? counts.cell_count : counts.occupied_cells();
}

std::uint32_t max_count(const PoiCellCounts& counts, std::size_t cell) {
  std::uint32_t m = 0;
  for (std::size_t f = 0; f < counts.features.size(); ++f) m = std::max(m, counts.count(cell, f));
  return m;
}

}  // namespace

double tf_idf(const PoiCellCounts& counts, std::size_t feature, std::size_t cell,
              IdfCorpus corpus) {
  if (feature >= counts.features.size()) throw DataError("unknown feature index");
  if (cell >= counts.cell_count) throw DataError("cell id out of range");
  if (counts.totals[cell] == 0)
    throw DataError("tf-idf undefined for empty cell " + std::to_string(cell));
  const std::size_t df = counts.document_frequency(feature);
  if (df == 0) throw DataError("feature '" + counts.features[feature] + "' never occurs");
  const double tf = static_cast<double>(counts.count(cell, feature)) /
                    static_cast<double>(max_count(counts, cell));
  return tf * std::log(static_cast<double>(corpus_size(counts, corpus)) / static_cast<double>(df));
}

Matrix tf_idf_table(const PoiCellCounts& counts, IdfCorpus corpus) {
  const std::size_t nf = counts.features.size();
  std::vector<double> idf(nf);
  const double size = static_cast<double>(corpus_size(counts, corpus));
  for (std::size_t f = 0; f < nf; ++f)
    idf[f] = std::log(size / static_cast<double>(counts.document_frequency(f)));
  Matrix table(counts.cell_count, nf);
  for (std::size_t l = 0; l < counts.cell_count; ++l) {
    if (counts.totals[l] == 0) continue;
    const double top = static_cast<double>(max_count(counts, l));
    for (std::size_t f = 0; f < nf; ++f)
      table(l, f) = static_cast<double>(counts.count(l, f)) / top * idf[f];
  }
  return table;
}

std::vector<std::size_t> ActivityProfileMatrix::usable_cells() const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < flags.size(); ++l)
    if (usable(l)) out.push_back(l);
  return out;
}

ActivityProfileMatrix build_profiles(const AggregationPlan& plan, const PoiCellCounts& counts,
                                     const CategoryMapping& mapping, IdfCorpus corpus) {
  const std::size_t n = counts.cell_count;
  if (plan.members.size() != n) throw DataError("aggregation plan does not match POI counts");
  const Matrix weights = tf_idf_table(counts, corpus);
  // Per-feature category shares, resolved once.
  Matrix shares(counts.features.size(), kActivityCount);
  for (std::size_t f = 0; f < counts.features.size(); ++f) {
    const auto s = mapping.shares(counts.features[f]);
    if (s.empty()) throw DataError("feature '" + counts.features[f] + "' is not in the mapping");
    for (const auto& cs : s) shares(f, static_cast<std::size_t>(cs.category)) += cs.share;
  }
  // Per-cell category weights before neighborhood pooling.
  Matrix per_cell(n, kActivityCount);
  for (std::size_t l = 0; l < n; ++l) {
    if (counts.totals[l] == 0) continue;
    auto row = per_cell.row(l);
    for (std::size_t f = 0; f < counts.features.size(); ++f) {
      const double w = weights(l, f);
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < kActivityCount; ++c) row[c] += w * shares(f, c);
    }
  }
  ActivityProfileMatrix out;
  out.values = kernels::omp::sum_member_rows(per_cell, plan.members);
  out.flags.assign(n, kProfileOk);
  for (std::size_t l = 0; l < n; ++l) {
    if (plan.poi_total[l] == 0) out.flags[l] |= kProfileEmpty;
    if (plan.capped[l]) out.flags[l] |= kProfileCapped;
    if (plan.poi_total[l] > 0 && norm(out.values.row(l)) == 0.0) out.flags[l] |= kProfileZero;
  }
  return out;
}

std::string profile_flags_text(std::uint8_t flags) {
  if (flags == kProfileOk) return "ok";
  std::string out;
  const auto add = [&out](const char* name) {
    if (!out.empty()) out += '|';
    out += name;
  };
  if (flags & kProfileEmpty) add("empty");
  if (flags & kProfileCapped) add("capped");
  if (flags & kProfileZero) add("zero");
  return out;
}

namespace {

std::uint8_t parse_profile_flags(std::string_view text, std::size_t row) {
  text = csv::trim(text);
  if (text == "ok") return kProfileOk;
  std::uint8_t flags = 0;
  while (!text.empty()) {
    const auto bar = text.find('|');
    const auto part = text.substr(0, bar);
    if (part == "empty") flags |= kProfileEmpty;
    else if (part == "capped") flags |= kProfileCapped;
    else if (part == "zero") flags |= kProfileZero;
    else throw DataError("profiles row " + std::to_string(row) + ": unknown flag '" + std::string(part) + "'");
    if (bar == std::string_view::npos) break;
    text.remove_prefix(bar + 1);
  }
  return flags;
}

std::string profile_header() {
  std::string h = "cell_id";
  for (Activity a : all_activities()) {
    h += ',';
    h += activity_name(a);
  }
  return h + ",flags";
}

}  // namespace

void write_profiles_csv(std::ostream& out, const ActivityProfileMatrix& profiles) {
  out << profile_header() << '\n';
  for (std::size_t l = 0; l < profiles.values.rows(); ++l) {
    out << l;
    for (double v : profiles.values.row(l)) out << ',' << csv::format_double(v);
    out << ',' << profile_flags_text(profiles.flags[l]) << '\n';
  }
}

ActivityProfileMatrix read_profiles_csv(std::istream& in) {
  std::string line;
  if (!csv::read_line(in, line) || line != profile_header())
    throw DataError("profiles CSV row 1: unexpected header");
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> flags;
  std::size_t row = 1;
  while (csv::read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    const auto where = "profiles CSV row " + std::to_string(row);
    if (fields.size() != kActivityCount + 2) throw DataError(where + ": wrong field count");
    const auto id = csv::parse_int(fields[0]);
    if (!id || *id != static_cast<std::int64_t>(rows.size()))
      throw DataError(where + ": cell ids must be consecutive from 0");
    std::vector<double> values;
    for (std::size_t c = 0; c < kActivityCount; ++c) {
      const auto v = csv::parse_double(fields[c + 1]);
      if (!v || !std::isfinite(*v) || *v < 0.0) throw DataError(where + ": invalid weight");
      values.push_back(*v);
    }
    rows.push_back(std::move(values));
    flags.push_back(parse_profile_flags(fields.back(), row));
  }
  ActivityProfileMatrix out;
  out.values = Matrix(rows.size(), kActivityCount);
  for (std::size_t l = 0; l < rows.size(); ++l)
    std::copy(rows[l].begin(), rows[l].end(), out.values.row(l).begin());
  out.flags = std::move(flags);
  return out;
}

void write_aggregation_csv(std::ostream& out, const AggregationPlan& plan) {
  out << "cell_id,radius_m,member_count,poi_total,capped\n";
  for (std::size_t l = 0; l < plan.radius_m.size(); ++l)
    out << l << ',' << csv::format_double(plan.radius_m[l]) << ',' << plan.members[l].size() << ','
        << plan.poi_total[l] << ',' << static_cast<int>(plan.capped[l]) << '\n';
}

}  // namespace urbanprof
