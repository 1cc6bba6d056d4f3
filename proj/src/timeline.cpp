#include "urbanprof/timeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"

namespace urbanprof {

namespace {

using namespace std::chrono;

constexpr std::int64_t kMinutesPerDay = 24 * 60;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t days_since_epoch(int y, unsigned m, unsigned d) {
  return sys_days{year{y} / month{m} / day{d}}.time_since_epoch().count();
}

}  // namespace

std::size_t MonthSpec::days() const {
  const std::chrono::year_month_day_last last{std::chrono::year{year} / std::chrono::month{month} /
                                              std::chrono::last};
  if (!last.ok()) throw ConfigError("invalid analysis month");
  return static_cast<unsigned>(last.day());
}

unsigned MonthSpec::weekday(std::size_t day) const {
  const sys_days first{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{1}};
  return std::chrono::weekday{first + std::chrono::days{static_cast<int>(day)}}.c_encoding();
}

bool MonthSpec::is_weekend(std::size_t day) const {
  const unsigned wd = weekday(day);
  return wd == 0 || wd == 6;
}

std::size_t slot_of(int minute_of_day) {
  if (minute_of_day < 0 || minute_of_day >= kMinutesPerDay)
    throw DataError("minute of day out of range");
  std::size_t slot = 0;
  while (slot + 1 < kSlotCount && minute_of_day >= kSlotStartMinute[slot + 1]) ++slot;
  return slot;
}

bool parse_local_timestamp(std::string_view text, int utc_offset_min, std::int64_t& out) {
  text = csv::trim(text);
  // YYYY-MM-DDTHH:MM (a space separator is accepted too)
  if (text.size() != 16 || text[4] != '-' || text[7] != '-' ||
      (text[10] != 'T' && text[10] != ' ') || text[13] != ':')
    return false;
  const auto num = [&](std::size_t pos, std::size_t len) -> std::optional<std::int64_t> {
    for (std::size_t i = pos; i < pos + len; ++i)
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
    return csv::parse_int(text.substr(pos, len));
  };
  const auto y = num(0, 4), mo = num(5, 2), d = num(8, 2), h = num(11, 2), mi = num(14, 2);
  if (!y || !mo || !d || !h || !mi) return false;
  const year_month_day ymd{year{static_cast<int>(*y)}, month{static_cast<unsigned>(*mo)},
                           day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h > 23 || *mi > 59) return false;
  const std::int64_t local =
      sys_days{ymd}.time_since_epoch().count() * kMinutesPerDay + *h * 60 + *mi;
  out = local - utc_offset_min;
  return true;
}

std::string format_local_timestamp(std::int64_t utc_minutes, int utc_offset_min) {
  const std::int64_t local = utc_minutes + utc_offset_min;
  const std::int64_t day_index = floor_div(local, kMinutesPerDay);
  const std::int64_t minute = local - day_index * kMinutesPerDay;
  const year_month_day ymd{sys_days{std::chrono::days{day_index}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(minute / 60), static_cast<int>(minute % 60));
  return buf;
}

std::vector<CdrRecord> parse_cdr_csv(std::istream& in, int utc_offset_min) {
  std::vector<CdrRecord> out;
  std::string line;
  if (!csv::read_line(in, line)) return out;
  if (csv::trim(line) != "cell_id,timestamp,sms_in,sms_out,call_in,call_out,internet")
    throw DataError(
        "CDR CSV row 1: header must be 'cell_id,timestamp,sms_in,sms_out,call_in,call_out,internet'");
  std::size_t row = 1;
  while (csv::read_line(in, line)) {
    ++row;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_line(line);
    const auto where = "CDR CSV row " + std::to_string(row);
    if (fields.size() != 7) throw DataError(where + ": expected 7 fields");
    const auto cell = csv::parse_int(fields[0]);
    if (!cell || *cell < 0) throw DataError(where + ": invalid cell_id");
    CdrRecord rec;
    rec.cell = CellId{static_cast<std::size_t>(*cell)};
    if (!parse_local_timestamp(fields[1], utc_offset_min, rec.timestamp))
      throw DataError(where + ": unparsable timestamp '" + fields[1] + "'");
    double* channels[] = {&rec.sms_in, &rec.sms_out, &rec.call_in, &rec.call_out, &rec.internet};
    for (std::size_t c = 0; c < 5; ++c) {
      if (csv::trim(fields[c + 2]).empty()) continue;  // blank means no activity
      const auto v = csv::parse_double(fields[c + 2]);
      if (!v || !std::isfinite(*v) || *v < 0.0)
        throw DataError(where + ": invalid count '" + fields[c + 2] + "'");
      *channels[c] = *v;
    }
    out.push_back(rec);
  }
  return out;
}

void write_cdr_csv(std::ostream& out, std::span<const CdrRecord> records, int utc_offset_min) {
  out << "cell_id,timestamp,sms_in,sms_out,call_in,call_out,internet\n";
  for (const auto& r : records)
    out << r.cell.index << ',' << format_local_timestamp(r.timestamp, utc_offset_min) << ','
        << csv::format_double(r.sms_in) << ',' << csv::format_double(r.sms_out) << ','
        << csv::format_double(r.call_in) << ',' << csv::format_double(r.call_out) << ','
        << csv::format_double(r.internet) << '\n';
}

TimelineTensor build_tensor(std::span<const CdrRecord> records, std::size_t cell_count,
                            const MonthSpec& month) {
  TimelineTensor t;
  t.cells = cell_count;
  t.days = month.days();
  t.raw.assign(cell_count * kSlotCount * t.days, 0.0);
  const std::int64_t first_day = days_since_epoch(month.year, month.month, 1);
  // Sequential accumulation keeps the summation order of each bin fixed.
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.cell.index >= cell_count)
      throw DataError("CDR record " + std::to_string(i + 1) + ": unknown cell id " +
                      std::to_string(r.cell.index));
    const std::int64_t local = r.timestamp + month.utc_offset_min;
    const std::int64_t day_index = floor_div(local, kMinutesPerDay) - first_day;
    if (day_index < 0 || day_index >= static_cast<std::int64_t>(t.days))
      throw DataError("CDR record " + std::to_string(i + 1) + " lies outside the analysis month");
    const auto minute = static_cast<int>(local - floor_div(local, kMinutesPerDay) * kMinutesPerDay);
    t.at(r.cell.index, slot_of(minute), static_cast<std::size_t>(day_index)) += r.total();
  }
  return t;
}

std::vector<std::size_t> NormalizedTimeline::unflagged_cells() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cells; ++i)
    if (!flagged[i]) out.push_back(i);
  return out;
}

NormalizedTimeline zscore(const TimelineTensor& t) {
  NormalizedTimeline nt;
  nt.cells = t.cells;
  nt.days = t.days;
  nt.z.assign(t.raw.size(), 0.0);
  nt.mu.assign(t.cells, 0.0);
  nt.sigma.assign(t.cells, 0.0);
  nt.flagged.assign(t.cells, 0);
  const std::size_t width = kSlotCount * t.days;
  const auto n = static_cast<std::ptrdiff_t>(t.cells);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto values = t.cell_values(i);
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mu = width ? sum / static_cast<double>(width) : 0.0;
    double ss = 0.0;
    for (double v : values) ss += (v - mu) * (v - mu);
    const double sigma = width ? std::sqrt(ss / static_cast<double>(width)) : 0.0;
    nt.mu[i] = mu;
    nt.sigma[i] = sigma;
    if (!(sigma > 1e-12 * std::max(1.0, std::abs(mu)))) {
      nt.flagged[i] = 1;
      continue;
    }
    double* z = nt.z.data() + i * width;
    for (std::size_t k = 0; k < width; ++k) z[k] = (values[k] - mu) / sigma;
  }
  return nt;
}

std::size_t feature_count(FeatureMode mode) {
  return mode == FeatureMode::mean_day ? kSlotCount : 2 * kSlotCount;
}

Matrix timeline_features(const NormalizedTimeline& nt, FeatureMode mode, const MonthSpec& month) {
  if (month.days() != nt.days) throw DataError("timeline length does not match the month");
  Matrix out(nt.cells, feature_count(mode));
  std::vector<std::uint8_t> weekend(nt.days);
  std::size_t n_weekend = 0;
  for (std::size_t k = 0; k < nt.days; ++k) {
    weekend[k] = month.is_weekend(k) ? 1 : 0;
    n_weekend += weekend[k];
  }
  const std::size_t n_weekday = nt.days - n_weekend;
  for (std::size_t i = 0; i < nt.cells; ++i) {
    for (std::size_t j = 0; j < kSlotCount; ++j) {
      double all = 0.0, wd = 0.0, we = 0.0;
      for (std::size_t k = 0; k < nt.days; ++k) {
        const double v = nt.at(i, j, k);
        all += v;
        (weekend[k] ? we : wd) += v;
      }
      if (mode == FeatureMode::mean_day) {
        out(i, j) = all / static_cast<double>(nt.days);
      } else {
        out(i, j) = n_weekday ? wd / static_cast<double>(n_weekday) : 0.0;
        out(i, kSlotCount + j) = n_weekend ? we / static_cast<double>(n_weekend) : 0.0;
      }
    }
  }
  return out;
}

void write_normalized_csv(std::ostream& out, const NormalizedTimeline& nt) {
  out << "cell_id,slot,day,z\n";
  for (std::size_t i = 0; i < nt.cells; ++i) {
    if (nt.flagged[i]) continue;
    for (std::size_t j = 0; j < kSlotCount; ++j)
      for (std::size_t k = 0; k < nt.days; ++k)
        out << i << ',' << j << ',' << k << ',' << csv::format_double(nt.at(i, j, k)) << '\n';
  }
}

void write_timeline_flags_csv(std::ostream& out, const NormalizedTimeline& nt) {
  out << "cell_id,mu,sigma,flagged\n";
  for (std::size_t i = 0; i < nt.cells; ++i)
    out << i << ',' << csv::format_double(nt.mu[i]) << ',' << csv::format_double(nt.sigma[i])
        << ',' << static_cast<int>(nt.flagged[i]) << '\n';
}

}  // namespace urbanprof
