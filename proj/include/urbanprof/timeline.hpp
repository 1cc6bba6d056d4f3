#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "urbanprof/geo_grid.hpp"
#include "urbanprof/matrix.hpp"

namespace urbanprof {

inline constexpr std::size_t kSlotCount = 8;

/// Start minute (local time of day) of each coarse time slot:
/// 00-07, 07-09, 09-11, 11-14, 14-17, 17-19, 19-21, 21-24.
inline constexpr std::array<int, kSlotCount> kSlotStartMinute = {
    0, 7 * 60, 9 * 60, 11 * 60, 14 * 60, 17 * 60, 19 * 60, 21 * 60};

/// One aggregated CDR row. `timestamp` is UTC minutes since the Unix epoch.
struct CdrRecord {
  CellId cell;
  std::int64_t timestamp = 0;
  double sms_in = 0.0;
  double sms_out = 0.0;
  double call_in = 0.0;
  double call_out = 0.0;
  double internet = 0.0;

  double total() const { return sms_in + sms_out + call_in + call_out + internet; }
};

/// Calendar month analysed, with the fixed UTC offset of local time.
struct MonthSpec {
  int year = 2013;
  unsigned month = 11;
  int utc_offset_min = 60;

  std::size_t days() const;
  /// Local weekday of zero-based day index: 0 = Sunday ... 6 = Saturday.
  unsigned weekday(std::size_t day) const;
  bool is_weekend(std::size_t day) const;
};

/// Slot index of a local minute-of-day in [0, 1440).
std::size_t slot_of(int minute_of_day);

/// Parses local `YYYY-MM-DDTHH:MM` and converts to UTC epoch minutes.
/// Returns false if the text is not a valid timestamp.
bool parse_local_timestamp(std::string_view text, int utc_offset_min, std::int64_t& out);
std::string format_local_timestamp(std::int64_t utc_minutes, int utc_offset_min);

/// Header `cell_id,timestamp,sms_in,sms_out,call_in,call_out,internet`.
/// Blank numeric fields read as 0. Timestamps are local at `utc_offset_min`.
std::vector<CdrRecord> parse_cdr_csv(std::istream& in, int utc_offset_min);
void write_cdr_csv(std::ostream& out, std::span<const CdrRecord> records, int utc_offset_min);

/// n x 8 x d activity totals, laid out [cell][slot][day].
struct TimelineTensor {
  std::size_t cells = 0;
  std::size_t days = 0;
  std::vector<double> raw;

  double& at(std::size_t cell, std::size_t slot, std::size_t day) {
    return raw[(cell * kSlotCount + slot) * days + day];
  }
  double at(std::size_t cell, std::size_t slot, std::size_t day) const {
    return raw[(cell * kSlotCount + slot) * days + day];
  }
  std::span<const double> cell_values(std::size_t cell) const {
    return {raw.data() + cell * kSlotCount * days, kSlotCount * days};
  }
};

/// Sums all channels of each record into its (cell, slot, day) bin. Throws
/// DataError for records outside the month or the grid.
TimelineTensor build_tensor(std::span<const CdrRecord> records, std::size_t cell_count,
                            const MonthSpec& month);

/// Per-cell z-score over all slot x day entries (population stdev).
struct NormalizedTimeline {
  std::size_t cells = 0;
  std::size_t days = 0;
  std::vector<double> z;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<std::uint8_t> flagged;  ///< constant activity; z row is 0

  double at(std::size_t cell, std::size_t slot, std::size_t day) const {
    return z[(cell * kSlotCount + slot) * days + day];
  }
  std::vector<std::size_t> unflagged_cells() const;
};

NormalizedTimeline zscore(const TimelineTensor& t);

enum class FeatureMode { mean_day, weekday_weekend };

/// mean_day: 8 per-slot means over all days. weekday_weekend: 8 weekday
/// means followed by 8 weekend means.
Matrix timeline_features(const NormalizedTimeline& nt, FeatureMode mode, const MonthSpec& month);

std::size_t feature_count(FeatureMode mode);

void write_normalized_csv(std::ostream& out, const NormalizedTimeline& nt);
void write_timeline_flags_csv(std::ostream& out, const NormalizedTimeline& nt);

}  // namespace urbanprof
