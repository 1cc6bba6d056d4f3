#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace urbanprof::csv {

/// Splits one CSV line. Double-quoted fields may contain commas and doubled
/// quotes; no embedded newlines.
std::vector<std::string> split_line(std::string_view line);

/// Quotes the field when it contains a comma, quote or leading/trailing space.
std::string escape(std::string_view field);

/// Shortest representation that round-trips through parse_double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);

/// Reads the next line, stripping a trailing '\r'. Returns false at EOF.
bool read_line(std::istream& in, std::string& line);

/// Joins already-escaped fields with commas.
std::string join(const std::vector<std::string>& fields);

}  // namespace urbanprof::csv
