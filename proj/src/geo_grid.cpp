#include "urbanprof/geo_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "urbanprof/errors.hpp"

namespace urbanprof {

namespace {

constexpr double kEarthRadiusM = 6371008.8;

// Index of the half-open interval [edge(i), edge(i+1)) holding `value`, or -1.
template <typename EdgeFn>
long locate(double value, double estimate, std::size_t count, EdgeFn edge) {
  if (!std::isfinite(value) || value < edge(0) || value >= edge(count)) return -1;
  long idx = std::isfinite(estimate) ? static_cast<long>(std::floor(estimate)) : 0;
  idx = std::clamp<long>(idx, 0, static_cast<long>(count) - 1);
  // The estimate can be off by one from rounding in the degree conversion.
  while (idx > 0 && value < edge(static_cast<std::size_t>(idx))) --idx;
  while (idx + 1 < static_cast<long>(count) && value >= edge(static_cast<std::size_t>(idx + 1)))
    ++idx;
  return idx;
}

}  // namespace

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  if (spec.n_cols < 1 || spec.n_rows < 1)
    throw ConfigError("grid must have at least one row and one column");
  if (!(spec.cell_width_m > 0.0) || !(spec.cell_height_m > 0.0))
    throw ConfigError("grid cell dimensions must be positive");
  if (!std::isfinite(spec.origin_lon) || !std::isfinite(spec.origin_lat) ||
      std::abs(spec.origin_lat) >= 89.0)
    throw ConfigError("grid origin must be finite and away from the poles");
  m_per_deg_lat_ = kEarthRadiusM * std::numbers::pi / 180.0;
  m_per_deg_lon_ = m_per_deg_lat_ * std::cos(spec.origin_lat * std::numbers::pi / 180.0);
}

CellId Grid::cell_at(std::size_t row, std::size_t col) const {
  if (row >= spec_.n_rows || col >= spec_.n_cols)
    throw DataError("cell (" + std::to_string(row) + "," + std::to_string(col) +
                    ") outside grid");
  return CellId{row * spec_.n_cols + col};
}

void Grid::check(CellId cell) const {
  if (!contains(cell))
    throw DataError("cell id " + std::to_string(cell.index) + " out of range [0," +
                    std::to_string(cell_count()) + ")");
}

LocalPoint Grid::to_local(LonLat p) const {
  return {(p.lon - spec_.origin_lon) * m_per_deg_lon_, (p.lat - spec_.origin_lat) * m_per_deg_lat_};
}

LonLat Grid::to_lonlat(LocalPoint p) const {
  return {spec_.origin_lon + p.x_m / m_per_deg_lon_, spec_.origin_lat + p.y_m / m_per_deg_lat_};
}

double Grid::lon_edge(std::size_t col) const {
  return spec_.origin_lon + static_cast<double>(col) * spec_.cell_width_m / m_per_deg_lon_;
}

double Grid::lat_edge(std::size_t row) const {
  return spec_.origin_lat + static_cast<double>(row) * spec_.cell_height_m / m_per_deg_lat_;
}

std::optional<CellId> Grid::cell_of_point(LonLat p) const {
  const LocalPoint local = to_local(p);
  const long col = locate(p.lon, local.x_m / spec_.cell_width_m, spec_.n_cols,
                          [this](std::size_t c) { return lon_edge(c); });
  const long row = locate(p.lat, local.y_m / spec_.cell_height_m, spec_.n_rows,
                          [this](std::size_t r) { return lat_edge(r); });
  if (col < 0 || row < 0) return std::nullopt;
  return CellId{static_cast<std::size_t>(row) * spec_.n_cols + static_cast<std::size_t>(col)};
}

std::optional<CellId> Grid::cell_of_local(LocalPoint p) const {
  const double w = spec_.cell_width_m;
  const double h = spec_.cell_height_m;
  const long col = locate(p.x_m, p.x_m / w, spec_.n_cols,
                          [w](std::size_t c) { return static_cast<double>(c) * w; });
  const long row = locate(p.y_m, p.y_m / h, spec_.n_rows,
                          [h](std::size_t r) { return static_cast<double>(r) * h; });
  if (col < 0 || row < 0) return std::nullopt;
  return CellId{static_cast<std::size_t>(row) * spec_.n_cols + static_cast<std::size_t>(col)};
}

LocalPoint Grid::centroid_local(CellId cell) const {
  check(cell);
  return {(static_cast<double>(col_of(cell)) + 0.5) * spec_.cell_width_m,
          (static_cast<double>(row_of(cell)) + 0.5) * spec_.cell_height_m};
}

LonLat Grid::centroid(CellId cell) const { return to_lonlat(centroid_local(cell)); }

double point_rect_distance(LocalPoint p, double x0, double y0, double x1, double y1) {
  const double dx = std::max({x0 - p.x_m, 0.0, p.x_m - x1});
  const double dy = std::max({y0 - p.y_m, 0.0, p.y_m - y1});
  return std::hypot(dx, dy);
}

std::vector<CellId> Grid::cells_within_radius(CellId cell, double radius_m) const {
  check(cell);
  if (!(radius_m >= 0.0)) throw ConfigError("radius must be non-negative");
  const LocalPoint c = centroid_local(cell);
  const double w = spec_.cell_width_m;
  const double h = spec_.cell_height_m;
  // Candidate window; the exact test below decides membership.
  const auto span_of = [](double center, double r, double size, std::size_t count) {
    const double lo = std::floor((center - r) / size) - 1.0;
    const double hi = std::floor((center + r) / size) + 1.0;
    const double max = static_cast<double>(count) - 1.0;
    return std::pair<std::size_t, std::size_t>{
        static_cast<std::size_t>(std::clamp(lo, 0.0, max)),
        static_cast<std::size_t>(std::clamp(hi, 0.0, max))};
  };
  const auto [c0, c1] = span_of(c.x_m, radius_m, w, spec_.n_cols);
  const auto [r0, r1] = span_of(c.y_m, radius_m, h, spec_.n_rows);
  std::vector<CellId> out;
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t col = c0; col <= c1; ++col) {
      const double x0 = static_cast<double>(col) * w;
      const double y0 = static_cast<double>(r) * h;
      if (point_rect_distance(c, x0, y0, x0 + w, y0 + h) <= radius_m)
        out.push_back(CellId{r * spec_.n_cols + col});
    }
  }
  return out;
}

std::array<LonLat, 5> Grid::cell_ring(CellId cell) const {
  check(cell);
  const std::size_t r = row_of(cell);
  const std::size_t c = col_of(cell);
  const LonLat sw{lon_edge(c), lat_edge(r)};
  const LonLat se{lon_edge(c + 1), lat_edge(r)};
  const LonLat ne{lon_edge(c + 1), lat_edge(r + 1)};
  const LonLat nw{lon_edge(c), lat_edge(r + 1)};
  return {sw, se, ne, nw, sw};
}

}  // namespace urbanprof
