#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <vector>

namespace urbanprof {

/// Rectangular analysis grid anchored at its south-west corner.
struct GridSpec {
  double origin_lon = 0.0;  ///< degrees
  double origin_lat = 0.0;  ///< degrees
  double cell_width_m = 235.0;
  double cell_height_m = 235.0;
  std::size_t n_cols = 100;
  std::size_t n_rows = 100;

  std::size_t cell_count() const { return n_cols * n_rows; }
};

/// Row-major cell index: row = index / n_cols, col = index % n_cols.
/// Row 0 is the southernmost row.
struct CellId {
  std::size_t index = 0;
  friend auto operator<=>(const CellId&, const CellId&) = default;
};

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

/// Local planar coordinates in meters relative to the grid origin.
struct LocalPoint {
  double x_m = 0.0;
  double y_m = 0.0;
};

/// Validated grid with a local equirectangular projection anchored at the
/// origin (meters-per-degree evaluated at the origin latitude). Immutable.
class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  std::size_t cell_count() const { return spec_.cell_count(); }
  std::size_t n_cols() const { return spec_.n_cols; }
  std::size_t n_rows() const { return spec_.n_rows; }

  CellId cell_at(std::size_t row, std::size_t col) const;
  std::size_t row_of(CellId cell) const { return cell.index / spec_.n_cols; }
  std::size_t col_of(CellId cell) const { return cell.index % spec_.n_cols; }
  bool contains(CellId cell) const { return cell.index < cell_count(); }

  LocalPoint to_local(LonLat p) const;
  LonLat to_lonlat(LocalPoint p) const;

  /// Cell containing the point; intervals are [lower, upper) on both axes.
  std::optional<CellId> cell_of_point(LonLat p) const;
  std::optional<CellId> cell_of_local(LocalPoint p) const;

  /// Longitude of the western edge of column `col` (col == n_cols gives the
  /// eastern grid boundary). Membership tests compare against these values.
  double lon_edge(std::size_t col) const;
  double lat_edge(std::size_t row) const;

  LonLat centroid(CellId cell) const;
  LocalPoint centroid_local(CellId cell) const;

  /// Cells whose rectangle intersects the closed disk of `radius_m` around
  /// the centroid of `cell`, in ascending index order.
  std::vector<CellId> cells_within_radius(CellId cell, double radius_m) const;

  /// Closed ring (SW, SE, NE, NW, SW) in lon/lat.
  std::array<LonLat, 5> cell_ring(CellId cell) const;

  double meters_per_degree_lon() const { return m_per_deg_lon_; }
  double meters_per_degree_lat() const { return m_per_deg_lat_; }

 private:
  void check(CellId cell) const;

  GridSpec spec_;
  double m_per_deg_lon_ = 0.0;
  double m_per_deg_lat_ = 0.0;
};

/// Distance from a point to the closest point of an axis-aligned rectangle.
double point_rect_distance(LocalPoint p, double x0, double y0, double x1, double y1);

}  // namespace urbanprof
