#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "urbanprof/geo_grid.hpp"

namespace urbanprof {

inline constexpr const char* kUnknownLanduse = "unknown";

/// One polygon; `rings[0]` is the outer ring, further rings are holes.
/// Rings are closed (first point repeated last).
struct LandusePolygon {
  std::string feature;  ///< feature id, or "#<index>" when absent
  std::string landuse;
  std::vector<std::vector<LonLat>> rings;
};

/// Reads a GeoJSON FeatureCollection of Polygon / MultiPolygon features
/// carrying a string `landuse` property (features without one are skipped).
/// Throws DataError naming the feature on an invalid ring.
std::vector<LandusePolygon> parse_landuse_geojson(std::istream& in);
void write_landuse_geojson(std::ostream& out, const std::vector<LandusePolygon>& polygons);

struct LanduseLabels {
  std::vector<std::string> label;  ///< per cell, kUnknownLanduse if uncovered
  std::vector<double> share;       ///< fraction of the cell covered by the winner
};

/// Labels each cell with the class covering the largest share of its area.
/// Area ties go to the lexicographically smaller class.
LanduseLabels landuse_labels(const Grid& grid, const std::vector<LandusePolygon>& polygons);

/// Area of the part of a ring inside the rectangle [x0,x1] x [y0,y1].
double clipped_ring_area(const std::vector<LocalPoint>& ring, double x0, double y0, double x1,
                         double y1);

void write_landuse_csv(std::ostream& out, const LanduseLabels& labels);
LanduseLabels read_landuse_csv(std::istream& in, std::size_t cell_count);

}  // namespace urbanprof
