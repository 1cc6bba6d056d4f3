#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/landuse.hpp"

using namespace urbanprof;

namespace {

LandusePolygon rect(const Grid& g, const std::string& cls, double x0, double y0, double x1, double y1) {
  std::vector<LonLat> ring;
  for (auto [x, y] : {std::pair{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}) ring.push_back(g.to_lonlat({x, y}));
  return {cls, cls, {ring}};
}

std::string parse_error(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_landuse_geojson(in);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("landuse") {

TEST_CASE("one polygon over the whole grid labels every cell") {
  Grid g({9.1, 45.4, 100, 100, 4, 3});
  auto l = landuse_labels(g, {rect(g, "residential", -10, -10, 500, 400)});
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(l.label[i] == "residential");
    CHECK(l.share[i] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("a 60/40 split goes to the 60 percent class") {
  Grid g({9.1, 45.4, 1, 1, 1, 1});
  auto l = landuse_labels(g, {rect(g, "commercial", 0, 0, 0.4, 1), rect(g, "retail", 0.4, 0, 1, 1)});
  CHECK(l.label[0] == "retail");
  CHECK(l.share[0] == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("no polygons: everything unknown") {
  Grid g({9.1, 45.4, 100, 100, 2, 2});
  auto l = landuse_labels(g, {});
  for (const auto& s : l.label) CHECK(s == kUnknownLanduse);
}

TEST_CASE("clipping a unit square triangle by hand") {
  // Triangle (0,0)-(2,0)-(0,2) clipped to [0,1]^2 leaves the square minus nothing: area 1.
  std::vector<LocalPoint> tri = {{0, 0}, {2, 0}, {0, 2}, {0, 0}};
  CHECK(clipped_ring_area(tri, 0, 0, 1, 1) == doctest::Approx(1.0));
  // Clipped to [1,2]x[0,1]: the triangle x + y <= 2 inside it has area 0.5.
  CHECK(clipped_ring_area(tri, 1, 0, 2, 1) == doctest::Approx(0.5));
  CHECK(clipped_ring_area(tri, 5, 5, 6, 6) == 0.0);
}

TEST_CASE("holes are subtracted") {
  Grid g({9.1, 45.4, 100, 100, 1, 1});
  auto outer = rect(g, "park", 0, 0, 100, 100);
  auto hole = rect(g, "", 0, 0, 70, 100);
  outer.rings.push_back(hole.rings[0]);
  auto l = landuse_labels(g, {outer, rect(g, "residential", 0, 0, 50, 100)});
  CHECK(l.label[0] == "residential");
}

TEST_CASE("equal areas go to the smaller class name") {
  Grid g({9.1, 45.4, 10, 10, 1, 1});
  auto l = landuse_labels(g, {rect(g, "zoo", 0, 0, 5, 10), rect(g, "farm", 5, 0, 10, 10)});
  CHECK(l.label[0] == "farm");
}

TEST_CASE("GeoJSON parsing: polygons, multipolygons, skipped features") {
  const std::string text = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","id":"a","properties":{"landuse":"commercial"},
     "geometry":{"type":"Polygon","coordinates":[[[9,45],[9.1,45],[9.1,45.1],[9,45]]]}},
    {"type":"Feature","properties":{"name":"no landuse"},
     "geometry":{"type":"Polygon","coordinates":[[[9,45],[9.1,45],[9.1,45.1],[9,45]]]}},
    {"type":"Feature","properties":{"landuse":"forest"},
     "geometry":{"type":"MultiPolygon","coordinates":[[[[9,45],[9.1,45],[9.1,45.1],[9,45]]],[[[8,44],[8.1,44],[8.1,44.1],[8,44]]]]}}
  ]})";
  std::istringstream in(text);
  auto polys = parse_landuse_geojson(in);
  REQUIRE(polys.size() == 3);
  CHECK(polys[0].feature == "a");
  CHECK(polys[0].landuse == "commercial");
  CHECK(polys[1].feature == "#2");
  CHECK(polys[2].landuse == "forest");
  std::stringstream out;
  write_landuse_geojson(out, polys);
  auto again = parse_landuse_geojson(out);
  CHECK(again.size() == 3);
  CHECK(again[2].rings[0][1].lon == 8.1);
}

TEST_CASE("invalid rings name the feature") {
  CHECK(parse_error(R"({"type":"FeatureCollection","features":[{"type":"Feature","id":"bad1","properties":{"landuse":"x"},
    "geometry":{"type":"Polygon","coordinates":[[[9,45],[9.1,45],[9,45]]]}}]})").find("bad1") != std::string::npos);
  CHECK(parse_error(R"({"type":"FeatureCollection","features":[{"type":"Feature","id":"open","properties":{"landuse":"x"},
    "geometry":{"type":"Polygon","coordinates":[[[9,45],[9.1,45],[9.1,45.1],[9,45.1]]]}}]})").find("open") != std::string::npos);
  CHECK_FALSE(parse_error("not json").empty());
}

TEST_CASE("labels CSV round trip") {
  Grid g({9.1, 45.4, 100, 100, 3, 1});
  auto l = landuse_labels(g, {rect(g, "industrial", 0, 0, 150, 100)});
  std::stringstream ss;
  write_landuse_csv(ss, l);
  auto back = read_landuse_csv(ss, 3);
  CHECK(back.label == l.label);
  CHECK(back.label[2] == kUnknownLanduse);
}

TEST_CASE("property: clipped area matches Monte-Carlo estimates for random convex quads") {
  testsupport::Gen gen(101);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LocalPoint> ring;
    const double cx = gen.uniform(0, 1), cy = gen.uniform(0, 1);
    for (int k = 0; k < 4; ++k) {
      const double a = (k + gen.uniform(0.1, 0.9)) * std::acos(-1.0) / 2;
      const double r = gen.uniform(0.3, 1.2);
      ring.push_back({cx + r * std::cos(a), cy + r * std::sin(a)});
    }
    ring.push_back(ring.front());
    auto inside = [&](double x, double y) {
      bool in = false;
      for (std::size_t i = 0, j = 3; i < 4; j = i++)
        if ((ring[i].y_m > y) != (ring[j].y_m > y) &&
            x < (ring[j].x_m - ring[i].x_m) * (y - ring[i].y_m) / (ring[j].y_m - ring[i].y_m) + ring[i].x_m)
          in = !in;
      return in;
    };
    double hits = 0;
    const int samples = 40000;
    for (int s = 0; s < samples; ++s) hits += inside(gen.uniform(0, 1), gen.uniform(0, 1));
    CHECK(std::abs(clipped_ring_area(ring, 0, 0, 1, 1) - hits / samples) <= 0.01);
  }
}

}
