#include "urbanprof/landuse.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"

namespace urbanprof {

namespace {

using nlohmann::json;

std::vector<LonLat> parse_ring(const json& coords, const std::string& feature) {
  if (!coords.is_array()) throw DataError("landuse feature " + feature + ": ring is not an array");
  std::vector<LonLat> ring;
  for (const auto& p : coords) {
    if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number())
      throw DataError("landuse feature " + feature + ": bad coordinate");
    ring.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  if (ring.size() < 4)
    throw DataError("landuse feature " + feature + ": ring has fewer than 4 positions");
  if (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat)
    throw DataError("landuse feature " + feature + ": ring is not closed");
  return ring;
}

LandusePolygon parse_polygon(const json& rings, const std::string& feature,
                             const std::string& landuse) {
  if (!rings.is_array() || rings.empty())
    throw DataError("landuse feature " + feature + ": polygon without rings");
  LandusePolygon poly{feature, landuse, {}};
  for (const auto& r : rings) poly.rings.push_back(parse_ring(r, feature));
  return poly;
}

double signed_area(const std::vector<LocalPoint>& pts) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    a += pts[i].x_m * pts[i + 1].y_m - pts[i + 1].x_m * pts[i].y_m;
  if (!pts.empty()) a += pts.back().x_m * pts.front().y_m - pts.front().x_m * pts.back().y_m;
  return a / 2.0;
}

// Sutherland-Hodgman against one half-plane; `inside` and `cut` describe it.
template <typename Inside, typename Cut>
std::vector<LocalPoint> clip_edge(const std::vector<LocalPoint>& in, Inside inside, Cut cut) {
  std::vector<LocalPoint> out;
  if (in.empty()) return out;
  LocalPoint prev = in.back();
  bool prev_in = inside(prev);
  for (const LocalPoint& cur : in) {
    const bool cur_in = inside(cur);
    if (cur_in != prev_in) out.push_back(cut(prev, cur));
    if (cur_in) out.push_back(cur);
    prev = cur;
    prev_in = cur_in;
  }
  return out;
}

LocalPoint at_x(LocalPoint a, LocalPoint b, double x) {
  const double t = (x - a.x_m) / (b.x_m - a.x_m);
  return {x, a.y_m + t * (b.y_m - a.y_m)};
}

LocalPoint at_y(LocalPoint a, LocalPoint b, double y) {
  const double t = (y - a.y_m) / (b.y_m - a.y_m);
  return {a.x_m + t * (b.x_m - a.x_m), y};
}

}  // namespace

double clipped_ring_area(const std::vector<LocalPoint>& ring, double x0, double y0, double x1,
                         double y1) {
  std::vector<LocalPoint> pts(ring);
  if (pts.size() > 1 && pts.front().x_m == pts.back().x_m && pts.front().y_m == pts.back().y_m)
    pts.pop_back();
  pts = clip_edge(pts, [=](LocalPoint p) { return p.x_m >= x0; },
                  [=](LocalPoint a, LocalPoint b) { return at_x(a, b, x0); });
  pts = clip_edge(pts, [=](LocalPoint p) { return p.x_m <= x1; },
                  [=](LocalPoint a, LocalPoint b) { return at_x(a, b, x1); });
  pts = clip_edge(pts, [=](LocalPoint p) { return p.y_m >= y0; },
                  [=](LocalPoint a, LocalPoint b) { return at_y(a, b, y0); });
  pts = clip_edge(pts, [=](LocalPoint p) { return p.y_m <= y1; },
                  [=](LocalPoint a, LocalPoint b) { return at_y(a, b, y1); });
  return std::abs(signed_area(pts));
}

std::vector<LandusePolygon> parse_landuse_geojson(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("landuse GeoJSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array())
    throw DataError("landuse GeoJSON: expected a FeatureCollection");
  std::vector<LandusePolygon> out;
  std::size_t index = 0;
  for (const auto& f : doc["features"]) {
    std::string name = "#" + std::to_string(index++);
    if (f.contains("id")) name = f["id"].is_string() ? f["id"].get<std::string>() : f["id"].dump();
    const auto props = f.find("properties");
    if (props == f.end() || !props->is_object()) continue;
    const auto lu = props->find("landuse");
    if (lu == props->end() || !lu->is_string()) continue;
    const std::string landuse = csv::to_lower(csv::trim(lu->get<std::string>()));
    if (landuse.empty()) continue;
    const auto geom = f.find("geometry");
    if (geom == f.end() || !geom->is_object())
      throw DataError("landuse feature " + name + ": missing geometry");
    const std::string type = geom->value("type", "");
    const auto coords = geom->find("coordinates");
    if (coords == geom->end()) throw DataError("landuse feature " + name + ": missing coordinates");
    if (type == "Polygon") {
      out.push_back(parse_polygon(*coords, name, landuse));
    } else if (type == "MultiPolygon") {
      if (!coords->is_array()) throw DataError("landuse feature " + name + ": bad MultiPolygon");
      for (const auto& rings : *coords) out.push_back(parse_polygon(rings, name, landuse));
    } else {
      throw DataError("landuse feature " + name + ": unsupported geometry " + type);
    }
  }
  return out;
}

void write_landuse_geojson(std::ostream& out, const std::vector<LandusePolygon>& polygons) {
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = nlohmann::ordered_json::array();
  for (const auto& p : polygons) {
    nlohmann::ordered_json rings = nlohmann::ordered_json::array();
    for (const auto& ring : p.rings) {
      nlohmann::ordered_json r = nlohmann::ordered_json::array();
      for (const auto& q : ring) r.push_back({q.lon, q.lat});
      rings.push_back(std::move(r));
    }
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["id"] = p.feature;
    f["properties"] = {{"landuse", p.landuse}};
    f["geometry"] = {{"type", "Polygon"}, {"coordinates", std::move(rings)}};
    doc["features"].push_back(std::move(f));
  }
  out << doc.dump() << '\n';
}

LanduseLabels landuse_labels(const Grid& grid, const std::vector<LandusePolygon>& polygons) {
  const std::size_t n = grid.cell_count();
  const double w = grid.spec().cell_width_m;
  const double h = grid.spec().cell_height_m;
  std::vector<std::map<std::string, double>> area(n);

  for (const auto& poly : polygons) {
    std::vector<std::vector<LocalPoint>> rings;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& ring : poly.rings) {
      auto& local = rings.emplace_back();
      for (const auto& p : ring) {
        const LocalPoint q = grid.to_local(p);
        local.push_back(q);
        xmin = std::min(xmin, q.x_m);
        xmax = std::max(xmax, q.x_m);
        ymin = std::min(ymin, q.y_m);
        ymax = std::max(ymax, q.y_m);
      }
    }
    const auto clamp_index = [](double v, std::size_t count) {
      if (v < 0.0) return std::size_t{0};
      return std::min(static_cast<std::size_t>(v), count - 1);
    };
    if (xmax < 0.0 || ymax < 0.0 || xmin > w * static_cast<double>(grid.n_cols()) ||
        ymin > h * static_cast<double>(grid.n_rows()))
      continue;
    const std::size_t c0 = clamp_index(std::floor(xmin / w), grid.n_cols());
    const std::size_t c1 = clamp_index(std::floor(xmax / w), grid.n_cols());
    const std::size_t r0 = clamp_index(std::floor(ymin / h), grid.n_rows());
    const std::size_t r1 = clamp_index(std::floor(ymax / h), grid.n_rows());
    for (std::size_t r = r0; r <= r1; ++r) {
      for (std::size_t c = c0; c <= c1; ++c) {
        const double x0 = w * static_cast<double>(c), y0 = h * static_cast<double>(r);
        double a = clipped_ring_area(rings[0], x0, y0, x0 + w, y0 + h);
        for (std::size_t k = 1; k < rings.size(); ++k)
          a -= clipped_ring_area(rings[k], x0, y0, x0 + w, y0 + h);
        if (a > 0.0) area[grid.cell_at(r, c).index][poly.landuse] += a;
      }
    }
  }

  LanduseLabels out;
  out.label.assign(n, kUnknownLanduse);
  out.share.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0.0;
    // Map order: ties, up to rounding in the projected areas, keep the smaller class.
    for (const auto& [cls, a] : area[i]) {
      if (a > best * (1.0 + 1e-9)) {
        best = a;
        out.label[i] = cls;
      }
    }
    out.share[i] = std::min(1.0, best / (w * h));
  }
  return out;
}

void write_landuse_csv(std::ostream& out, const LanduseLabels& labels) {
  out << "cell_id,landuse,share\n";
  for (std::size_t i = 0; i < labels.label.size(); ++i)
    out << i << ',' << csv::escape(labels.label[i]) << ',' << csv::format_double(labels.share[i])
        << '\n';
}

LanduseLabels read_landuse_csv(std::istream& in, std::size_t cell_count) {
  std::string line;
  if (!csv::read_line(in, line) || line != "cell_id,landuse,share")
    throw DataError("landuse CSV: expected header cell_id,landuse,share");
  LanduseLabels out;
  out.label.assign(cell_count, kUnknownLanduse);
  out.share.assign(cell_count, 0.0);
  std::size_t row = 1;
  while (csv::read_line(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    const auto cell = fields.size() == 3 ? csv::parse_int(fields[0]) : std::nullopt;
    const auto share = fields.size() == 3 ? csv::parse_double(fields[2]) : std::nullopt;
    if (!cell || !share || *cell < 0 || static_cast<std::size_t>(*cell) >= cell_count)
      throw DataError("landuse CSV row " + std::to_string(row) + ": malformed");
    out.label[static_cast<std::size_t>(*cell)] = fields[1];
    out.share[static_cast<std::size_t>(*cell)] = *share;
  }
  return out;
}

}  // namespace urbanprof
