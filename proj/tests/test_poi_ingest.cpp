#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/poi_ingest.hpp"

using namespace urbanprof;

namespace {

OsmParseResult parse_text(const std::string& xml) {
  std::istringstream in(xml);
  return parse_osm_xml(in);
}

std::vector<PoiRecord> parse_csv_text(const std::string& text) {
  std::istringstream in(text);
  return parse_poi_csv(in);
}

std::string error_of(const std::string& text, bool osm) {
  try {
    if (osm)
      parse_text(text);
    else
      parse_csv_text(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("poi_ingest") {

TEST_CASE("single recognized tag yields key:value feature") {
  auto r = parse_text(R"(<osm><node id="1" lat="45.46" lon="9.19"><tag k="amenity" v="restaurant"/></node></osm>)");
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].feature == "amenity:restaurant");
  CHECK(r.records[0].id == "1");
  CHECK(r.records[0].lat == 45.46);
  CHECK(r.records[0].lon == 9.19);
}

TEST_CASE("node with only a name tag is skipped") {
  auto r = parse_text(R"(<osm><node id="1" lat="45.46" lon="9.19"><tag k="name" v="X"/></node></osm>)");
  CHECK(r.records.empty());
  CHECK(r.skipped_unrecognized == 1);
}

TEST_CASE("twelve-node fixture gives nine records and three skips") {
  std::ifstream in(std::string(URBANPROF_TEST_DATA) + "/twelve_nodes.osm");
  REQUIRE(in);
  auto r = parse_osm_xml(in);
  CHECK(r.records.size() == 9);
  CHECK(r.skipped() == 3);
  std::vector<std::string> ids;
  for (const auto& p : r.records) ids.push_back(p.id);
  CHECK(ids == std::vector<std::string>{"101", "102", "105", "106", "108", "109", "110", "111", "112"});
  // Key precedence follows the fixed order: amenity, shop, ..., building, ..., office.
  CHECK(r.records[1].feature == "amenity:cafe");
  CHECK(r.records[2].feature == "leisure:park");
  CHECK(r.records[6].feature == "building:office");
}

TEST_CASE("malformed XML reports the line") {
  const std::string msg = error_of("<osm>\n<node id=\"1\" lat=\"1\" lon=\"2\">\n<tag k=\"a\" v=\"b\"/>\n</way>\n</osm>", true);
  CHECK(msg.find("line 4") != std::string::npos);
  CHECK_FALSE(error_of("<osm><node id=\"1\" lat=\"1\" lon=\"2\">", true).empty());
  CHECK_FALSE(error_of("<osm><node id=1></node></osm>", true).empty());
}

TEST_CASE("nodes with missing coordinates are counted, not fatal") {
  auto r = parse_text(R"(<osm>
    <node id="1" lon="9.19"><tag k="amenity" v="bank"/></node>
    <node id="2" lat="abc" lon="9.19"><tag k="amenity" v="bank"/></node>
    <node id="3" lat="45" lon="9"><tag k="amenity" v="bank"/></node>
  </osm>)");
  CHECK(r.records.size() == 1);
  CHECK(r.skipped_invalid == 2);
}

TEST_CASE("entities in attribute values are decoded") {
  auto r = parse_text(R"(<osm><node id="7" lat="1" lon="2"><tag k="shop" v="a&amp;b"/></node></osm>)");
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].feature == "shop:a&b");
}

TEST_CASE("CSV with empty body is empty") {
  CHECK(parse_csv_text("id,lon,lat,feature\n").empty());
}

TEST_CASE("CSV rows keep their order") {
  auto v = parse_csv_text("id,lon,lat,feature\na,9.1,45.1,amenity:bank\nb,9.2,45.2,shop:mall\nc,9.3,45.3,leisure:park\n");
  REQUIRE(v.size() == 3);
  CHECK(v[0].id == "a");
  CHECK(v[1].feature == "shop:mall");
  CHECK(v[2].lat == 45.3);
}

TEST_CASE("CSV errors name the row") {
  CHECK(error_of("id,lon,lat,feature\nx,9.1,abc,amenity:bank\n", false).find("row 2") != std::string::npos);
  CHECK(error_of("id,lat,lon,feature\n", false).find("row 1") != std::string::npos);
  CHECK(error_of("id,lon,lat,feature\nx,9.1,45,amenity:bank\ny,9.1,45\n", false).find("row 3") != std::string::npos);
}

TEST_CASE("CSV features are lower-cased") {
  auto v = parse_csv_text("id,lon,lat,feature\na,9.1,45.1,Amenity:Bank\n");
  CHECK(v.at(0).feature == "amenity:bank");
}

TEST_CASE("filter keeps mapped features only") {
  const auto& m = CategoryMapping::defaults();
  std::vector<PoiRecord> all = {{"1", 0, 0, "amenity:restaurant"}, {"2", 0, 0, "shop:mall"}};
  CHECK(filter_relevant(all, m) == all);
  std::vector<PoiRecord> none = {{"1", 0, 0, "name:x"}, {"2", 0, 0, "amenity:bench"}};
  CHECK(filter_relevant(none, m).empty());
}

TEST_CASE("ten-POI fixture with six mapped features keeps those six") {
  const std::vector<std::string> feats = {"amenity:restaurant", "amenity:bench",  "shop:bakery",
                                          "amenity:waste_basket", "leisure:park", "amenity:bank",
                                          "office:company",     "tourism:museum", "power:tower",
                                          "man_made:mast"};
  std::vector<PoiRecord> pois;
  for (std::size_t i = 0; i < feats.size(); ++i) pois.push_back({std::to_string(i), 9.0, 45.0, feats[i]});
  auto kept = filter_relevant(pois, CategoryMapping::defaults());
  std::vector<std::string> ids;
  for (const auto& p : kept) ids.push_back(p.id);
  CHECK(ids == std::vector<std::string>{"0", "2", "4", "5", "6", "7"});
}

TEST_CASE("mapping parser validates shares and categories") {
  std::istringstream good("# c\nx:a,eating,0.5\nx:a,working,0.5\n\ny:b,health,1\n");
  auto m = CategoryMapping::parse(good);
  CHECK(m.size() == 2);
  CHECK(m.shares("x:a").size() == 2);
  CHECK(m.shares("zzz").empty());
  std::istringstream bad_sum("x:a,eating,0.5\n");
  CHECK_THROWS_AS(CategoryMapping::parse(bad_sum), DataError);
  std::istringstream bad_cat("x:a,flying,1\n");
  CHECK_THROWS_AS(CategoryMapping::parse(bad_cat), DataError);
}

TEST_CASE("default mapping shares sum to one per feature") {
  const auto& m = CategoryMapping::defaults();
  CHECK(m.size() >= 50);
  for (const auto& [f, list] : m.entries()) {
    double s = 0.0;
    for (const auto& c : list) s += c.share;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  std::stringstream ss;
  m.write(ss);
  auto again = CategoryMapping::parse(ss);
  CHECK(again.size() == m.size());
}

TEST_CASE("property: CSV round trip is identity") {
  testsupport::Gen gen(21);
  const std::vector<std::string> feats = {"amenity:bank", "shop:mall", "leisure:park", "x:\"q\"", "a:b,c"};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<PoiRecord> pois;
    const std::size_t n = gen.index(40);
    for (std::size_t i = 0; i < n; ++i)
      pois.push_back({"id" + std::to_string(gen.index(1000000)), gen.uniform(-180, 180),
                      gen.uniform(-90, 90), feats[gen.index(feats.size())]});
    std::stringstream ss;
    write_poi_csv(ss, pois);
    CHECK(parse_poi_csv(ss) == pois);
  }
}

TEST_CASE("property: filter output is an order-preserving sublist") {
  testsupport::Gen gen(22);
  const auto& m = CategoryMapping::defaults();
  std::vector<std::string> vocab;
  for (const auto& [f, l] : m.entries()) vocab.push_back(f);
  vocab.insert(vocab.end(), {"name:x", "amenity:bench", "barrier:gate"});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PoiRecord> pois;
    const std::size_t n = gen.index(60);
    for (std::size_t i = 0; i < n; ++i)
      pois.push_back({std::to_string(i), 0, 0, vocab[gen.index(vocab.size())]});
    auto kept = filter_relevant(pois, m);
    std::size_t j = 0;
    for (const auto& p : pois)
      if (j < kept.size() && kept[j] == p) ++j;
    CHECK(j == kept.size());
    for (const auto& p : kept) CHECK(m.contains(p.feature));
    const auto mapped = std::count_if(pois.begin(), pois.end(), [&](const auto& p) { return m.contains(p.feature); });
    CHECK(kept.size() == static_cast<std::size_t>(mapped));
  }
}

TEST_CASE("property: emitted OSM features are non-empty and lower case") {
  testsupport::Gen gen(23);
  const std::vector<std::string> keys = {"amenity", "SHOP", "Leisure", "name", "tourism", "foo"};
  const std::vector<std::string> vals = {"Bank", "MALL", "park", "", "x"};
  for (int trial = 0; trial < 30; ++trial) {
    std::string xml = "<osm>";
    for (int i = 0; i < 10; ++i) {
      xml += "<node id=\"" + std::to_string(i) + "\" lat=\"1\" lon=\"2\">";
      for (int t = gen.integer(0, 3); t > 0; --t)
        xml += "<tag k=\"" + keys[gen.index(keys.size())] + "\" v=\"" + vals[gen.index(vals.size())] + "\"/>";
      xml += "</node>";
    }
    xml += "</osm>";
    auto r = parse_text(xml);
    CHECK(r.records.size() + r.skipped() == 10);
    for (const auto& p : r.records) {
      CHECK(!p.feature.empty());
      CHECK(p.feature == [&] { std::string s = p.feature; std::transform(s.begin(), s.end(), s.begin(), ::tolower); return s; }());
      CHECK(p.feature.back() != ':');
    }
  }
}

}
