// Minimal streaming reader for the OSM XML subset: elements, attributes,
// comments, processing instructions, DOCTYPE and CDATA. Only `node`
// elements and their child `tag` elements are interpreted.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <istream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include "urbanprof/csv.hpp"
#include "urbanprof/errors.hpp"
#include "urbanprof/poi_ingest.hpp"

namespace urbanprof {

namespace {

using Attributes = std::vector<std::pair<std::string, std::string>>;

struct XmlEvent {
  enum class Kind { start, end, eof } kind = Kind::eof;
  std::string name;
  Attributes attributes;
  std::size_t line = 1;
};

class XmlScanner {
 public:
  explicit XmlScanner(std::string text) : text_(std::move(text)) {}

  XmlEvent next() {
    if (pending_end_) {
      pending_end_ = false;
      return {XmlEvent::Kind::end, pending_name_, {}, line_};
    }
    while (true) {
      skip_text();
      if (pos_ >= text_.size()) {
        if (!stack_.empty()) fail("unexpected end of document inside <" + stack_.back() + ">");
        if (!seen_root_) fail("document has no root element");
        return {XmlEvent::Kind::eof, {}, {}, line_};
      }
      // text_[pos_] == '<'
      if (starts_with("<?")) {
        skip_past("?>");
      } else if (starts_with("<!--")) {
        skip_past("-->");
      } else if (starts_with("<![CDATA[")) {
        if (stack_.empty()) fail("CDATA outside the root element");
        skip_past("]]>");
      } else if (starts_with("<!")) {
        skip_declaration();
      } else if (starts_with("</")) {
        return end_tag();
      } else {
        return start_tag();
      }
    }
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw DataError("OSM XML line " + std::to_string(line_) + ": " + message);
  }

  bool starts_with(std::string_view s) const { return text_.compare(pos_, s.size(), s) == 0; }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i, ++pos_)
      if (text_[pos_] == '\n') ++line_;
  }

  void skip_past(std::string_view terminator) {
    const auto end = text_.find(terminator, pos_);
    if (end == std::string::npos) fail("unterminated construct, expected '" + std::string(terminator) + "'");
    advance(end + terminator.size() - pos_);
  }

  void skip_declaration() {
    int depth = 0;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      advance();
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == '>' && depth <= 0) return;
    }
    fail("unterminated declaration");
  }

  void skip_text() {
    while (pos_ < text_.size() && text_[pos_] != '<') {
      const char c = text_[pos_];
      if (stack_.empty() && !std::isspace(static_cast<unsigned char>(c)) &&
          !(c == '\xEF' || c == '\xBB' || c == '\xBF'))
        fail(seen_root_ ? "content after the root element" : "text before the root element");
      advance();
    }
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance();
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
           c == ':' || static_cast<unsigned char>(c) >= 0x80;
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && name_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a name");
    return text_.substr(start, pos_ - start);
  }

  std::string decode(std::string_view raw) const {
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      const auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) fail("unterminated entity reference");
      const std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out.push_back('&');
      else if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "quot") out.push_back('"');
      else if (ent == "apos") out.push_back('\'');
      else if (ent.size() > 1 && ent[0] == '#') {
        const bool hex = ent[1] == 'x' || ent[1] == 'X';
        const std::string digits(ent.substr(hex ? 2 : 1));
        char* end = nullptr;
        const unsigned long cp = std::strtoul(digits.c_str(), &end, hex ? 16 : 10);
        if (digits.empty() || *end != '\0' || cp > 0x10FFFF) fail("bad character reference");
        append_utf8(out, static_cast<char32_t>(cp));
      } else {
        fail("unknown entity '&" + std::string(ent) + ";'");
      }
      i = semi;
    }
    return out;
  }

  static void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  XmlEvent start_tag() {
    const std::size_t line = line_;
    if (stack_.empty() && seen_root_) fail("multiple root elements");
    advance();  // '<'
    XmlEvent ev{XmlEvent::Kind::start, read_name(), {}, line};
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) fail("unterminated start tag <" + ev.name + ">");
      if (starts_with("/>")) {
        advance(2);
        seen_root_ = true;
        pending_end_ = true;
        pending_name_ = ev.name;
        return ev;
      }
      if (text_[pos_] == '>') {
        advance();
        seen_root_ = true;
        stack_.push_back(ev.name);
        return ev;
      }
      std::string key = read_name();
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != '=') fail("expected '=' after attribute " + key);
      advance();
      skip_space();
      if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\''))
        fail("attribute value must be quoted");
      const char quote = text_[pos_];
      advance();
      const auto end = text_.find(quote, pos_);
      if (end == std::string::npos) fail("unterminated attribute value");
      const std::string_view raw(text_.data() + pos_, end - pos_);
      if (raw.find('<') != std::string_view::npos) fail("'<' in attribute value");
      std::string value = decode(raw);
      advance(end + 1 - pos_);
      for (const auto& [k, v] : ev.attributes)
        if (k == key) fail("duplicate attribute " + key);
      ev.attributes.emplace_back(std::move(key), std::move(value));
    }
  }

  XmlEvent end_tag() {
    const std::size_t line = line_;
    advance(2);
    std::string name = read_name();
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != '>') fail("malformed closing tag </" + name + ">");
    advance();
    if (stack_.empty()) fail("unexpected closing tag </" + name + ">");
    if (stack_.back() != name)
      fail("mismatched closing tag </" + name + ">, expected </" + stack_.back() + ">");
    stack_.pop_back();
    return {XmlEvent::Kind::end, std::move(name), {}, line};
  }

  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::vector<std::string> stack_;
  bool seen_root_ = false;
  bool pending_end_ = false;
  std::string pending_name_;
};

const std::string* find_attribute(const Attributes& attrs, std::string_view key) {
  for (const auto& [k, v] : attrs)
    if (k == key) return &v;
  return nullptr;
}

struct PendingNode {
  Attributes attributes;
  std::vector<std::pair<std::string, std::string>> tags;
};

void finish_node(const PendingNode& node, OsmParseResult& result) {
  const std::string* id = find_attribute(node.attributes, "id");
  const std::string* lat_text = find_attribute(node.attributes, "lat");
  const std::string* lon_text = find_attribute(node.attributes, "lon");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  const double lat_deg = lat_text ? csv::parse_double(*lat_text).value_or(nan) : nan;
  const double lon_deg = lon_text ? csv::parse_double(*lon_text).value_or(nan) : nan;
  if (!id || csv::trim(*id).empty() || !std::isfinite(lat_deg) || !std::isfinite(lon_deg) ||
      std::abs(lat_deg) > 90.0 || std::abs(lon_deg) > 180.0) {
    ++result.skipped_invalid;
    return;
  }
  for (std::string_view key : recognized_osm_keys()) {
    for (const auto& [k, v] : node.tags) {
      if (csv::to_lower(csv::trim(k)) != key) continue;
      const std::string value = csv::to_lower(csv::trim(v));
      if (value.empty()) continue;
      result.records.push_back({std::string(csv::trim(*id)), lon_deg, lat_deg, std::string(key) + ":" + value});
      return;
    }
  }
  ++result.skipped_unrecognized;
}

}  // namespace

OsmParseResult parse_osm_xml(std::istream& in) {
  XmlScanner scanner{std::string(std::istreambuf_iterator<char>(in), {})};
  OsmParseResult result;
  std::optional<PendingNode> node;
  std::size_t depth = 0;
  std::size_t node_depth = 0;
  while (true) {
    XmlEvent ev = scanner.next();
    if (ev.kind == XmlEvent::Kind::eof) break;
    if (ev.kind == XmlEvent::Kind::start) {
      ++depth;
      if (ev.name == "node" && !node) {
        node = PendingNode{std::move(ev.attributes), {}};
        node_depth = depth;
      } else if (ev.name == "tag" && node && depth == node_depth + 1) {
        const std::string* k = find_attribute(ev.attributes, "k");
        const std::string* v = find_attribute(ev.attributes, "v");
        if (k && v) node->tags.emplace_back(*k, *v);
      }
    } else {
      if (node && depth == node_depth && ev.name == "node") {
        finish_node(*node, result);
        node.reset();
      }
      --depth;
    }
  }
  return result;
}

}  // namespace urbanprof
