#include "vexel/io/svg.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace vexel {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  std::string s(buf, res.ptr);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

int channel_byte(double v) { return int(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5)); }

std::string hex_color(const Rgba& c) {
  static const char* digits = "0123456789abcdef";
  std::string s = "#";
  for (double v : {c.r, c.g, c.b}) {
    const int b = channel_byte(v);
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

}  // namespace

std::string serialize_svg(const VectorDocument& doc) {
  validate(doc);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << doc.width << "\" height=\"" << doc.height
      << "\" viewBox=\"0 0 " << doc.width << ' ' << doc.height << "\">\n";
  for (std::size_t r = 0; r < doc.rounds.size(); ++r) {
    const Round& round = doc.rounds[r];
    out << "  <g data-round-index=\"" << r << "\" data-round-ncolors=\"" << round.precision << '"';
    if (round.region) {
      const auto& g = *round.region;
      out << " data-round-region=\"" << g.x << ' ' << g.y << ' ' << g.width << ' ' << g.height << '"';
    }
    out << ">\n";
    for (const PathElement& e : round.elements) {
      const auto& pts = e.path.points();
      out << "    <path id=\"e" << e.id << "\" d=\"M " << format_number(pts[0].x) << ' ' << format_number(pts[0].y);
      for (std::size_t s = 0; s < e.path.segment_count(); ++s) {
        out << " C";
        for (std::size_t k = 1; k <= 3; ++k) {
          const Point& p = pts[(3 * s + k) % pts.size()];
          out << ' ' << format_number(p.x) << ' ' << format_number(p.y);
        }
      }
      out << " Z\" fill=\"" << hex_color(e.fill) << "\" fill-opacity=\"" << format_number(e.fill.a) << "\"/>\n";
    }
    out << "  </g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

class SvgParser {
 public:
  explicit SvgParser(std::string_view text) : s_(text) {}

  VectorDocument parse() {
    skip_space();
    if (starts_with("<?xml")) {
      const auto end = s_.find("?>", pos_);
      if (end == std::string_view::npos) fail("unterminated XML declaration");
      pos_ = end + 2;
      skip_space();
    }
    const Tag svg = open_tag();
    if (svg.name != "svg") fail("expected <svg>, found <" + svg.name + ">", svg.offset);
    VectorDocument doc;
    check_attributes(svg, {"xmlns", "width", "height", "viewBox"});
    doc.width = int_attribute(svg, "width");
    doc.height = int_attribute(svg, "height");
    if (auto it = svg.attrs.find("viewBox"); it != svg.attrs.end()) {
      const std::string expected = "0 0 " + std::to_string(doc.width) + " " + std::to_string(doc.height);
      if (normalize_space(it->second.value) != expected) {
        fail("viewBox must be \"" + expected + "\"", it->second.offset);
      }
    }
    if (!svg.self_closing) {
      while (true) {
        skip_space();
        if (starts_with("</")) {
          close_tag("svg");
          break;
        }
        doc.rounds.push_back(parse_round(doc.rounds.size()));
      }
    }
    skip_space();
    if (pos_ != s_.size()) fail("unexpected content after </svg>");
    try {
      validate(doc);
    } catch (const Error& e) {
      throw Error(std::string("svg: ") + e.what());
    }
    return doc;
  }

 private:
  struct Attr {
    std::string value;
    std::size_t offset;
  };
  struct Tag {
    std::string name;
    std::map<std::string, Attr> attrs;
    bool self_closing = false;
    std::size_t offset = 0;
  };

  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const { fail(what, pos_); }
  [[noreturn]] static void fail(const std::string& what, std::size_t offset) {
    throw Error("svg parse error at offset " + std::to_string(offset) + ": " + what);
  }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  void skip_space() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }
  bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  static std::string normalize_space(const std::string& v) {
    std::string out;
    bool gap = false;
    for (char c : v) {
      if (is_space(c)) {
        gap = !out.empty();
        continue;
      }
      if (gap) out += ' ';
      gap = false;
      out += c;
    }
    return out;
  }

  std::string name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum((unsigned char)s_[pos_]) || s_[pos_] == '-' || s_[pos_] == ':')) ++pos_;
    if (pos_ == start) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  Tag open_tag() {
    Tag tag;
    tag.offset = pos_;
    if (starts_with("<!--")) fail("comments are not part of the subset");
    if (!starts_with("<") || starts_with("</")) fail("expected an element");
    ++pos_;
    tag.name = name();
    while (true) {
      const std::size_t before = pos_;
      skip_space();
      if (starts_with("/>")) {
        pos_ += 2;
        tag.self_closing = true;
        return tag;
      }
      if (starts_with(">")) {
        ++pos_;
        return tag;
      }
      if (pos_ == before) fail("expected whitespace before attribute");
      const std::size_t at = pos_;
      const std::string key = name();
      skip_space();
      if (!starts_with("=")) fail("expected '=' after attribute " + key);
      ++pos_;
      skip_space();
      if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) fail("expected quoted value for " + key);
      const char quote = s_[pos_++];
      const std::size_t end = s_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      std::string value(s_.substr(pos_, end - pos_));
      if (value.find_first_of("&<") != std::string::npos) fail("entities and '<' are not allowed in values", pos_);
      if (tag.attrs.count(key)) fail("duplicate attribute " + key, at);
      tag.attrs[key] = {std::move(value), pos_};
      pos_ = end + 1;
    }
  }

  void close_tag(const std::string& expected) {
    const std::size_t at = pos_;
    pos_ += 2;
    const std::string n = name();
    skip_space();
    if (n != expected) fail("expected </" + expected + ">, found </" + n + ">", at);
    if (!starts_with(">")) fail("expected '>'");
    ++pos_;
  }

  static void check_attributes(const Tag& tag, std::initializer_list<const char*> allowed) {
    for (const auto& [key, attr] : tag.attrs) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) fail("unknown attribute " + key + " on <" + tag.name + ">", attr.offset);
    }
  }

  static const Attr& required(const Tag& tag, const std::string& key) {
    auto it = tag.attrs.find(key);
    if (it == tag.attrs.end()) fail("<" + tag.name + "> is missing " + key, tag.offset);
    return it->second;
  }

  template <class T>
  static T parse_int(const Attr& a, const std::string& what) {
    T v{};
    const char* b = a.value.data();
    const char* e = b + a.value.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) fail("invalid integer for " + what + ": \"" + a.value + "\"", a.offset);
    return v;
  }

  static int int_attribute(const Tag& tag, const std::string& key) { return parse_int<int>(required(tag, key), key); }

  Round parse_round(std::size_t index) {
    const Tag g = open_tag();
    if (g.name != "g") fail("expected <g>, found <" + g.name + ">", g.offset);
    check_attributes(g, {"data-round-index", "data-round-ncolors", "data-round-region"});
    Round round;
    const Attr& idx = required(g, "data-round-index");
    if (parse_int<std::size_t>(idx, "data-round-index") != index) {
      fail("rounds must be numbered consecutively from 0; expected " + std::to_string(index), idx.offset);
    }
    round.precision = int_attribute(g, "data-round-ncolors");
    if (auto it = g.attrs.find("data-round-region"); it != g.attrs.end()) {
      std::istringstream in(it->second.value);
      PixelRect r;
      std::string extra;
      if (!(in >> r.x >> r.y >> r.width >> r.height) || (in >> extra)) {
        fail("data-round-region must be four integers", it->second.offset);
      }
      round.region = r;
    }
    if (g.self_closing) return round;
    while (true) {
      skip_space();
      if (starts_with("</")) {
        close_tag("g");
        return round;
      }
      round.elements.push_back(parse_path());
    }
  }

  PathElement parse_path() {
    const Tag p = open_tag();
    if (p.name != "path") fail("unsupported element <" + p.name + ">", p.offset);
    if (!p.self_closing) {
      skip_space();
      if (!starts_with("</")) fail("<path> must not have children");
      close_tag("path");
    }
    check_attributes(p, {"id", "d", "fill", "fill-opacity"});
    PathElement e;
    const Attr& id = required(p, "id");
    if (id.value.size() < 2 || id.value[0] != 'e') fail("path id must look like e<number>", id.offset);
    e.id = parse_int<ElementId>({id.value.substr(1), id.offset + 1}, "id");
    e.path = parse_d(required(p, "d"));
    const Attr& fill = required(p, "fill");
    e.fill = parse_fill(fill);
    if (auto it = p.attrs.find("fill-opacity"); it != p.attrs.end()) {
      e.fill.a = parse_number(it->second.value, 0, it->second.offset).first;
      if (!(e.fill.a >= 0.0 && e.fill.a <= 1.0)) fail("fill-opacity must be in [0, 1]", it->second.offset);
    }
    return e;
  }

  static Rgba parse_fill(const Attr& a) {
    const std::string& v = a.value;
    if (v.size() != 7 || v[0] != '#') fail("fill must be #rrggbb", a.offset);
    double c[3];
    for (int i = 0; i < 3; ++i) {
      int b = 0;
      auto res = std::from_chars(v.data() + 1 + 2 * i, v.data() + 3 + 2 * i, b, 16);
      if (res.ec != std::errc() || res.ptr != v.data() + 3 + 2 * i) fail("fill must be #rrggbb", a.offset);
      c[i] = b / 255.0;
    }
    return {c[0], c[1], c[2], 1.0};
  }

  // Parses one number starting at i (after separators); returns value and
  // the index just past it.
  static std::pair<double, std::size_t> parse_number(const std::string& d, std::size_t i, std::size_t base) {
    double v = 0.0;
    const char* b = d.data() + i;
    const char* e = d.data() + d.size();
    if (b < e && *b == '+') ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || !std::isfinite(v)) fail("expected a number", base + i);
    return {v, std::size_t(res.ptr - d.data())};
  }

  static CubicPath parse_d(const Attr& a) {
    const std::string& d = a.value;
    std::size_t i = 0;
    auto skip_sep = [&] {
      while (i < d.size() && (is_space(d[i]) || d[i] == ',')) ++i;
    };
    auto command = [&]() -> char {
      skip_sep();
      if (i >= d.size()) return '\0';
      const char c = d[i];
      if (std::isalpha((unsigned char)c)) return c;
      return '\0';
    };
    auto number = [&] {
      skip_sep();
      auto [v, next] = parse_number(d, i, a.offset);
      i = next;
      return v;
    };
    auto reject = [&](char c) {
      const std::string cmd(1, c);
      if (std::islower((unsigned char)c) && c != 'z') {
        fail("relative path command '" + cmd + "' is not supported", a.offset + i);
      }
      fail("path command '" + cmd + "' is not supported (only M, C and Z)", a.offset + i);
    };

    char c = command();
    if (c != 'M') {
      if (c == '\0') fail("path data must start with M", a.offset + i);
      reject(c);
    }
    ++i;
    std::vector<Point> pts;
    pts.push_back({number(), number()});
    c = command();
    if (c != 'C') {
      if (c == '\0') fail(i >= d.size() ? "path data ends without a cubic segment" : "expected C after the M point", a.offset + i);
      if (c == 'Z' || c == 'z') fail("path has no cubic segments", a.offset + i);
      reject(c);
    }
    while (true) {
      c = command();
      if (c == 'C') {
        ++i;
      } else if (c == 'Z' || c == 'z') {
        ++i;
        break;
      } else if (c != '\0') {
        reject(c);
      } else if (i >= d.size()) {
        fail("path is not closed with Z", a.offset + i);
      }
      for (int k = 0; k < 3; ++k) pts.push_back({number(), number()});
    }
    skip_sep();
    if (i != d.size()) fail("unexpected data after Z", a.offset + i);
    const Point end = pts.back();
    if (std::abs(end.x - pts[0].x) > 1e-6 || std::abs(end.y - pts[0].y) > 1e-6) {
      fail("last cubic segment must end at the M point", a.offset + i);
    }
    pts.pop_back();
    return CubicPath(std::move(pts));
  }
};

}  // namespace

VectorDocument parse_svg(std::string_view text) { return SvgParser(text).parse(); }

VectorDocument read_svg(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_svg(buf.str());
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

void write_svg(const std::string& path, const VectorDocument& doc) {
  const std::string text = serialize_svg(doc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("failed writing " + path);
}

}  // namespace vexel
