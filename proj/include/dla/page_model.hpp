#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dla/geometry.hpp"

namespace dla {

inline constexpr const char* kPageNamespace2013 =
    "http://schema.primaresearch.org/PAGE/gts/pagecontent/2013-07-15";

// Piece-wise linear curve a text line sits on.
struct Baseline {
  std::vector<Point> points;

  [[nodiscard]] double length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
      len += std::hypot(points[i].x - points[i - 1].x,
                        points[i].y - points[i - 1].y);
    return len;
  }

  [[nodiscard]] bool valid() const {
    return points.size() >= 2 && length() > 0.0;
  }

  [[nodiscard]] double mean_y() const {
    if (points.empty()) return 0.0;
    double s = 0.0;
    for (const Point& p : points) s += p.y;
    return s / static_cast<double>(points.size());
  }

  friend bool operator==(const Baseline&, const Baseline&) = default;
};

struct TextLine {
  std::string id;
  Polygon polygon;
  Baseline baseline;
  double score = 1.0;
  friend bool operator==(const TextLine&, const TextLine&) = default;
};

struct Region {
  std::string id;
  std::string class_label;
  Polygon polygon;
  std::vector<TextLine> lines;
  double score = 1.0;
  friend bool operator==(const Region&, const Region&) = default;
};

struct Page {
  std::string image_filename;
  int width = 0;
  int height = 0;
  std::vector<Region> regions;
  std::vector<TextLine> orphan_lines;  // lines assigned to no region

  [[nodiscard]] std::size_t line_count() const {
    std::size_t n = orphan_lines.size();
    for (const Region& r : regions) n += r.lines.size();
    return n;
  }

  friend bool operator==(const Page&, const Page&) = default;
};

struct MalformedXml : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedSchema : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PageParseResult {
  Page page;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string local_name(const std::string& qname) {
  const auto pos = qname.rfind(':');
  return pos == std::string::npos ? qname : qname.substr(pos + 1);
}

inline std::vector<Point> parse_points(const std::string& text) {
  std::vector<Point> pts;
  std::istringstream in(text);
  std::string pair;
  while (in >> pair) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos) continue;
    Point p;
    p.x = std::stod(pair.substr(0, comma));
    p.y = std::stod(pair.substr(comma + 1));
    pts.push_back(p);
  }
  return pts;
}

inline std::string format_points(const std::vector<Point>& pts, double w,
                                 double h) {
  std::ostringstream out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const long x = std::lround(std::clamp(pts[i].x, 0.0, w));
    const long y = std::lround(std::clamp(pts[i].y, 0.0, h));
    if (i) out << ' ';
    out << x << ',' << y;
  }
  return out.str();
}

inline std::optional<std::string> custom_structure_type(
    const std::string& custom) {
  static const std::regex re(R"(structure\s*\{[^}]*type:\s*([^;}\s]+))");
  std::smatch m;
  if (std::regex_search(custom, m, re)) return m[1].str();
  return std::nullopt;
}

inline std::optional<double> custom_structure_score(const std::string& custom) {
  static const std::regex re(R"(structure\s*\{[^}]*score:\s*([0-9.eE+-]+))");
  std::smatch m;
  if (std::regex_search(custom, m, re)) return std::stod(m[1].str());
  return std::nullopt;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

PageParseResult parse_page_xml(const std::string& xml_text);
PageParseResult parse_page_xml_file(const std::string& path);
std::string write_page_xml(const Page& page);

struct ClassStats {
  std::uint64_t region_count = 0;
  std::uint64_t line_count = 0;
  friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

using CorpusStats = std::map<std::string, ClassStats>;

inline CorpusStats corpus_stats(const std::vector<Page>& pages) {
  CorpusStats stats;
  for (const Page& page : pages) {
    for (const Region& region : page.regions) {
      ClassStats& cs = stats[region.class_label];
      cs.region_count += 1;
      cs.line_count += region.lines.size();
    }
  }
  return stats;
}

inline CorpusStats merge_stats(const CorpusStats& a, const CorpusStats& b) {
  CorpusStats out = a;
  for (const auto& [label, cs] : b) {
    out[label].region_count += cs.region_count;
    out[label].line_count += cs.line_count;
  }
  return out;
}

}  // namespace dla

#include "dla/page_xml_impl.hpp"
