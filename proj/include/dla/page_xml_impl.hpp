#pragma once

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <fstream>
#include <sstream>

#include "dla/page_model.hpp"

namespace dla {

namespace detail {

using boost::property_tree::ptree;

inline const ptree* find_child(const ptree& node, const std::string& name) {
  for (const auto& [key, child] : node) {
    if (local_name(key) == name) return &child;
  }
  return nullptr;
}

inline std::string attr(const ptree& node, const std::string& name,
                        const std::string& fallback = "") {
  if (auto attrs = node.get_child_optional("<xmlattr>")) {
    if (auto v = attrs->get_optional<std::string>(name)) return *v;
  }
  return fallback;
}

inline std::optional<std::vector<Point>> coords_points(const ptree& node) {
  const ptree* coords = find_child(node, "Coords");
  if (!coords) return std::nullopt;
  return parse_points(attr(*coords, "points"));
}

inline TextLine parse_text_line(const ptree& node,
                                std::vector<std::string>& warnings,
                                bool& ok) {
  TextLine line;
  line.id = attr(node, "id");
  ok = true;
  if (auto pts = coords_points(node); pts && pts->size() >= 3) {
    line.polygon.vertices = std::move(*pts);
  } else {
    warnings.push_back("MissingCoords: TextLine '" + line.id + "' skipped");
    ok = false;
    return line;
  }
  if (const ptree* bl = find_child(node, "Baseline")) {
    line.baseline.points = parse_points(attr(*bl, "points"));
  }
  if (line.baseline.points.size() < 2) {
    warnings.push_back("EmptyBaseline: TextLine '" + line.id + "'");
  }
  const std::string custom = attr(node, "custom");
  if (auto s = custom_structure_score(custom)) line.score = *s;
  return line;
}

}  // namespace detail

inline PageParseResult parse_page_xml(const std::string& xml_text) {
  using detail::ptree;
  ptree doc;
  try {
    std::istringstream in(xml_text);
    boost::property_tree::read_xml(
        in, doc, boost::property_tree::xml_parser::trim_whitespace);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw MalformedXml(e.what());
  }

  const ptree* pcgts = detail::find_child(doc, "PcGts");
  if (!pcgts) throw UnsupportedSchema("no PcGts root element");

  PageParseResult result;

  // Namespace check: any xmlns attribute carrying a PAGE pagecontent URI.
  std::string ns;
  if (const auto attrs = pcgts->get_child_optional("<xmlattr>")) {
    for (const auto& [key, value] : *attrs) {
      if (key.rfind("xmlns", 0) == 0 &&
          value.data().find("PAGE/gts/pagecontent") != std::string::npos) {
        ns = value.data();
      }
    }
  }
  if (ns.empty())
    throw UnsupportedSchema("PAGE pagecontent namespace not found");
  if (ns != kPageNamespace2013)
    result.warnings.push_back("SchemaVersion: parsing '" + ns +
                              "' as 2013-07-15");

  const ptree* page_node = detail::find_child(*pcgts, "Page");
  if (!page_node) throw MalformedXml("no Page element");

  Page& page = result.page;
  page.image_filename = detail::attr(*page_node, "imageFilename");
  page.width = std::stoi(detail::attr(*page_node, "imageWidth", "0"));
  page.height = std::stoi(detail::attr(*page_node, "imageHeight", "0"));
  if (page.width <= 0 || page.height <= 0)
    throw MalformedXml("nonpositive page dimensions");

  for (const auto& [key, node] : *page_node) {
    const std::string name = detail::local_name(key);
    const bool is_region =
        name == "TextRegion" || name == "ImageRegion" ||
        name == "GraphicRegion" || name == "MusicRegion" ||
        name == "SeparatorRegion" || name == "TableRegion" ||
        name == "NoiseRegion" || name == "UnknownRegion";
    if (is_region) {
      Region region;
      region.id = detail::attr(node, "id");
      const std::string custom = detail::attr(node, "custom");
      region.class_label = detail::attr(node, "type");
      if (region.class_label.empty()) {
        region.class_label =
            detail::custom_structure_type(custom).value_or("unknown");
      }
      if (auto s = detail::custom_structure_score(custom)) region.score = *s;
      if (auto pts = detail::coords_points(node); pts && pts->size() >= 3) {
        region.polygon.vertices = std::move(*pts);
      } else {
        result.warnings.push_back("MissingCoords: region '" + region.id +
                                  "' skipped");
        continue;
      }
      for (const auto& [ckey, cnode] : node) {
        if (detail::local_name(ckey) != "TextLine") continue;
        bool ok = false;
        TextLine line = detail::parse_text_line(cnode, result.warnings, ok);
        if (ok) region.lines.push_back(std::move(line));
      }
      page.regions.push_back(std::move(region));
    } else if (name == "TextLine") {
      // Lines directly under Page belong to no region.
      bool ok = false;
      TextLine line = detail::parse_text_line(node, result.warnings, ok);
      if (ok) page.orphan_lines.push_back(std::move(line));
    }
  }
  return result;
}

inline PageParseResult parse_page_xml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedXml("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_page_xml(buf.str());
}

namespace detail {

inline void write_custom(std::ostream& out, const std::string& label,
                         double score) {
  out << " custom=\"structure {type:" << xml_escape(label);
  if (score != 1.0) out << ";score:" << score;
  out << ";}\"";
}

inline void write_line(std::ostream& out, const TextLine& line, double w,
                       double h, const char* indent) {
  out << indent << "<TextLine id=\"" << xml_escape(line.id) << "\"";
  if (line.score != 1.0) out << " custom=\"structure {score:" << line.score
                             << ";}\"";
  out << ">\n";
  out << indent << "  <Coords points=\""
      << format_points(line.polygon.vertices, w, h) << "\"/>\n";
  if (!line.baseline.points.empty()) {
    out << indent << "  <Baseline points=\""
        << format_points(line.baseline.points, w, h) << "\"/>\n";
  }
  out << indent << "</TextLine>\n";
}

}  // namespace detail

inline std::string write_page_xml(const Page& page) {
  const double w = page.width;
  const double h = page.height;
  std::ostringstream out;
  out.precision(6);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<PcGts xmlns=\"" << kPageNamespace2013 << "\">\n";
  out << "  <Page imageFilename=\"" << detail::xml_escape(page.image_filename)
      << "\" imageWidth=\"" << page.width << "\" imageHeight=\"" << page.height
      << "\">\n";
  for (const Region& region : page.regions) {
    out << "    <TextRegion id=\"" << detail::xml_escape(region.id)
        << "\" type=\"" << detail::xml_escape(region.class_label) << "\"";
    detail::write_custom(out, region.class_label, region.score);
    out << ">\n";
    out << "      <Coords points=\""
        << detail::format_points(region.polygon.vertices, w, h) << "\"/>\n";
    for (const TextLine& line : region.lines)
      detail::write_line(out, line, w, h, "      ");
    out << "    </TextRegion>\n";
  }
  for (const TextLine& line : page.orphan_lines)
    detail::write_line(out, line, w, h, "    ");
  out << "  </Page>\n";
  out << "</PcGts>\n";
  return out.str();
}

}  // namespace dla
