#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dla/pipeline.hpp"

namespace dla {

struct BadDetectionRecord : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Line-delimited detections interchange format. Tab-separated fields:
//   page_id  class_label  score  "x0 y0 x1 y1"  polygon|-  rle|-
// polygon: space-separated "x,y" pairs; rle: "w,h:n0 n1 ..." alternating
// background/foreground run lengths, row-major, starting with background.
// Lines starting with '#' are comments.
namespace detections_io {

inline std::string encode_rle(const BitMask& mask) {
  std::ostringstream out;
  out << mask.width() << ',' << mask.height() << ':';
  const auto& bits = mask.data();
  std::uint8_t current = 0;
  std::size_t run = 0;
  bool first = true;
  auto flush = [&]() {
    if (!first) out << ' ';
    out << run;
    first = false;
  };
  for (std::uint8_t b : bits) {
    if (b == current) {
      ++run;
    } else {
      flush();
      current = b;
      run = 1;
    }
  }
  flush();
  return out.str();
}

inline BitMask decode_rle(const std::string& text) {
  const auto colon = text.find(':');
  const auto comma = text.find(',');
  if (colon == std::string::npos || comma == std::string::npos || comma > colon)
    throw BadDetectionRecord("bad RLE header: " + text);
  const int w = std::stoi(text.substr(0, comma));
  const int h = std::stoi(text.substr(comma + 1, colon - comma - 1));
  BitMask mask(w, h);
  std::istringstream in(text.substr(colon + 1));
  std::size_t pos = 0;
  std::size_t run = 0;
  std::uint8_t value = 0;
  const std::size_t total = static_cast<std::size_t>(w) * h;
  while (in >> run) {
    if (pos + run > total) throw BadDetectionRecord("RLE overruns mask");
    if (value)
      for (std::size_t i = 0; i < run; ++i)
        mask.set(static_cast<int>((pos + i) % w),
                 static_cast<int>((pos + i) / w));
    pos += run;
    value = !value;
  }
  if (pos != total) throw BadDetectionRecord("RLE underruns mask");
  return mask;
}

inline std::string format_record(const Detection& d) {
  std::ostringstream out;
  out.precision(10);
  out << d.page_id << '\t' << d.class_label << '\t' << d.score << '\t'
      << d.box.x0 << ' ' << d.box.y0 << ' ' << d.box.x1 << ' ' << d.box.y1
      << '\t';
  if (d.polygon) {
    for (std::size_t i = 0; i < d.polygon->vertices.size(); ++i) {
      const Point& p = d.polygon->vertices[i];
      if (i) out << ' ';
      out << p.x << ',' << p.y;
    }
  } else {
    out << '-';
  }
  out << '\t' << (d.mask ? encode_rle(*d.mask) : "-");
  return out.str();
}

inline Detection parse_record(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (fields.size() < 4)
    throw BadDetectionRecord("expected >= 4 tab-separated fields: " + line);

  Detection d;
  d.page_id = fields[0];
  d.class_label = fields[1];
  d.score = std::stod(fields[2]);
  std::istringstream box_in(fields[3]);
  if (!(box_in >> d.box.x0 >> d.box.y0 >> d.box.x1 >> d.box.y1))
    throw BadDetectionRecord("bad box field: " + fields[3]);
  if (fields.size() > 4 && fields[4] != "-" && !fields[4].empty()) {
    Polygon poly;
    poly.vertices = detail::parse_points(fields[4]);
    if (poly.vertices.size() < 3)
      throw BadDetectionRecord("polygon needs >= 3 points: " + fields[4]);
    d.polygon = std::move(poly);
  }
  if (fields.size() > 5 && fields[5] != "-" && !fields[5].empty())
    d.mask = decode_rle(fields[5]);
  return d;
}

inline void write_file(const std::vector<Detection>& dets,
                       const std::string& path) {
  std::ofstream out(path);
  for (const Detection& d : dets) out << format_record(d) << '\n';
}

inline std::vector<Detection> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadDetectionRecord("cannot open " + path);
  std::vector<Detection> dets;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    Detection d = parse_record(line);
    d.id = "d" + std::to_string(n);
    dets.push_back(std::move(d));
  }
  return dets;
}

}  // namespace detections_io
}  // namespace dla
