#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dla {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Closed polygon, vertices in drawing order, last edge implicit.
struct Polygon {
  std::vector<Point> vertices;

  [[nodiscard]] double signed_area() const {
    if (vertices.size() < 3) return 0.0;
    double a = 0.0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      const Point& p = vertices[i];
      const Point& q = vertices[(i + 1) % vertices.size()];
      a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
  }

  [[nodiscard]] double area() const { return std::abs(signed_area()); }

  [[nodiscard]] bool valid() const {
    return vertices.size() >= 3 && area() > 0.0;
  }

  // Even-odd crossing test against the pixel-center sample point.
  [[nodiscard]] bool contains(double px, double py) const {
    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = vertices[i];
      const Point& b = vertices[j];
      if ((a.y > py) != (b.y > py) &&
          px < (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x) {
        inside = !inside;
      }
    }
    return inside;
  }

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct BBox {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  [[nodiscard]] double width() const { return x1 - x0; }
  [[nodiscard]] double height() const { return y1 - y0; }
  [[nodiscard]] double area() const { return width() * height(); }
  [[nodiscard]] bool valid() const { return x0 <= x1 && y0 <= y1; }

  [[nodiscard]] BBox clipped(double w, double h) const {
    BBox r{std::clamp(x0, 0.0, w), std::clamp(y0, 0.0, h),
           std::clamp(x1, 0.0, w), std::clamp(y1, 0.0, h)};
    return r;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline BBox bounding_box(const Polygon& poly) {
  BBox b{1e300, 1e300, -1e300, -1e300};
  for (const Point& p : poly.vertices) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

inline double bbox_iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Row-major binary raster.
class BitMask {
 public:
  BitMask() = default;
  BitMask(int width, int height)
      : width_(width), height_(height),
        bits_(static_cast<std::size_t>(width) * height, 0) {}

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }

  [[nodiscard]] bool get(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v = true) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }

  [[nodiscard]] std::uint64_t popcount() const {
    std::uint64_t n = 0;
    for (std::uint8_t b : bits_) n += b;
    return n;
  }

  [[nodiscard]] bool empty() const { return popcount() == 0; }

  [[nodiscard]] const std::vector<std::uint8_t>& data() const { return bits_; }

  friend bool operator==(const BitMask&, const BitMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline double mask_iou(const BitMask& a, const BitMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw DimensionMismatch("mask_iou: dimensions differ");
  std::uint64_t inter = 0, uni = 0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    inter += da[i] & db[i];
    uni += da[i] | db[i];
  }
  // Two empty masks never count as a match.
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

// Scanline even-odd rasterization sampling pixel centers (x+0.5, y+0.5).
// Degenerate polygons rasterize to an empty mask.
inline BitMask rasterize(const Polygon& poly, int width, int height) {
  BitMask mask(width, height);
  if (poly.vertices.size() < 3 || poly.area() <= 0.0) return mask;

  const BBox bb = bounding_box(poly);
  const int y_lo = std::max(0, static_cast<int>(std::floor(bb.y0 - 0.5)));
  const int y_hi = std::min(height - 1, static_cast<int>(std::ceil(bb.y1)));
  const int x_lo = std::max(0, static_cast<int>(std::floor(bb.x0 - 0.5)));
  const int x_hi = std::min(width - 1, static_cast<int>(std::ceil(bb.x1)));

  const std::size_t n = poly.vertices.size();
  std::vector<double> crossings;
  for (int y = y_lo; y <= y_hi; ++y) {
    const double py = y + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = poly.vertices[i];
      const Point& b = poly.vertices[j];
      if ((a.y > py) != (b.y > py)) {
        crossings.push_back((b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x);
      }
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    for (int x = x_lo; x <= x_hi; ++x) {
      const double px = x + 0.5;
      const auto it = std::upper_bound(crossings.begin(), crossings.end(), px);
      if ((crossings.end() - it) % 2 == 1) mask.set(x, y);
    }
  }
  return mask;
}

// Row-major grid of class indices, 0 = background.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height)
      : width_(width), height_(height),
        labels_(static_cast<std::size_t>(width) * height, 0) {}

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }

  [[nodiscard]] int get(int x, int y) const {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  void set(int x, int y, int label) {
    labels_[static_cast<std::size_t>(y) * width_ + x] = label;
  }

  void paint(const BitMask& mask, int label) {
    if (mask.width() != width_ || mask.height() != height_)
      throw DimensionMismatch("LabelMap::paint: mask dimensions differ");
    const auto& bits = mask.data();
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) labels_[i] = label;
  }

  [[nodiscard]] const std::vector<std::int32_t>& data() const {
    return labels_;
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int32_t> labels_;
};

// One paintable item for label-map construction.
struct PaintItem {
  BitMask mask;
  int label = 0;
  double score = 1.0;
  std::string id;
};

// Paints in ascending (score, id) order so the highest-scoring item wins
// contested pixels. Ties broken by lexicographic id for determinism.
inline LabelMap paint_label_map(std::vector<PaintItem> items, int width,
                                int height) {
  LabelMap map(width, height);
  std::stable_sort(items.begin(), items.end(),
                   [](const PaintItem& a, const PaintItem& b) {
                     if (a.score != b.score) return a.score < b.score;
                     return a.id < b.id;
                   });
  for (const PaintItem& item : items) map.paint(item.mask, item.label);
  return map;
}

// Binary PGM (P5) dump for visual inspection.
inline void write_pgm(const BitMask& mask, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
  for (std::uint8_t b : mask.data())
    out.put(b ? static_cast<char>(255) : 0);
}

inline void write_pgm(const LabelMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << map.width() << " " << map.height() << "\n255\n";
  std::int32_t max_label = 1;
  for (std::int32_t v : map.data()) max_label = std::max(max_label, v);
  for (std::int32_t v : map.data())
    out.put(static_cast<char>(v * 255 / max_label));
}

}  // namespace dla
