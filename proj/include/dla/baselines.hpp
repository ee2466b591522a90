#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dla/geometry.hpp"
#include "dla/page_model.hpp"

namespace dla {

struct LineGeometryConfig {
  double offset_above = 16.0;
  double offset_below = 4.0;
  double resample_step = 5.0;
  double simplify_epsilon = 2.0;
};

struct DegenerateBaseline : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct EmptyMask : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct EmptyInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline double point_segment_distance(const Point& p, const Point& a,
                                     const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0)
    t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

inline void douglas_peucker_rec(const std::vector<Point>& pts,
                                std::size_t first, std::size_t last,
                                double epsilon, std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double max_dist = -1.0;
  std::size_t max_idx = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = point_segment_distance(pts[i], pts[first], pts[last]);
    if (d > max_dist) {
      max_dist = d;
      max_idx = i;
    }
  }
  if (max_dist > epsilon) {
    keep[max_idx] = true;
    douglas_peucker_rec(pts, first, max_idx, epsilon, keep);
    douglas_peucker_rec(pts, max_idx, last, epsilon, keep);
  }
}

}  // namespace detail

inline std::vector<Point> douglas_peucker(const std::vector<Point>& pts,
                                          double epsilon) {
  if (pts.size() <= 2) return pts;
  std::vector<bool> keep(pts.size(), false);
  keep.front() = keep.back() = true;
  detail::douglas_peucker_rec(pts, 0, pts.size() - 1, epsilon, keep);
  std::vector<Point> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.push_back(pts[i]);
  return out;
}

namespace detail {

// Sort by x and merge duplicate x by mean y; horizontal-script assumption.
inline std::vector<Point> monotonize_x(std::vector<Point> pts) {
  std::stable_sort(pts.begin(), pts.end(),
                   [](const Point& a, const Point& b) { return a.x < b.x; });
  std::vector<Point> out;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i;
    double sum_y = 0.0;
    while (j < pts.size() && pts[j].x == pts[i].x) sum_y += pts[j++].y;
    out.push_back(Point{pts[i].x, sum_y / static_cast<double>(j - i)});
    i = j;
  }
  return out;
}

}  // namespace detail

// Offsets each baseline point along the local unit normal: offset_above on
// the ascender side (negative y for left-to-right script), offset_below on
// the descender side. Traverses above-forward then below-backward.
inline Polygon baseline_to_polygon(const Baseline& baseline,
                                   const LineGeometryConfig& config = {}) {
  std::vector<Point> pts = detail::monotonize_x(baseline.points);
  if (pts.size() < 2)
    throw DegenerateBaseline("baseline_to_polygon: < 2 distinct points");

  const std::size_t n = pts.size();
  std::vector<Point> normals(n);
  auto segment_normal = [&](std::size_t i) {
    const double dx = pts[i + 1].x - pts[i].x;
    const double dy = pts[i + 1].y - pts[i].y;
    const double len = std::hypot(dx, dy);
    return len > 0.0 ? Point{dy / len, -dx / len} : Point{0.0, -1.0};
  };
  for (std::size_t i = 0; i < n; ++i) {
    Point nrm;
    if (i == 0) {
      nrm = segment_normal(0);
    } else if (i == n - 1) {
      nrm = segment_normal(n - 2);
    } else {
      const Point a = segment_normal(i - 1);
      const Point b = segment_normal(i);
      nrm = Point{a.x + b.x, a.y + b.y};
      const double len = std::hypot(nrm.x, nrm.y);
      nrm = len > 0.0 ? Point{nrm.x / len, nrm.y / len} : Point{0.0, -1.0};
    }
    normals[i] = nrm;
  }

  Polygon poly;
  poly.vertices.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i)
    poly.vertices.push_back(Point{pts[i].x + config.offset_above * normals[i].x,
                                  pts[i].y +
                                      config.offset_above * normals[i].y});
  for (std::size_t i = n; i-- > 0;)
    poly.vertices.push_back(Point{pts[i].x - config.offset_below * normals[i].x,
                                  pts[i].y -
                                      config.offset_below * normals[i].y});
  return poly;
}

// Bottom-contour baseline extraction: lowest set pixel per column, moving
// median smoothing, shift up by offset_below, Douglas-Peucker simplify.
inline Baseline polygon_to_baseline(const Polygon& polygon,
                                    const LineGeometryConfig& config,
                                    int image_width, int image_height) {
  const BitMask mask = rasterize(polygon, image_width, image_height);

  std::vector<Point> contour;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = mask.height() - 1; y >= 0; --y) {
      if (mask.get(x, y)) {
        contour.push_back(Point{x + 0.5, y + 0.5});
        break;
      }
    }
  }
  if (contour.size() < 2)
    throw EmptyMask("polygon_to_baseline: rasterization empty");

  // drop steep end-cap columns: interior bottom-contour steps stay near the
  // writing slope, while the caps of an offset polygon climb almost vertically
  auto steep = [](const Point& a, const Point& b) {
    return std::abs(b.y - a.y) > 2.0 * std::abs(b.x - a.x);
  };
  std::size_t lo = 0, hi = contour.size() - 1;
  while (hi - lo > 2 && steep(contour[lo], contour[lo + 1])) ++lo;
  while (hi - lo > 2 && steep(contour[hi - 1], contour[hi])) --hi;
  contour = std::vector<Point>(contour.begin() + lo,
                               contour.begin() + hi + 1);

  int window = static_cast<int>(std::lround(config.resample_step * 3));
  if (window % 2 == 0) window += 1;
  const int half = window / 2;
  std::vector<Point> smoothed(contour.size());
  std::vector<double> buf;
  for (std::size_t i = 0; i < contour.size(); ++i) {
    const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
    const std::size_t hi = std::min(contour.size() - 1, i + half);
    buf.clear();
    for (std::size_t j = lo; j <= hi; ++j) buf.push_back(contour[j].y);
    std::nth_element(buf.begin(), buf.begin() + buf.size() / 2, buf.end());
    double med = buf[buf.size() / 2];
    if (buf.size() % 2 == 0) {
      const double lower =
          *std::max_element(buf.begin(), buf.begin() + buf.size() / 2);
      med = (med + lower) / 2;
    }
    smoothed[i] = Point{contour[i].x, med - config.offset_below};
  }

  Baseline out;
  out.points = douglas_peucker(smoothed, config.simplify_epsilon);
  return out;
}

// Arc-length resampling at {0, step, 2*step, ..., L}; original vertices are
// retained so arc length is preserved exactly, and the final point is always
// emitted. Consecutive spacing never exceeds step.
inline Baseline normalize_baseline(const Baseline& baseline, double step) {
  if (step <= 0.0) throw std::invalid_argument("normalize_baseline: step <= 0");
  if (!baseline.valid())
    throw DegenerateBaseline("normalize_baseline: invalid baseline");

  const std::vector<Point>& pts = baseline.points;
  Baseline out;
  out.points.push_back(pts.front());
  auto emit = [&](const Point& p) {
    const Point& prev = out.points.back();
    if (std::hypot(p.x - prev.x, p.y - prev.y) > 1e-9) out.points.push_back(p);
  };
  double next_mark = step;
  double walked = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double seg =
        std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
    if (seg <= 0.0) continue;
    while (next_mark <= walked + seg) {
      const double t = (next_mark - walked) / seg;
      emit(Point{pts[i - 1].x + t * (pts[i].x - pts[i - 1].x),
                 pts[i - 1].y + t * (pts[i].y - pts[i - 1].y)});
      next_mark += step;
    }
    walked += seg;
    emit(pts[i]);
  }
  // keep the exact final vertex
  out.points.back() = pts.back();
  if (out.points.size() < 2) out.points.push_back(pts.back());
  return out;
}

// Median nearest-neighbor gap between baseline mean-y values. Single
// baseline falls back to 60 px.
inline double estimate_interline(const std::vector<Baseline>& baselines) {
  if (baselines.empty()) throw EmptyInput("estimate_interline: no baselines");
  if (baselines.size() == 1) return 60.0;

  std::vector<double> ys;
  ys.reserve(baselines.size());
  for (const Baseline& b : baselines) ys.push_back(b.mean_y());

  std::vector<double> gaps;
  gaps.reserve(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double best = 1e300;
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (j == i) continue;
      best = std::min(best, std::abs(ys[i] - ys[j]));
    }
    gaps.push_back(best);
  }
  std::sort(gaps.begin(), gaps.end());
  const std::size_t m = gaps.size();
  return m % 2 == 1 ? gaps[m / 2] : (gaps[m / 2 - 1] + gaps[m / 2]) / 2;
}

}  // namespace dla
