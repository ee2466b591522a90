#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dla/baselines.hpp"
#include "dla/geometry.hpp"
#include "dla/page_model.hpp"
#include "dla/proposals.hpp"

namespace dla {

// One hypothesized object as produced by a detector.
struct Detection {
  std::string page_id;
  std::string id;
  std::string class_label;
  double score = 0.0;
  BBox box;
  std::optional<Polygon> polygon;
  std::optional<BitMask> mask;
};

struct PipelineConfig {
  double nms_threshold = 0.5;
  std::size_t roi_cap = 1000;
  std::size_t n_train_max = 50;
  double score_threshold = 0.5;
  bool class_wise_nms = true;
  bool box_iou_insertion = false;  // default: mask IoU for line insertion
  LineGeometryConfig line_geometry;
  std::string textline_label = "text-line";
};

// Keep a detection iff its best class probability is not strictly below the
// threshold.
inline std::vector<Detection> filter_by_score(std::vector<Detection> dets,
                                              double threshold = 0.5) {
  std::erase_if(dets,
                [&](const Detection& d) { return d.score < threshold; });
  return dets;
}

namespace detail {

inline BBox detection_bbox(const Detection& d) {
  if (d.box.area() > 0.0 || d.box.x1 > d.box.x0 || d.box.y1 > d.box.y0)
    return d.box;
  if (d.polygon) return bounding_box(*d.polygon);
  return d.box;
}

inline Polygon detection_polygon(const Detection& d) {
  if (d.polygon) return *d.polygon;
  // fallback: axis-aligned rectangle of the box
  const BBox b = detection_bbox(d);
  return Polygon{{{b.x0, b.y0}, {b.x1, b.y0}, {b.x1, b.y1}, {b.x0, b.y1}}};
}

inline BitMask detection_mask(const Detection& d, int width, int height) {
  if (d.mask && d.mask->width() == width && d.mask->height() == height)
    return *d.mask;
  return rasterize(detection_polygon(d), width, height);
}

}  // namespace detail

// Inference post-processing: NMS (capped), RoI selection with
// m = max(100, n_train_max + 50), score filter, text-line/region split,
// baseline extraction, hierarchical max-IoU line insertion.
inline Page post_process(const std::vector<Detection>& detections,
                         const PipelineConfig& config, int width, int height,
                         std::vector<std::string>* warnings = nullptr) {
  Page page;
  page.width = width;
  page.height = height;
  if (detections.empty()) return page;
  page.image_filename = detections.front().page_id;

  // stage 1: greedy NMS capped at roi_cap
  std::map<std::string, int> class_index;
  for (const Detection& d : detections)
    class_index.emplace(d.class_label,
                        static_cast<int>(class_index.size()));

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return detections[a].score > detections[b].score;
                   });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    if (kept.size() >= config.roi_cap) break;
    const Detection& cand = detections[idx];
    bool suppressed = false;
    for (std::size_t k : kept) {
      const Detection& prev = detections[k];
      if (config.class_wise_nms && prev.class_label != cand.class_label)
        continue;
      if (bbox_iou(detail::detection_bbox(prev),
                   detail::detection_bbox(cand)) > config.nms_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }

  // stage 2: best m by score
  const std::size_t m = std::max<std::size_t>(100, config.n_train_max + 50);
  if (kept.size() > m) kept.resize(m);

  // stage 3: score filter
  std::erase_if(kept, [&](std::size_t idx) {
    return detections[idx].score < config.score_threshold;
  });

  // stage 4: split region vs text-line detections
  std::vector<std::size_t> region_idx, line_idx;
  for (std::size_t idx : kept) {
    if (detections[idx].class_label == config.textline_label)
      line_idx.push_back(idx);
    else
      region_idx.push_back(idx);
  }

  std::vector<BitMask> region_masks;
  for (std::size_t idx : region_idx) {
    const Detection& d = detections[idx];
    Region region;
    region.id = d.id.empty()
                    ? "r" + std::to_string(page.regions.size() + 1)
                    : d.id;
    region.class_label = d.class_label;
    region.polygon = detail::detection_polygon(d);
    region.score = d.score;
    region_masks.push_back(detail::detection_mask(d, width, height));
    page.regions.push_back(std::move(region));
  }

  // stages 5-6: baseline extraction and hierarchical insertion
  for (std::size_t idx : line_idx) {
    const Detection& d = detections[idx];
    TextLine line;
    line.id = d.id.empty() ? "l" + std::to_string(idx + 1) : d.id;
    line.polygon = detail::detection_polygon(d);
    line.score = d.score;
    const BitMask line_mask = detail::detection_mask(d, width, height);
    try {
      line.baseline =
          polygon_to_baseline(line.polygon, config.line_geometry, width,
                              height);
    } catch (const EmptyMask&) {
      if (warnings)
        warnings->push_back("EmptyMask: text-line '" + line.id +
                            "' has no extractable baseline");
    }

    double best_iou = 0.0;
    std::size_t best = page.regions.size();
    const BBox line_box = detail::detection_bbox(d);
    for (std::size_t r = 0; r < page.regions.size(); ++r) {
      const double iou =
          config.box_iou_insertion
              ? bbox_iou(line_box,
                         bounding_box(page.regions[r].polygon))
              : mask_iou(line_mask, region_masks[r]);
      const bool better =
          iou > best_iou ||
          (iou == best_iou && iou > 0.0 && best < page.regions.size() &&
           (page.regions[r].score > page.regions[best].score ||
            (page.regions[r].score == page.regions[best].score &&
             page.regions[r].id < page.regions[best].id)));
      if (better) {
        best_iou = iou;
        best = r;
      }
    }
    if (best_iou > 0.0 && best < page.regions.size())
      page.regions[best].lines.push_back(std::move(line));
    else
      page.orphan_lines.push_back(std::move(line));
  }
  return page;
}

// Converts a page back to detections, e.g. to feed post_process its own
// output.
inline std::vector<Detection> page_to_detections(
    const Page& page, const std::string& page_id,
    const std::string& textline_label = "text-line", double score = 1.0) {
  std::vector<Detection> dets;
  auto add_line = [&](const TextLine& line) {
    Detection d;
    d.page_id = page_id;
    d.id = line.id;
    d.class_label = textline_label;
    d.score = score;
    d.polygon = line.polygon;
    d.box = bounding_box(line.polygon);
    dets.push_back(std::move(d));
  };
  for (const Region& r : page.regions) {
    Detection d;
    d.page_id = page_id;
    d.id = r.id;
    d.class_label = r.class_label;
    d.score = score;
    d.polygon = r.polygon;
    d.box = bounding_box(r.polygon);
    dets.push_back(std::move(d));
    for (const TextLine& line : r.lines) add_line(line);
  }
  for (const TextLine& line : page.orphan_lines) add_line(line);
  return dets;
}

struct SynthSpec {
  int width = 800;
  int height = 1200;
  int n_regions = 3;
  int lines_per_region = 4;
  std::vector<std::string> classes = {"paragraph", "marginalia"};
  double jitter = 0.0;
  int false_positives = 0;
  int false_negatives = 0;
  std::string textline_label = "text-line";
  double detection_score = 0.9;
};

// Deterministic fixture generator: stacked rectangular regions with
// horizontal text lines, plus a perturbed detection set with
// known-by-construction evaluation targets.
inline std::pair<Page, std::vector<Detection>> generate_synthetic_page(
    unsigned seed, const SynthSpec& spec) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Page page;
  page.width = spec.width;
  page.height = spec.height;
  page.image_filename = "synthetic_" + std::to_string(seed) + ".png";

  const double interline = 40.0;
  const double region_h = spec.lines_per_region * interline + 20.0;
  const double gap = 30.0;
  double y = 80.0;  // top band reserved for false positives
  const double x0 = 100.0;
  const double x1 = spec.width - 100.0;

  for (int r = 0; r < spec.n_regions; ++r) {
    if (y + region_h > spec.height - 10.0) break;
    Region region;
    region.id = "r" + std::to_string(r + 1);
    region.class_label = spec.classes[r % spec.classes.size()];
    region.polygon =
        Polygon{{{x0, y}, {x1, y}, {x1, y + region_h}, {x0, y + region_h}}};
    for (int l = 0; l < spec.lines_per_region; ++l) {
      TextLine line;
      line.id = region.id + "_l" + std::to_string(l + 1);
      const double ly = y + 30.0 + l * interline;
      line.baseline.points = {{x0 + 10.0, ly}, {x1 - 10.0, ly}};
      line.polygon = baseline_to_polygon(line.baseline);
      region.lines.push_back(std::move(line));
    }
    page.regions.push_back(std::move(region));
    y += region_h + gap;
  }

  // detections: jittered ground truth minus false negatives
  std::vector<Detection> dets = page_to_detections(
      page, page.image_filename, spec.textline_label, spec.detection_score);
  for (int i = 0; i < spec.false_negatives && !dets.empty(); ++i) {
    const std::size_t victim =
        static_cast<std::size_t>(unit(rng) * dets.size());
    dets.erase(dets.begin() + std::min(victim, dets.size() - 1));
  }
  if (spec.jitter > 0.0) {
    std::uniform_real_distribution<double> j(-spec.jitter, spec.jitter);
    for (Detection& d : dets) {
      const double dx = j(rng), dy = j(rng);
      if (d.polygon)
        for (Point& p : d.polygon->vertices) {
          p.x += dx;
          p.y += dy;
        }
      d.box = BBox{d.box.x0 + dx, d.box.y0 + dy, d.box.x1 + dx,
                   d.box.y1 + dy};
    }
  }
  for (int i = 0; i < spec.false_positives; ++i) {
    // confined to the reserved top band so they never overlap real regions
    const double fx = 20.0 + unit(rng) * (spec.width - 140.0);
    Detection d;
    d.page_id = page.image_filename;
    d.id = "fp" + std::to_string(i + 1);
    d.class_label = spec.classes[i % spec.classes.size()];
    d.score = spec.detection_score;
    d.polygon =
        Polygon{{{fx, 10.0}, {fx + 100.0, 10.0}, {fx + 100.0, 60.0},
                 {fx, 60.0}}};
    d.box = bounding_box(*d.polygon);
    dets.push_back(std::move(d));
  }
  return {page, dets};
}

}  // namespace dla
