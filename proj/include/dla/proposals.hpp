#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dla/geometry.hpp"

namespace dla {

struct AnchorShape {
  double width = 0.0;
  double height = 0.0;
  double scale = 0.0;
  std::string ratio;  // "h:w" label, e.g. "2:1"
};

struct ScoredBox {
  BBox box;
  double score = 0.0;
  int class_index = 0;
};

// Center-offset / log-size parameterization relative to an anchor box.
struct BoxDelta {
  double dx = 0.0, dy = 0.0, dw = 0.0, dh = 0.0;
};

struct NonPositiveAnchor : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// One shape per (scale, ratio) pair: w = s/sqrt(r), h = s*sqrt(r) with
// r = h/w, so w*h == s^2.
inline std::vector<AnchorShape> anchor_shapes(
    const std::vector<double>& scales,
    const std::vector<std::pair<int, int>>& ratios_h_w) {
  std::vector<AnchorShape> shapes;
  shapes.reserve(scales.size() * ratios_h_w.size());
  for (double s : scales) {
    for (const auto& [rh, rw] : ratios_h_w) {
      const double r = static_cast<double>(rh) / rw;
      AnchorShape shape;
      shape.scale = s;
      shape.width = s / std::sqrt(r);
      shape.height = s * std::sqrt(r);
      shape.ratio = std::to_string(rh) + ":" + std::to_string(rw);
      shapes.push_back(std::move(shape));
    }
  }
  return shapes;
}

inline std::vector<AnchorShape> default_anchor_shapes() {
  return anchor_shapes({32, 64, 128, 256, 512}, {{1, 1}, {1, 2}, {2, 1}});
}

// Sliding-window anchor grid. Boxes overhanging the image are kept.
inline std::vector<BBox> anchor_grid(const std::vector<AnchorShape>& shapes,
                                     int width, int height, int stride) {
  if (stride < 1) throw std::invalid_argument("anchor_grid: stride < 1");
  std::vector<BBox> anchors;
  // at least one cell even when the stride exceeds the image
  const int ny = std::max(1, (height - stride / 2 + stride - 1) / stride);
  const int nx = std::max(1, (width - stride / 2 + stride - 1) / stride);
  for (int iy = 0; iy < ny; ++iy) {
    const int cy = iy * stride + stride / 2;
    for (int ix = 0; ix < nx; ++ix) {
      const int cx = ix * stride + stride / 2;
      for (const AnchorShape& s : shapes) {
        anchors.push_back(BBox{cx - s.width / 2, cy - s.height / 2,
                               cx + s.width / 2, cy + s.height / 2});
      }
    }
  }
  return anchors;
}

inline BoxDelta encode_delta(const BBox& anchor, const BBox& target) {
  const double aw = anchor.width();
  const double ah = anchor.height();
  if (aw <= 0.0 || ah <= 0.0)
    throw NonPositiveAnchor("encode_delta: anchor has nonpositive size");
  BoxDelta d;
  d.dx = ((target.x0 + target.x1) / 2 - (anchor.x0 + anchor.x1) / 2) / aw;
  d.dy = ((target.y0 + target.y1) / 2 - (anchor.y0 + anchor.y1) / 2) / ah;
  d.dw = std::log(target.width() / aw);
  d.dh = std::log(target.height() / ah);
  return d;
}

inline BBox decode_delta(const BBox& anchor, const BoxDelta& delta) {
  const double aw = anchor.width();
  const double ah = anchor.height();
  if (aw <= 0.0 || ah <= 0.0)
    throw NonPositiveAnchor("decode_delta: anchor has nonpositive size");
  const double cx = (anchor.x0 + anchor.x1) / 2 + delta.dx * aw;
  const double cy = (anchor.y0 + anchor.y1) / 2 + delta.dy * ah;
  const double w = aw * std::exp(delta.dw);
  const double h = ah * std::exp(delta.dh);
  return BBox{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

// Greedy NMS, descending score with stable-index tie break. A candidate is
// kept iff its IoU with every kept box is <= threshold. Class-wise by
// default: boxes of different classes never suppress each other.
inline std::vector<ScoredBox> nms(const std::vector<ScoredBox>& boxes,
                                  double iou_threshold, std::size_t cap,
                                  bool class_wise = true) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return boxes[a].score > boxes[b].score;
                   });
  std::vector<ScoredBox> kept;
  for (std::size_t idx : order) {
    if (kept.size() >= cap) break;
    const ScoredBox& cand = boxes[idx];
    bool suppressed = false;
    for (const ScoredBox& k : kept) {
      if (class_wise && k.class_index != cand.class_index) continue;
      if (bbox_iou(k.box, cand.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

// Top-m candidates by score with m = max(100, n_train_max + 50).
inline std::vector<ScoredBox> select_rois(std::vector<ScoredBox> candidates,
                                          std::size_t n_train_max) {
  const std::size_t m = std::max<std::size_t>(100, n_train_max + 50);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ScoredBox& a, const ScoredBox& b) {
                     return a.score > b.score;
                   });
  if (candidates.size() > m) candidates.resize(m);
  return candidates;
}

inline double combine_losses(double l_rpn, double l_r, double l_bb,
                             double l_mask, double lambda_rpn = 1.0,
                             double lambda_r = 1.0, double lambda_bb = 1.0,
                             double lambda_mask = 1.0) {
  return lambda_rpn * l_rpn + lambda_r * l_r + lambda_bb * l_bb +
         lambda_mask * l_mask;
}

}  // namespace dla
