#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dla/baselines.hpp"
#include "dla/geometry.hpp"
#include "dla/page_model.hpp"

namespace dla {

struct LabelOutOfRange : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct EmptyAccumulator : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// K x K pixel-count accumulator; counts[i][j] = pixels of true class i
// predicted as class j. Class 0 is background.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int num_classes)
      : k_(num_classes),
        counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {}

  [[nodiscard]] int num_classes() const { return k_; }

  [[nodiscard]] std::uint64_t at(int truth, int pred) const {
    return counts_[static_cast<std::size_t>(truth) * k_ + pred];
  }
  void add(int truth, int pred, std::uint64_t n = 1) {
    if (truth < 0 || truth >= k_ || pred < 0 || pred >= k_)
      throw LabelOutOfRange("ConfusionMatrix::add: label out of range");
    counts_[static_cast<std::size_t>(truth) * k_ + pred] += n;
  }

  [[nodiscard]] std::uint64_t row_sum(int truth) const {  // tau_i
    std::uint64_t s = 0;
    for (int j = 0; j < k_; ++j) s += at(truth, j);
    return s;
  }
  [[nodiscard]] std::uint64_t col_sum(int pred) const {
    std::uint64_t s = 0;
    for (int i = 0; i < k_; ++i) s += at(i, pred);
    return s;
  }
  [[nodiscard]] std::uint64_t total() const {
    std::uint64_t s = 0;
    for (std::uint64_t c : counts_) s += c;
    return s;
  }

  // Associative merge; pages may be accumulated in any grouping.
  void merge(const ConfusionMatrix& other) {
    if (other.k_ != k_)
      throw DimensionMismatch("ConfusionMatrix::merge: class count differs");
    for (std::size_t i = 0; i < counts_.size(); ++i)
      counts_[i] += other.counts_[i];
  }

  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;

 private:
  int k_ = 0;
  std::vector<std::uint64_t> counts_;
};

inline void accumulate_confusion(const LabelMap& gt, const LabelMap& hyp,
                                 ConfusionMatrix& acc) {
  if (gt.width() != hyp.width() || gt.height() != hyp.height())
    throw DimensionMismatch("accumulate_confusion: dimensions differ");
  const auto& g = gt.data();
  const auto& h = hyp.data();
  for (std::size_t i = 0; i < g.size(); ++i) acc.add(g[i], h[i]);
}

// Per-class Jaccard: eta_ii / (tau_i + sum_j eta_ji - eta_ii). Classes with a
// zero denominator yield 0.
inline std::vector<double> per_class_iou(const ConfusionMatrix& acc) {
  std::vector<double> ious(acc.num_classes(), 0.0);
  for (int i = 0; i < acc.num_classes(); ++i) {
    const std::uint64_t diag = acc.at(i, i);
    const std::uint64_t denom = acc.row_sum(i) + acc.col_sum(i) - diag;
    if (denom > 0)
      ious[i] = static_cast<double>(diag) / static_cast<double>(denom);
  }
  return ious;
}

// Absent classes (zero denominator) contribute 0 and stay in K unless
// skip_absent is set.
inline double mean_iou(const ConfusionMatrix& acc, bool skip_absent = false) {
  if (acc.num_classes() < 1) return 0.0;
  double sum = 0.0;
  int k = 0;
  for (int i = 0; i < acc.num_classes(); ++i) {
    const std::uint64_t diag = acc.at(i, i);
    const std::uint64_t denom = acc.row_sum(i) + acc.col_sum(i) - diag;
    if (denom == 0 && skip_absent) continue;
    if (denom > 0) sum += static_cast<double>(diag) / denom;
    ++k;
  }
  return k > 0 ? sum / k : 0.0;
}

inline double fw_iou(const ConfusionMatrix& acc) {
  const std::uint64_t total = acc.total();
  if (total == 0) throw EmptyAccumulator("fw_iou: empty confusion matrix");
  double sum = 0.0;
  for (int i = 0; i < acc.num_classes(); ++i) {
    const std::uint64_t tau = acc.row_sum(i);
    const std::uint64_t diag = acc.at(i, i);
    const std::uint64_t denom = tau + acc.col_sum(i) - diag;
    if (denom > 0)
      sum += static_cast<double>(tau) * diag / static_cast<double>(denom);
  }
  return sum / static_cast<double>(total);
}

struct BaselineScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t matched_hyp_points = 0;
  std::uint64_t total_hyp_points = 0;
  std::uint64_t matched_gt_points = 0;
  std::uint64_t total_gt_points = 0;
};

namespace detail {

inline double point_to_polyline(const Point& p, const Baseline& b) {
  double best = 1e300;
  for (std::size_t i = 1; i < b.points.size(); ++i)
    best = std::min(best,
                    point_segment_distance(p, b.points[i - 1], b.points[i]));
  return best;
}

inline std::pair<std::uint64_t, std::uint64_t> coverage(
    const std::vector<Baseline>& sources, const std::vector<Baseline>& targets,
    double tolerance, double step) {
  std::uint64_t matched = 0, total = 0;
  for (const Baseline& src : sources) {
    const Baseline norm = normalize_baseline(src, step);
    for (const Point& p : norm.points) {
      ++total;
      for (const Baseline& t : targets) {
        if (point_to_polyline(p, t) <= tolerance) {
          ++matched;
          break;
        }
      }
    }
  }
  return {matched, total};
}

}  // namespace detail

inline double auto_tolerance(const std::vector<Baseline>& gt) {
  if (gt.empty()) return 10.0;
  return std::clamp(0.25 * estimate_interline(gt), 10.0, 30.0);
}

// Point-coverage precision/recall over normalized baselines. tolerance < 0
// selects the adaptive interline-based default.
inline BaselineScore baseline_prf(const std::vector<Baseline>& gt,
                                  const std::vector<Baseline>& hyp,
                                  double tolerance = -1.0, double step = 5.0) {
  BaselineScore score;
  if (gt.empty() && hyp.empty()) {
    score.precision = score.recall = score.f1 = 1.0;
    return score;
  }
  const double tol = tolerance >= 0.0 ? tolerance : auto_tolerance(gt);

  auto [mh, th] = detail::coverage(hyp, gt, tol, step);
  auto [mg, tg] = detail::coverage(gt, hyp, tol, step);
  score.matched_hyp_points = mh;
  score.total_hyp_points = th;
  score.matched_gt_points = mg;
  score.total_gt_points = tg;
  score.precision = th > 0 ? static_cast<double>(mh) / th : 0.0;
  score.recall = tg > 0 ? static_cast<double>(mg) / tg : 0.0;
  const double pr = score.precision + score.recall;
  score.f1 = pr > 0.0 ? 2.0 * score.precision * score.recall / pr : 0.0;
  return score;
}

// Recomputes the ratios from accumulated match counts; used when merging
// per-page scores into a corpus-level score.
inline BaselineScore finalize_score(std::uint64_t matched_hyp,
                                    std::uint64_t total_hyp,
                                    std::uint64_t matched_gt,
                                    std::uint64_t total_gt) {
  BaselineScore s;
  s.matched_hyp_points = matched_hyp;
  s.total_hyp_points = total_hyp;
  s.matched_gt_points = matched_gt;
  s.total_gt_points = total_gt;
  s.precision = total_hyp > 0
                    ? static_cast<double>(matched_hyp) / total_hyp
                    : (total_gt == 0 ? 1.0 : 0.0);
  s.recall = total_gt > 0 ? static_cast<double>(matched_gt) / total_gt
                          : (total_hyp == 0 ? 1.0 : 0.0);
  const double pr = s.precision + s.recall;
  s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
  return s;
}

inline BaselineScore merge_scores(const BaselineScore& a,
                                  const BaselineScore& b) {
  return finalize_score(a.matched_hyp_points + b.matched_hyp_points,
                        a.total_hyp_points + b.total_hyp_points,
                        a.matched_gt_points + b.matched_gt_points,
                        a.total_gt_points + b.total_gt_points);
}

// Stable class index assignment: background 0, labels in given order.
struct ClassOrder {
  std::vector<std::string> labels;  // index 1..K-1

  [[nodiscard]] int num_classes() const {
    return static_cast<int>(labels.size()) + 1;
  }
  [[nodiscard]] std::optional<int> index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<int>(i) + 1;
    return std::nullopt;
  }
};

inline std::vector<Baseline> collect_baselines(const Page& page) {
  std::vector<Baseline> out;
  for (const Region& r : page.regions)
    for (const TextLine& l : r.lines)
      if (l.baseline.points.size() >= 2) out.push_back(l.baseline);
  for (const TextLine& l : page.orphan_lines)
    if (l.baseline.points.size() >= 2) out.push_back(l.baseline);
  return out;
}

inline LabelMap paint_page_regions(const Page& page,
                                   const ClassOrder& order) {
  std::vector<PaintItem> items;
  for (const Region& r : page.regions) {
    const auto idx = order.index_of(r.class_label);
    if (!idx) continue;
    PaintItem item;
    item.mask = rasterize(r.polygon, page.width, page.height);
    item.label = *idx;
    item.score = r.score;
    item.id = r.id;
    items.push_back(std::move(item));
  }
  return paint_label_map(std::move(items), page.width, page.height);
}

struct PagePairResult {
  ConfusionMatrix confusion;
  BaselineScore baseline;
  double tolerance_used = 0.0;
};

// Region pixels -> confusion counts; all page baselines scored line-level,
// region assignment ignored.
inline PagePairResult evaluate_page_pair(const Page& gt, const Page& hyp,
                                         const ClassOrder& order,
                                         double tolerance = -1.0,
                                         double step = 5.0) {
  if (gt.width != hyp.width || gt.height != hyp.height)
    throw DimensionMismatch("evaluate_page_pair: page dimensions differ");

  PagePairResult result;
  result.confusion = ConfusionMatrix(order.num_classes());
  const LabelMap gt_map = paint_page_regions(gt, order);
  const LabelMap hyp_map = paint_page_regions(hyp, order);
  accumulate_confusion(gt_map, hyp_map, result.confusion);

  const std::vector<Baseline> gt_bl = collect_baselines(gt);
  const std::vector<Baseline> hyp_bl = collect_baselines(hyp);
  result.tolerance_used =
      tolerance >= 0.0 ? tolerance : auto_tolerance(gt_bl);
  result.baseline = baseline_prf(gt_bl, hyp_bl, result.tolerance_used, step);
  return result;
}

}  // namespace dla
