#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dla/metrics.hpp"

namespace dla {

struct EvalReport {
  ConfusionMatrix confusion;
  BaselineScore baseline;
  ClassOrder class_order;
  double tolerance_used = 0.0;
  double step = 5.0;
  std::size_t pages = 0;
  bool skip_absent_classes = false;
};

// Percent with 1 decimal, the precision used throughout reports.
inline double percent1(double fraction) {
  return std::round(fraction * 1000.0) / 10.0;
}

inline std::string format_percent(double fraction) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  out << percent1(fraction);
  return out.str();
}

inline std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "pages=" << r.pages << '\n';
  out << "tolerance_px=" << r.tolerance_used << '\n';
  out << "normalization_step_px=" << r.step << '\n';
  out << "baseline_matching=point-coverage-approximation" << '\n';
  out << "baseline_precision=" << format_percent(r.baseline.precision) << '\n';
  out << "baseline_recall=" << format_percent(r.baseline.recall) << '\n';
  out << "baseline_f1=" << format_percent(r.baseline.f1) << '\n';
  out << "miou=" << format_percent(mean_iou(r.confusion,
                                            r.skip_absent_classes))
      << '\n';
  out << "fwiou="
      << format_percent(r.confusion.total() > 0 ? fw_iou(r.confusion) : 0.0)
      << '\n';
  const std::vector<double> ious = per_class_iou(r.confusion);
  out << "class_iou.background=" << format_percent(ious[0]) << '\n';
  for (std::size_t i = 0; i < r.class_order.labels.size(); ++i)
    out << "class_iou." << r.class_order.labels[i] << '='
        << format_percent(ious[i + 1]) << '\n';
  return out.str();
}

inline nlohmann::json report_json(const EvalReport& r) {
  nlohmann::json j;
  j["pages"] = r.pages;
  j["tolerance_px"] = r.tolerance_used;
  j["normalization_step_px"] = r.step;
  j["baseline_matching"] = "point-coverage-approximation";
  j["baseline"] = {{"precision", percent1(r.baseline.precision)},
                   {"recall", percent1(r.baseline.recall)},
                   {"f1", percent1(r.baseline.f1)},
                   {"matched_hyp_points", r.baseline.matched_hyp_points},
                   {"total_hyp_points", r.baseline.total_hyp_points},
                   {"matched_gt_points", r.baseline.matched_gt_points},
                   {"total_gt_points", r.baseline.total_gt_points}};
  j["miou"] = percent1(mean_iou(r.confusion, r.skip_absent_classes));
  j["fwiou"] =
      percent1(r.confusion.total() > 0 ? fw_iou(r.confusion) : 0.0);
  const std::vector<double> ious = per_class_iou(r.confusion);
  nlohmann::json per_class = nlohmann::json::object();
  per_class["background"] = percent1(ious[0]);
  for (std::size_t i = 0; i < r.class_order.labels.size(); ++i)
    per_class[r.class_order.labels[i]] = percent1(ious[i + 1]);
  j["class_iou"] = per_class;
  return j;
}

}  // namespace dla
