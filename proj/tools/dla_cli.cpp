// Command-line front end: evaluation, post-processing, corpus statistics,
// synthetic fixtures and baseline/polygon conversions.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dla/dla.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::vector<fs::path> list_xml(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".xml" || ext == ".XML") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void apply_config_file(const std::string& path,
                       std::map<std::string, std::string>& kv) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
}

struct CommonOptions {
  dla::PipelineConfig pipeline;
  double tolerance = -1.0;  // <0 selects auto
  double step = 5.0;
  bool skip_absent_classes = false;
  int jobs = 1;
};

void print_resolved_config(const CommonOptions& opt) {
  std::ostream& out = std::cerr;
  out << "config.nms_threshold=" << opt.pipeline.nms_threshold << '\n'
      << "config.roi_cap=" << opt.pipeline.roi_cap << '\n'
      << "config.n_train_max=" << opt.pipeline.n_train_max << '\n'
      << "config.score_threshold=" << opt.pipeline.score_threshold << '\n'
      << "config.class_wise_nms=" << opt.pipeline.class_wise_nms << '\n'
      << "config.box_iou_insertion=" << opt.pipeline.box_iou_insertion << '\n'
      << "config.textline_label=" << opt.pipeline.textline_label << '\n'
      << "config.offset_above=" << opt.pipeline.line_geometry.offset_above
      << '\n'
      << "config.offset_below=" << opt.pipeline.line_geometry.offset_below
      << '\n'
      << "config.resample_step=" << opt.pipeline.line_geometry.resample_step
      << '\n'
      << "config.simplify_epsilon="
      << opt.pipeline.line_geometry.simplify_epsilon << '\n'
      << "config.tolerance=" << (opt.tolerance < 0 ? std::string("auto")
                                                   : std::to_string(
                                                         opt.tolerance))
      << '\n'
      << "config.step=" << opt.step << '\n'
      << "config.jobs=" << opt.jobs << '\n';
}

void add_common_flags(CLI::App* app, CommonOptions& opt,
                      std::string& config_path) {
  app->add_option("--config", config_path, "flat key = value config file");
  app->add_option("--nms-threshold", opt.pipeline.nms_threshold);
  app->add_option("--roi-cap", opt.pipeline.roi_cap);
  app->add_option("--n-train-max", opt.pipeline.n_train_max);
  app->add_option("--score-threshold", opt.pipeline.score_threshold);
  app->add_flag("--cross-class-nms{false}", opt.pipeline.class_wise_nms,
                "suppress across classes instead of per class");
  app->add_flag("--box-iou-insertion", opt.pipeline.box_iou_insertion,
                "use box IoU instead of mask IoU for line insertion");
  app->add_option("--textline-label", opt.pipeline.textline_label);
  app->add_option("--offset-above", opt.pipeline.line_geometry.offset_above);
  app->add_option("--offset-below", opt.pipeline.line_geometry.offset_below);
  app->add_option("--resample-step",
                  opt.pipeline.line_geometry.resample_step);
  app->add_option("--simplify-epsilon",
                  opt.pipeline.line_geometry.simplify_epsilon);
  app->add_option("--tolerance", opt.tolerance,
                  "baseline match tolerance in px; negative = auto");
  app->add_option("--step", opt.step, "baseline normalization step in px");
  app->add_flag("--skip-absent-classes", opt.skip_absent_classes);
  app->add_option("--jobs", opt.jobs, "worker threads")
      ->check(CLI::PositiveNumber);
}

void merge_config_file(const std::string& config_path, CommonOptions& opt) {
  if (config_path.empty()) return;
  std::map<std::string, std::string> kv;
  apply_config_file(config_path, kv);
  auto getd = [&](const char* key, double& dst) {
    if (auto it = kv.find(key); it != kv.end()) dst = std::stod(it->second);
  };
  getd("nms_threshold", opt.pipeline.nms_threshold);
  getd("score_threshold", opt.pipeline.score_threshold);
  getd("offset_above", opt.pipeline.line_geometry.offset_above);
  getd("offset_below", opt.pipeline.line_geometry.offset_below);
  getd("resample_step", opt.pipeline.line_geometry.resample_step);
  getd("simplify_epsilon", opt.pipeline.line_geometry.simplify_epsilon);
  getd("tolerance", opt.tolerance);
  getd("step", opt.step);
  if (auto it = kv.find("roi_cap"); it != kv.end())
    opt.pipeline.roi_cap = std::stoul(it->second);
  if (auto it = kv.find("n_train_max"); it != kv.end())
    opt.pipeline.n_train_max = std::stoul(it->second);
  if (auto it = kv.find("textline_label"); it != kv.end())
    opt.pipeline.textline_label = it->second;
}

int run_stats(const std::string& dir) {
  std::vector<dla::Page> pages;
  std::size_t max_objects = 0;
  for (const fs::path& path : list_xml(dir)) {
    dla::PageParseResult parsed = dla::parse_page_xml_file(path.string());
    for (const std::string& w : parsed.warnings)
      std::cerr << path.filename().string() << ": " << w << '\n';
    const std::size_t objects =
        parsed.page.regions.size() + parsed.page.line_count();
    max_objects = std::max(max_objects, objects);
    pages.push_back(std::move(parsed.page));
  }
  const dla::CorpusStats stats = dla::corpus_stats(pages);

  std::vector<std::pair<std::string, dla::ClassStats>> rows(stats.begin(),
                                                            stats.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second.region_count != b.second.region_count)
      return a.second.region_count > b.second.region_count;
    return a.first < b.first;
  });
  for (const auto& [label, cs] : rows)
    std::cout << label << ' ' << cs.region_count << ' ' << cs.line_count
              << '\n';
  std::cout << "pages " << pages.size() << '\n';
  std::cout << "max_objects_per_page " << max_objects << '\n';
  return kExitOk;
}

int run_eval(const std::string& gt_dir, const std::string& hyp_dir,
             const CommonOptions& opt, const std::string& json_path) {
  const std::vector<fs::path> gt_files = list_xml(gt_dir);
  if (gt_files.empty()) {
    std::cerr << "no PAGE files in " << gt_dir << '\n';
    return kExitData;
  }

  struct PageTask {
    dla::Page gt;
    dla::Page hyp;
  };
  std::vector<PageTask> tasks;
  std::set<std::string> labels;
  for (const fs::path& gt_path : gt_files) {
    const fs::path hyp_path = fs::path(hyp_dir) / gt_path.filename();
    if (!fs::exists(hyp_path)) {
      std::cerr << "missing hypothesis for " << gt_path.filename().string()
                << '\n';
      return kExitData;
    }
    PageTask task;
    task.gt = dla::parse_page_xml_file(gt_path.string()).page;
    task.hyp = dla::parse_page_xml_file(hyp_path.string()).page;
    for (const dla::Region& r : task.gt.regions) labels.insert(r.class_label);
    tasks.push_back(std::move(task));
  }

  dla::ClassOrder order;
  order.labels.assign(labels.begin(), labels.end());

  std::vector<dla::PagePairResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) break;
      results[i] = dla::evaluate_page_pair(tasks[i].gt, tasks[i].hyp, order,
                                           opt.tolerance, opt.step);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < opt.jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  dla::EvalReport report;
  report.confusion = dla::ConfusionMatrix(order.num_classes());
  report.class_order = order;
  report.pages = tasks.size();
  report.step = opt.step;
  report.skip_absent_classes = opt.skip_absent_classes;
  std::uint64_t mh = 0, th = 0, mg = 0, tg = 0;
  double tol_sum = 0.0;
  // merge in file order so reports are independent of thread count
  for (const dla::PagePairResult& r : results) {
    report.confusion.merge(r.confusion);
    mh += r.baseline.matched_hyp_points;
    th += r.baseline.total_hyp_points;
    mg += r.baseline.matched_gt_points;
    tg += r.baseline.total_gt_points;
    tol_sum += r.tolerance_used;
  }
  report.baseline = dla::finalize_score(mh, th, mg, tg);
  report.tolerance_used = tol_sum / static_cast<double>(results.size());

  std::cout << dla::report_text(report);
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    out << dla::report_json(report).dump(2) << '\n';
  }
  return kExitOk;
}

int run_post_process(const std::string& detections_path,
                     const std::string& out_dir, int width, int height,
                     const CommonOptions& opt) {
  const std::vector<dla::Detection> all =
      dla::detections_io::read_file(detections_path);
  std::map<std::string, std::vector<dla::Detection>> by_page;
  for (const dla::Detection& d : all) by_page[d.page_id].push_back(d);

  fs::create_directories(out_dir);
  for (const auto& [page_id, dets] : by_page) {
    std::vector<std::string> warnings;
    dla::Page page =
        dla::post_process(dets, opt.pipeline, width, height, &warnings);
    page.image_filename = page_id;
    for (const std::string& w : warnings)
      std::cerr << page_id << ": " << w << '\n';
    const fs::path out_path =
        fs::path(out_dir) / (fs::path(page_id).stem().string() + ".xml");
    std::ofstream out(out_path);
    out << dla::write_page_xml(page);
  }
  std::cout << "pages_written=" << by_page.size() << '\n';
  return kExitOk;
}

int run_synth(unsigned seed, int n_pages, const dla::SynthSpec& spec,
              const std::string& out_dir,
              const std::string& detections_path) {
  fs::create_directories(out_dir);
  std::vector<dla::Detection> all_dets;
  for (int i = 0; i < n_pages; ++i) {
    auto [page, dets] = dla::generate_synthetic_page(seed + i, spec);
    char name[32];
    std::snprintf(name, sizeof(name), "page_%04d", i);
    page.image_filename = std::string(name) + ".png";
    for (dla::Detection& d : dets) d.page_id = page.image_filename;
    std::ofstream out(fs::path(out_dir) / (std::string(name) + ".xml"));
    out << dla::write_page_xml(page);
    all_dets.insert(all_dets.end(), dets.begin(), dets.end());
  }
  if (!detections_path.empty())
    dla::detections_io::write_file(all_dets, detections_path);
  std::cout << "pages_written=" << n_pages << '\n';
  return kExitOk;
}

int run_lines(const std::string& in_path, const std::string& out_path,
              const std::string& mode, const CommonOptions& opt) {
  dla::PageParseResult parsed = dla::parse_page_xml_file(in_path);
  dla::Page& page = parsed.page;
  auto convert = [&](dla::TextLine& line) {
    if (mode == "to-polygon") {
      if (line.baseline.points.size() >= 2)
        line.polygon =
            dla::baseline_to_polygon(line.baseline,
                                     opt.pipeline.line_geometry);
    } else {
      if (line.polygon.valid())
        line.baseline = dla::polygon_to_baseline(
            line.polygon, opt.pipeline.line_geometry, page.width,
            page.height);
    }
  };
  for (dla::Region& r : page.regions)
    for (dla::TextLine& line : r.lines) convert(line);
  for (dla::TextLine& line : page.orphan_lines) convert(line);
  std::ofstream out(out_path);
  out << dla::write_page_xml(page);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"document layout analysis toolkit"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string config_path;

  auto* stats_cmd = app.add_subcommand("stats", "corpus statistics table");
  std::string stats_dir;
  stats_cmd->add_option("dir", stats_dir, "PAGE-XML directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate hyp against gt");
  std::string gt_dir, hyp_dir, json_path;
  eval_cmd->add_option("--gt", gt_dir, "ground-truth PAGE dir")->required();
  eval_cmd->add_option("--hyp", hyp_dir, "hypothesis PAGE dir")->required();
  eval_cmd->add_option("--json", json_path, "also write JSON report here");
  add_common_flags(eval_cmd, opt, config_path);

  auto* pp_cmd = app.add_subcommand("post-process",
                                    "detections file -> PAGE files");
  std::string det_path, pp_out;
  int pp_width = 0, pp_height = 0;
  pp_cmd->add_option("--detections", det_path)->required();
  pp_cmd->add_option("--out", pp_out)->required();
  pp_cmd->add_option("--width", pp_width)->required();
  pp_cmd->add_option("--height", pp_height)->required();
  add_common_flags(pp_cmd, opt, config_path);

  auto* synth_cmd = app.add_subcommand("synth", "synthetic fixture pages");
  unsigned seed = 1;
  int n_pages = 1;
  dla::SynthSpec spec;
  std::string synth_out, synth_dets;
  synth_cmd->add_option("--seed", seed);
  synth_cmd->add_option("--pages", n_pages);
  synth_cmd->add_option("--regions", spec.n_regions);
  synth_cmd->add_option("--lines", spec.lines_per_region);
  synth_cmd->add_option("--jitter", spec.jitter);
  synth_cmd->add_option("--false-positives", spec.false_positives);
  synth_cmd->add_option("--false-negatives", spec.false_negatives);
  synth_cmd->add_option("--out", synth_out)->required();
  synth_cmd->add_option("--detections", synth_dets,
                        "also write a detections file");

  auto* lines_cmd =
      app.add_subcommand("lines", "baseline/polygon conversions");
  std::string lines_in, lines_out, lines_mode = "to-polygon";
  lines_cmd->add_option("--in", lines_in)->required();
  lines_cmd->add_option("--out", lines_out)->required();
  lines_cmd->add_option("--mode", lines_mode)
      ->check(CLI::IsMember({"to-polygon", "to-baseline"}));
  add_common_flags(lines_cmd, opt, config_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    merge_config_file(config_path, opt);
    print_resolved_config(opt);
    if (stats_cmd->parsed()) return run_stats(stats_dir);
    if (eval_cmd->parsed()) return run_eval(gt_dir, hyp_dir, opt, json_path);
    if (pp_cmd->parsed())
      return run_post_process(det_path, pp_out, pp_width, pp_height, opt);
    if (synth_cmd->parsed())
      return run_synth(seed, n_pages, spec, synth_out, synth_dets);
    if (lines_cmd->parsed())
      return run_lines(lines_in, lines_out, lines_mode, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
