#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>
#include <sstream>

#include "dla/detections_io.hpp"
#include "dla/metrics.hpp"
#include "dla/pipeline.hpp"

using namespace dla;

namespace {

Detection make_det(const std::string& id, const std::string& label,
                   double score, const Polygon& poly) {
  Detection d;
  d.page_id = "p1";
  d.id = id;
  d.class_label = label;
  d.score = score;
  d.polygon = poly;
  d.box = bounding_box(poly);
  return d;
}

Polygon rect(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

}  // namespace

TEST_CASE("filter_by_score: strictly-below-threshold removed") {
  std::vector<Detection> dets = {
      make_det("a", "paragraph", 0.49, rect(0, 0, 10, 10)),
      make_det("b", "paragraph", 0.50, rect(20, 0, 30, 10)),
      make_det("c", "paragraph", 0.90, rect(40, 0, 50, 10)),
      make_det("d", "paragraph", 0.20, rect(60, 0, 70, 10))};
  const auto kept = filter_by_score(dets, 0.5);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "b");  // 0.50 survives the strict rule
  CHECK(kept[1].id == "c");
}

TEST_CASE("post_process: line inserted into its containing region") {
  PipelineConfig config;
  std::vector<Detection> dets = {
      make_det("r1", "paragraph", 0.9, rect(10, 10, 300, 200)),
      make_det("l1", "text-line", 0.8, rect(20, 80, 280, 104))};
  const Page page = post_process(dets, config, 400, 300);
  REQUIRE(page.regions.size() == 1);
  REQUIRE(page.regions[0].lines.size() == 1);
  CHECK(page.regions[0].lines[0].baseline.points.size() >= 2);
  CHECK(page.orphan_lines.empty());
}

TEST_CASE("post_process: line goes to the region with maximum IoU") {
  PipelineConfig config;
  std::vector<Detection> dets = {
      make_det("A", "paragraph", 0.9, rect(0, 0, 100, 100)),
      make_det("B", "paragraph", 0.9, rect(200, 0, 300, 100)),
      // 60% of the line overlaps A, 20% overlaps B
      make_det("l1", "text-line", 0.8, rect(40, 40, 240, 64))};
  // boxes are disjoint so class-wise NMS keeps both regions
  const Page page = post_process(dets, config, 400, 200);
  REQUIRE(page.regions.size() == 2);
  const Region& a = page.regions[0].id == "A" ? page.regions[0]
                                              : page.regions[1];
  const Region& b = page.regions[0].id == "B" ? page.regions[0]
                                              : page.regions[1];
  CHECK(a.lines.size() == 1);
  CHECK(b.lines.empty());
}

TEST_CASE("post_process: all detections below threshold yield empty page") {
  PipelineConfig config;
  std::vector<Detection> dets = {
      make_det("r1", "paragraph", 0.4, rect(10, 10, 50, 50)),
      make_det("l1", "text-line", 0.3, rect(10, 10, 50, 30))};
  const Page page = post_process(dets, config, 100, 100);
  CHECK(page.regions.empty());
  CHECK(page.orphan_lines.empty());
}

TEST_CASE("post_process: no detections yield a valid empty page") {
  const Page page = post_process({}, PipelineConfig{}, 100, 100);
  CHECK(page.regions.empty());
  CHECK(page.width == 100);
}

TEST_CASE("post_process: zero-IoU lines are preserved as orphans") {
  PipelineConfig config;
  std::vector<Detection> dets = {
      make_det("r1", "paragraph", 0.9, rect(0, 0, 100, 100)),
      make_det("l1", "text-line", 0.8, rect(200, 200, 350, 224))};
  const Page page = post_process(dets, config, 400, 300);
  REQUIRE(page.regions.size() == 1);
  CHECK(page.regions[0].lines.empty());
  REQUIRE(page.orphan_lines.size() == 1);
  CHECK(page.orphan_lines[0].id == "l1");
}

TEST_CASE("post_process: touching same-class regions stay separate") {
  PipelineConfig config;
  std::vector<Detection> dets = {
      make_det("top", "paragraph", 0.9, rect(10, 10, 390, 200)),
      make_det("bottom", "paragraph", 0.85, rect(10, 200, 390, 390))};
  const Page page = post_process(dets, config, 400, 400);
  CHECK(page.regions.size() == 2);
}

TEST_CASE("post_process: NMS suppression inside a class") {
  PipelineConfig config;
  std::vector<Detection> dets = {
      make_det("a", "paragraph", 0.9, rect(0, 0, 100, 100)),
      make_det("b", "paragraph", 0.8, rect(5, 5, 105, 105)),
      make_det("c", "marginalia", 0.7, rect(2, 2, 102, 102))};
  const Page page = post_process(dets, config, 200, 200);
  REQUIRE(page.regions.size() == 2);  // b suppressed, c survives class-wise
}

TEST_CASE("post_process: stage order, NMS runs before RoI selection") {
  PipelineConfig config;
  config.n_train_max = 50;  // m = 100
  std::vector<Detection> dets;
  // 150 mutually overlapping boxes that NMS collapses to one
  for (int i = 0; i < 150; ++i)
    dets.push_back(make_det("dup" + std::to_string(i), "paragraph",
                            0.9 - i * 1e-4, rect(0, 0, 100, 100)));
  // one disjoint region scored below every duplicate
  dets.push_back(make_det("solo", "paragraph", 0.6, rect(200, 200, 300, 300)));
  const Page page = post_process(dets, config, 400, 400);
  // selecting the best m first would have discarded "solo"
  REQUIRE(page.regions.size() == 2);
}

TEST_CASE("post_process: idempotent on its own output") {
  const auto [gt, dets] = generate_synthetic_page(3, SynthSpec{});
  PipelineConfig config;
  const Page first = post_process(dets, config, gt.width, gt.height);
  const std::vector<Detection> redets =
      page_to_detections(first, "p", config.textline_label, 1.0);
  const Page second = post_process(redets, config, gt.width, gt.height);
  REQUIRE(second.regions.size() == first.regions.size());
  for (std::size_t i = 0; i < first.regions.size(); ++i) {
    CHECK(second.regions[i].id == first.regions[i].id);
    CHECK(second.regions[i].polygon == first.regions[i].polygon);
    CHECK(second.regions[i].lines.size() == first.regions[i].lines.size());
  }
  CHECK(second.orphan_lines.size() == first.orphan_lines.size());
}

TEST_CASE("generate_synthetic_page: deterministic for a fixed seed") {
  SynthSpec spec;
  spec.jitter = 1.5;
  spec.false_positives = 2;
  const auto [page1, dets1] = generate_synthetic_page(7, spec);
  const auto [page2, dets2] = generate_synthetic_page(7, spec);
  CHECK(page1 == page2);
  REQUIRE(dets1.size() == dets2.size());
  for (std::size_t i = 0; i < dets1.size(); ++i) {
    CHECK(dets1[i].box == dets2[i].box);
    CHECK(dets1[i].score == dets2[i].score);
  }
  const auto [page3, dets3] = generate_synthetic_page(8, spec);
  CHECK(page1 != page3);
}

TEST_CASE("generate_synthetic_page: identity perturbation evaluates perfect") {
  const auto [gt, dets] = generate_synthetic_page(11, SynthSpec{});
  PipelineConfig config;
  const Page hyp = post_process(dets, config, gt.width, gt.height);

  std::set<std::string> labels;
  for (const Region& r : gt.regions) labels.insert(r.class_label);
  ClassOrder order;
  order.labels.assign(labels.begin(), labels.end());
  const PagePairResult res = evaluate_page_pair(gt, hyp, order);
  CHECK(mean_iou(res.confusion) == 1.0);
  CHECK(fw_iou(res.confusion) == 1.0);
  CHECK(res.baseline.f1 == 1.0);
}

TEST_CASE("generate_synthetic_page: disjoint false positive drops class IoU "
          "to the pixel-oracle value") {
  SynthSpec spec;
  spec.classes = {"paragraph"};
  spec.n_regions = 4;
  spec.false_positives = 1;
  const auto [gt, dets] = generate_synthetic_page(21, spec);
  PipelineConfig config;
  const Page hyp = post_process(dets, config, gt.width, gt.height);
  REQUIRE(hyp.regions.size() == gt.regions.size() + 1);

  ClassOrder order{{"paragraph"}};
  const PagePairResult res = evaluate_page_pair(gt, hyp, order);

  const LabelMap gm = paint_page_regions(gt, order);
  const LabelMap hm = paint_page_regions(hyp, order);
  std::uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < gm.data().size(); ++i) {
    const bool g = gm.data()[i] == 1, h = hm.data()[i] == 1;
    inter += g && h;
    uni += g || h;
  }
  CHECK_THAT(per_class_iou(res.confusion)[1],
             Catch::Matchers::WithinAbs(
                 static_cast<double>(inter) / static_cast<double>(uni),
                 1e-12));
}

TEST_CASE("detections interchange: record round trip") {
  Detection d = make_det("ignored", "paragraph", 0.875, rect(1.5, 2, 30, 42));
  BitMask mask(8, 4);
  mask.set(2, 1);
  mask.set(3, 1);
  d.mask = mask;
  const std::string line = detections_io::format_record(d);
  const Detection back = detections_io::parse_record(line);
  CHECK(back.page_id == d.page_id);
  CHECK(back.class_label == d.class_label);
  CHECK(back.score == d.score);
  CHECK(back.box == d.box);
  REQUIRE(back.polygon.has_value());
  CHECK(back.polygon->vertices == d.polygon->vertices);
  REQUIRE(back.mask.has_value());
  CHECK(*back.mask == mask);
}

TEST_CASE("detections interchange: optional fields and bad records") {
  Detection d;
  d.page_id = "p";
  d.class_label = "staff";
  d.score = 0.5;
  d.box = BBox{0, 0, 4, 4};
  const Detection back =
      detections_io::parse_record(detections_io::format_record(d));
  CHECK_FALSE(back.polygon.has_value());
  CHECK_FALSE(back.mask.has_value());

  CHECK_THROWS_AS(detections_io::parse_record("p\tc"), BadDetectionRecord);
  CHECK_THROWS_AS(detections_io::parse_record("p\tc\t0.5\t0 0 4 4\t-\t2,2:9"),
                  BadDetectionRecord);
}

TEST_CASE("detections interchange: RLE round trips random masks") {
  std::mt19937 rng(13);
  std::bernoulli_distribution bit(0.3);
  for (int trial = 0; trial < 20; ++trial) {
    BitMask mask(17, 9);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 17; ++x)
        if (bit(rng)) mask.set(x, y);
    CHECK(detections_io::decode_rle(detections_io::encode_rle(mask)) == mask);
  }
}
