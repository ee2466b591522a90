#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "dla/proposals.hpp"

using namespace dla;

namespace {

// Independent O(n^2) greedy reference: descending score, stable index ties,
// keep iff IoU with every kept box <= threshold.
std::vector<ScoredBox> oracle_nms(const std::vector<ScoredBox>& boxes,
                                  double threshold, std::size_t cap,
                                  bool class_wise) {
  std::vector<std::size_t> idx(boxes.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (boxes[a].score != boxes[b].score)
      return boxes[a].score > boxes[b].score;
    return a < b;
  });
  std::vector<ScoredBox> kept;
  for (std::size_t i : idx) {
    if (kept.size() >= cap) break;
    bool ok = true;
    for (const ScoredBox& k : kept) {
      if (class_wise && k.class_index != boxes[i].class_index) continue;
      const double ix = std::max(
          0.0, std::min(k.box.x1, boxes[i].box.x1) -
                   std::max(k.box.x0, boxes[i].box.x0));
      const double iy = std::max(
          0.0, std::min(k.box.y1, boxes[i].box.y1) -
                   std::max(k.box.y0, boxes[i].box.y0));
      const double inter = ix * iy;
      const double uni = (k.box.x1 - k.box.x0) * (k.box.y1 - k.box.y0) +
                         (boxes[i].box.x1 - boxes[i].box.x0) *
                             (boxes[i].box.y1 - boxes[i].box.y0) -
                         inter;
      if (uni > 0.0 && inter / uni > threshold) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(boxes[i]);
  }
  return kept;
}

bool same_boxes(const std::vector<ScoredBox>& a,
                const std::vector<ScoredBox>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].box != b[i].box || a[i].score != b[i].score ||
        a[i].class_index != b[i].class_index)
      return false;
  return true;
}

std::vector<ScoredBox> random_boxes(std::mt19937& rng, int n, int classes) {
  std::uniform_real_distribution<double> pos(0.0, 80.0);
  std::uniform_real_distribution<double> size(1.0, 40.0);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, classes - 1);
  std::vector<ScoredBox> boxes(n);
  for (ScoredBox& b : boxes) {
    const double x0 = pos(rng), y0 = pos(rng);
    b.box = BBox{x0, y0, x0 + size(rng), y0 + size(rng)};
    b.score = score(rng);
    b.class_index = cls(rng);
  }
  return boxes;
}

}  // namespace

TEST_CASE("anchor_shapes: paper configuration yields 15 shapes") {
  CHECK(default_anchor_shapes().size() == 15);
}

TEST_CASE("anchor_shapes: square and 2:1 shapes") {
  const auto shapes = anchor_shapes({64}, {{1, 1}});
  REQUIRE(shapes.size() == 1);
  CHECK_THAT(shapes[0].width, Catch::Matchers::WithinAbs(64.0, 1e-9));
  CHECK_THAT(shapes[0].height, Catch::Matchers::WithinAbs(64.0, 1e-9));

  const auto tall = anchor_shapes({32}, {{2, 1}});
  REQUIRE(tall.size() == 1);
  CHECK_THAT(tall[0].width, Catch::Matchers::WithinAbs(32.0 / std::sqrt(2.0),
                                                       1e-9));
  CHECK_THAT(tall[0].height,
             Catch::Matchers::WithinAbs(32.0 * std::sqrt(2.0), 1e-9));
}

TEST_CASE("anchor_shapes preserve area within 1 px^2") {
  for (const AnchorShape& s : default_anchor_shapes())
    CHECK(std::abs(s.width * s.height - s.scale * s.scale) <= 1.0);
}

TEST_CASE("anchor_grid counts") {
  const auto one = anchor_shapes({16}, {{1, 1}});
  CHECK(anchor_grid(one, 64, 64, 32).size() == 4);
  CHECK(anchor_grid(default_anchor_shapes(), 256, 256, 32).size() == 960);
  CHECK(anchor_grid(one, 10, 10, 64).size() == 1);  // stride > image
}

TEST_CASE("encode/decode delta: closed-form case") {
  const BBox anchor{0, 0, 10, 10};
  const BBox target{5, 5, 25, 25};
  const BoxDelta d = encode_delta(anchor, target);
  CHECK_THAT(d.dx, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(d.dy, Catch::Matchers::WithinAbs(1.0, 1e-12));
  CHECK_THAT(d.dw, Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
  CHECK_THAT(d.dh, Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
  CHECK(encode_delta(anchor, anchor).dx == 0.0);
  CHECK(encode_delta(anchor, anchor).dw == 0.0);
}

TEST_CASE("encode/decode delta: mutual inverses on random boxes") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::uniform_real_distribution<double> size(0.5, 60.0);
  for (int i = 0; i < 300; ++i) {
    const double ax = u(rng), ay = u(rng);
    const BBox anchor{ax, ay, ax + size(rng), ay + size(rng)};
    const double tx = u(rng), ty = u(rng);
    const BBox target{tx, ty, tx + size(rng), ty + size(rng)};
    const BBox back = decode_delta(anchor, encode_delta(anchor, target));
    CHECK_THAT(back.x0, Catch::Matchers::WithinAbs(target.x0, 1e-6));
    CHECK_THAT(back.y0, Catch::Matchers::WithinAbs(target.y0, 1e-6));
    CHECK_THAT(back.x1, Catch::Matchers::WithinAbs(target.x1, 1e-6));
    CHECK_THAT(back.y1, Catch::Matchers::WithinAbs(target.y1, 1e-6));
  }
}

TEST_CASE("encode_delta rejects zero-size anchors") {
  CHECK_THROWS_AS(encode_delta(BBox{0, 0, 0, 10}, BBox{0, 0, 5, 5}),
                  NonPositiveAnchor);
}

TEST_CASE("nms: worked example and trivial cases") {
  std::vector<ScoredBox> boxes = {{BBox{0, 0, 10, 10}, 0.9, 0},
                                  {BBox{1, 1, 11, 11}, 0.8, 0}};
  const auto kept = nms(boxes, 0.5, 1000);
  REQUIRE(kept.size() == 1);  // IoU ~0.68 > 0.5
  CHECK(kept[0].score == 0.9);

  std::vector<ScoredBox> disjoint = {{BBox{0, 0, 10, 10}, 0.9, 0},
                                     {BBox{20, 20, 30, 30}, 0.8, 0}};
  CHECK(nms(disjoint, 0.5, 1000).size() == 2);

  std::vector<ScoredBox> identical(2000, ScoredBox{BBox{0, 0, 5, 5}, 0.5, 0});
  CHECK(nms(identical, 0.5, 1000).size() == 1);
}

TEST_CASE("nms: class-wise mode never suppresses across classes") {
  std::vector<ScoredBox> boxes = {{BBox{0, 0, 10, 10}, 0.9, 0},
                                  {BBox{0, 0, 10, 10}, 0.8, 1}};
  CHECK(nms(boxes, 0.5, 1000, true).size() == 2);
  CHECK(nms(boxes, 0.5, 1000, false).size() == 1);
}

TEST_CASE("nms: matches brute-force oracle, output is antichain") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> count(0, 50);
  std::uniform_real_distribution<double> thr(0.1, 0.9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto boxes = random_boxes(rng, count(rng), 2);
    const double t = thr(rng);
    const auto kept = nms(boxes, t, 30);
    CHECK(same_boxes(kept, oracle_nms(boxes, t, 30, true)));
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j)
        if (kept[i].class_index == kept[j].class_index)
          CHECK(bbox_iou(kept[i].box, kept[j].box) <= t);
  }
}

TEST_CASE("select_rois: m = max(100, n+50)") {
  std::mt19937 rng(5);
  const auto pool = random_boxes(rng, 400, 1);
  CHECK(select_rois(pool, 10).size() == 100);
  CHECK(select_rois(pool, 100).size() == 150);
  CHECK(select_rois(pool, 50).size() == 100);
  CHECK(select_rois(random_boxes(rng, 40, 1), 10).size() == 40);

  const auto picked = select_rois(pool, 0);
  for (std::size_t i = 1; i < picked.size(); ++i)
    CHECK(picked[i - 1].score >= picked[i].score);
}

TEST_CASE("combine_losses") {
  CHECK(combine_losses(1, 2, 3, 4) == 10.0);
  CHECK(combine_losses(0, 0, 0, 0) == 0.0);
  CHECK(combine_losses(1, 5, 1, 1, 2, 0, 1, 1) == 4.0);
}
