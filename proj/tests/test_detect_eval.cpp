#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "plate/detect_eval.hpp"
#include "plate/rng.hpp"

using namespace plate::detect;
using plate::BBox;

namespace {

// ---- Independent matching oracle -------------------------------------------
// Re-derives the greedy protocol from its definition: process predictions in
// descending score (insertion order on ties); each takes the still-free
// ground truth with the highest IoU >= threshold (lowest index on IoU ties),
// falling back to a still-free ignored ground truth before counting as FP.
// pred_to_gt: matched gt index, -1 for false positive, -2 for ignored.
std::vector<int> oracle_match(const std::vector<BBox>& preds,
                              const std::vector<BBox>& gts, double thr,
                              const std::vector<bool>& ignored) {
  std::vector<int> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return preds[static_cast<std::size_t>(a)].score >
           preds[static_cast<std::size_t>(b)].score;
  });
  std::vector<bool> taken(gts.size(), false);
  std::vector<int> pred_to_gt(preds.size(), -1);
  for (int p : order) {
    auto pick = [&](bool want_ignored) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (taken[g] || (g < ignored.size() ? ignored[g] : false) != want_ignored)
          continue;
        const double v = plate::iou(preds[static_cast<std::size_t>(p)], gts[g]);
        if (v >= thr && v > best_iou) {
          best_iou = v;
          best = static_cast<int>(g);
        }
      }
      return best;
    };
    int g = pick(false);
    if (g >= 0) {
      taken[static_cast<std::size_t>(g)] = true;
      pred_to_gt[static_cast<std::size_t>(p)] = g;
      continue;
    }
    g = pick(true);
    if (g >= 0) {
      taken[static_cast<std::size_t>(g)] = true;
      pred_to_gt[static_cast<std::size_t>(p)] = -2;
    }
  }
  return pred_to_gt;
}

// ---- Independent AP oracle -------------------------------------------------
// Direct 101-point scan: for each recall sample, the best precision among all
// operating points at or beyond it, found by scanning the whole PR table.
double oracle_average_precision(std::vector<ScoredOutcome> dets, long npos) {
  if (npos == 0) return -1.0;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) {
                     return a.score > b.score;
                   });
  std::vector<double> rec, prec;
  long tp = 0, fp = 0;
  for (const auto& d : dets) {
    if (d.outcome == Outcome::Ignored) continue;
    (d.outcome == Outcome::TruePositive) ? ++tp : ++fp;
    rec.push_back(static_cast<double>(tp) / static_cast<double>(npos));
    prec.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  double sum = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    double best = 0.0;
    for (std::size_t j = 0; j < rec.size(); ++j)
      if (rec[j] >= r) best = std::max(best, prec[j]);
    sum += best;
  }
  return sum / 101.0;
}

double oracle_dataset_ap(const DetectionSet& set, double thr, double min_area,
                         double max_area) {
  long npos = 0;
  std::vector<ScoredOutcome> dets;
  for (const auto& img : set.images) {
    std::vector<bool> ignored(img.ground_truth.size(), false);
    for (std::size_t g = 0; g < img.ground_truth.size(); ++g) {
      const double a = img.ground_truth[g].area();
      ignored[g] = !(a >= min_area && a < max_area);
      if (!ignored[g]) ++npos;
    }
    const auto assign = oracle_match(img.predictions, img.ground_truth, thr, ignored);
    for (std::size_t p = 0; p < img.predictions.size(); ++p) {
      Outcome o = Outcome::FalsePositive;
      if (assign[p] >= 0) o = Outcome::TruePositive;
      if (assign[p] == -2) o = Outcome::Ignored;
      dets.push_back({img.predictions[p].score, o});
    }
  }
  return oracle_average_precision(std::move(dets), npos);
}

double oracle_mean_over_thresholds(const DetectionSet& set, double min_area,
                                   double max_area) {
  double sum = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double v = oracle_dataset_ap(set, 0.50 + 0.05 * i, min_area, max_area);
    if (v < 0.0) return -1.0;
    sum += v;
  }
  return sum / 10.0;
}

BBox box(double x0, double y0, double x1, double y1, double score = 1.0) {
  BBox b;
  b.x_min = x0;
  b.y_min = y0;
  b.x_max = x1;
  b.y_max = y1;
  b.score = score;
  return b;
}

DetectionSet random_fixture(plate::SplitMix64& rng) {
  DetectionSet set;
  const int n_images = 1 + static_cast<int>(rng.below(4));
  for (int i = 0; i < n_images; ++i) {
    ImageDetections img;
    img.id = "img" + std::to_string(i);
    const int n_gt = static_cast<int>(rng.below(4));    // 0..3
    const int n_pred = static_cast<int>(rng.below(4));  // 0..3
    auto random_box = [&](bool with_score) {
      // Discrete coordinates and scores so IoU and score ties occur often;
      // scale factor pushes some boxes into the medium/large area buckets.
      const double m = static_cast<double>(1 + 3 * rng.below(3) +
                                           12 * (rng.below(4) == 0));
      const double x0 = static_cast<double>(rng.below(24)) * m;
      const double y0 = static_cast<double>(rng.below(24)) * m;
      const double w = static_cast<double>(4 + rng.below(20)) * m;
      const double h = static_cast<double>(4 + rng.below(20)) * m;
      BBox b = box(x0, y0, x0 + w, y0 + h);
      if (with_score) b.score = static_cast<double>(1 + rng.below(10)) / 10.0;
      return b;
    };
    for (int g = 0; g < n_gt; ++g) img.ground_truth.push_back(random_box(false));
    for (int p = 0; p < n_pred; ++p) {
      // Half the predictions are jittered copies of some GT so TPs happen.
      if (!img.ground_truth.empty() && rng.below(2) == 0) {
        BBox b = img.ground_truth[static_cast<std::size_t>(
            rng.below(img.ground_truth.size()))];
        const double dx = static_cast<double>(rng.below(7)) - 3.0;
        b.x_min += dx;
        b.x_max += dx;
        b.score = static_cast<double>(1 + rng.below(10)) / 10.0;
        img.predictions.push_back(b);
      } else {
        img.predictions.push_back(random_box(true));
      }
    }
    set.images.push_back(std::move(img));
  }
  return set;
}

}  // namespace

TEST_CASE("iou on hand-checked boxes") {
  CHECK(plate::iou(box(0, 0, 10, 10), box(0, 0, 10, 10)) == doctest::Approx(1.0));
  CHECK(plate::iou(box(0, 0, 10, 10), box(20, 20, 30, 30)) == 0.0);
  CHECK(plate::iou(box(0, 0, 10, 10), box(5, 0, 15, 10)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(plate::iou(box(0, 0, 10, 10), box(10, 0, 20, 10)) == 0.0);  // touching
  CHECK(plate::iou(box(0, 0, 10, 10), box(2, 2, 7, 7)) ==
        doctest::Approx(0.25));
}

TEST_CASE("iou is symmetric and rejects degenerate boxes") {
  plate::SplitMix64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const BBox a = box(rng.uniform(0, 50), rng.uniform(0, 50),
                       50 + rng.uniform(1, 50), 50 + rng.uniform(1, 50));
    const BBox b = box(rng.uniform(0, 50), rng.uniform(0, 50),
                       50 + rng.uniform(1, 50), 50 + rng.uniform(1, 50));
    CHECK(plate::iou(a, b) == plate::iou(b, a));
    CHECK(plate::iou(a, a) == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS((void)plate::iou(box(0, 0, 0, 10), box(0, 0, 1, 1)),
                  plate::DomainError);
  CHECK_THROWS_AS((void)plate::iou(box(0, 0, 1, 1), box(5, 5, 5, 5)),
                  plate::DomainError);
}

TEST_CASE("matching basics: TP, FN, score priority") {
  const std::vector<BBox> gt{box(0, 0, 10, 10)};
  SUBCASE("one exact prediction is one TP") {
    const auto r = match_detections({box(0, 0, 10, 10, 0.9)}, gt, 0.5);
    REQUIRE(r.matches.size() == 1);
    CHECK(r.matches[0].pred_index == 0);
    CHECK(r.matches[0].gt_index == 0);
    CHECK(r.unmatched_predictions.empty());
    CHECK(r.unmatched_ground_truth.empty());
  }
  SUBCASE("no predictions leaves the GT unmatched") {
    const auto r = match_detections({}, gt, 0.5);
    CHECK(r.matches.empty());
    CHECK(r.unmatched_ground_truth == std::vector<int>{0});
  }
  SUBCASE("higher score wins a contested GT") {
    const auto r = match_detections(
        {box(0, 0, 10, 10, 0.8), box(1, 0, 11, 10, 0.9)}, gt, 0.5);
    REQUIRE(r.matches.size() == 1);
    CHECK(r.matches[0].pred_index == 1);  // score 0.9 processed first
    CHECK(r.unmatched_predictions == std::vector<int>{0});
  }
  SUBCASE("threshold outside (0,1] is rejected") {
    CHECK_THROWS_AS((void)match_detections({}, gt, 0.0), plate::ArgumentError);
    CHECK_THROWS_AS((void)match_detections({}, gt, 1.0001),
                    plate::ArgumentError);
  }
}

TEST_CASE("matching agrees with the greedy oracle on random fixtures") {
  plate::SplitMix64 rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const DetectionSet set = random_fixture(rng);
    const double thr = 0.5 + 0.05 * static_cast<double>(rng.below(10));
    for (const auto& img : set.images) {
      std::vector<bool> ignored(img.ground_truth.size(), false);
      for (auto&& flag : ignored) flag = rng.below(4) == 0;
      const auto expected =
          oracle_match(img.predictions, img.ground_truth, thr, ignored);
      const auto r =
          match_detections(img.predictions, img.ground_truth, thr, ignored);
      std::vector<int> got(img.predictions.size(), -1);
      for (const auto& m : r.matches) {
        got[static_cast<std::size_t>(m.pred_index)] = m.gt_index;
        CHECK(m.overlap ==
              doctest::Approx(
                  plate::iou(img.predictions[static_cast<std::size_t>(m.pred_index)],
                             img.ground_truth[static_cast<std::size_t>(m.gt_index)]))
                  .epsilon(1e-15));
      }
      for (int p : r.ignored_predictions) got[static_cast<std::size_t>(p)] = -2;
      CHECK(got == expected);
      // Unmatched GT = non-ignored GTs not present in any match.
      std::vector<bool> gt_matched(img.ground_truth.size(), false);
      for (const auto& m : r.matches)
        gt_matched[static_cast<std::size_t>(m.gt_index)] = true;
      for (std::size_t g = 0; g < img.ground_truth.size(); ++g) {
        const bool should_be_unmatched = !gt_matched[g] && !ignored[g];
        const bool is_listed =
            std::find(r.unmatched_ground_truth.begin(),
                      r.unmatched_ground_truth.end(),
                      static_cast<int>(g)) != r.unmatched_ground_truth.end();
        CHECK(is_listed == should_be_unmatched);
      }
    }
  }
}

TEST_CASE("average precision on a hand-built PR table") {
  // 2 GTs, ranked outcomes TP, FP, TP:
  //   operating points -> (r=0.5, p=1), (0.5, 0.5), (1.0, 2/3)
  // interpolated: p=1 for r<=0.50, 2/3 above -> (51 + 50*2/3)/101.
  const std::vector<ScoredOutcome> dets{{0.9, Outcome::TruePositive},
                                        {0.8, Outcome::FalsePositive},
                                        {0.7, Outcome::TruePositive}};
  const double expected = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
  CHECK(average_precision(dets, 2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(average_precision(dets, 2) ==
        doctest::Approx(oracle_average_precision(dets, 2)).epsilon(1e-15));
}

TEST_CASE("average precision edge cases") {
  CHECK(average_precision({}, 0) == -1.0);
  CHECK(average_precision({{0.5, Outcome::FalsePositive}}, 0) == -1.0);
  CHECK(average_precision({}, 3) == 0.0);  // misses only
  CHECK(average_precision({{0.5, Outcome::TruePositive}}, 1) ==
        doctest::Approx(1.0));
  // Ignored detections change nothing.
  CHECK(average_precision({{0.9, Outcome::Ignored}, {0.5, Outcome::TruePositive}},
                          1) == doctest::Approx(1.0));
}

TEST_CASE("converting a FP to a TP never decreases AP") {
  plate::SplitMix64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ScoredOutcome> dets;
    const int n = 2 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i)
      dets.push_back({static_cast<double>(1 + rng.below(10)) / 10.0,
                      rng.below(2) ? Outcome::TruePositive
                                   : Outcome::FalsePositive});
    const long npos = n;  // enough that recall stays <= 1 after the flip
    std::vector<std::size_t> fps;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (dets[i].outcome == Outcome::FalsePositive) fps.push_back(i);
    if (fps.empty()) continue;
    const double before = average_precision(dets, npos);
    dets[fps[static_cast<std::size_t>(rng.below(fps.size()))]].outcome =
        Outcome::TruePositive;
    const double after = average_precision(dets, npos);
    CHECK(after >= before - 1e-15);
  }
}

TEST_CASE("dataset AP and the summary match the brute-force oracle") {
  plate::SplitMix64 rng(24);
  const double inf = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 50; ++trial) {
    const DetectionSet set = random_fixture(rng);
    for (double thr : {0.5, 0.75, 0.95}) {
      CHECK(dataset_ap(set, thr) ==
            doctest::Approx(oracle_dataset_ap(set, thr, 0.0, inf))
                .epsilon(1e-12));
    }
    const ApReport rep = ap_summary(set);
    CHECK(rep.ap50_95 ==
          doctest::Approx(oracle_mean_over_thresholds(set, 0.0, inf))
              .epsilon(1e-12));
    CHECK(rep.ap75 ==
          doctest::Approx(oracle_dataset_ap(set, 0.75, 0.0, inf)).epsilon(1e-12));
    CHECK(rep.ap_small ==
          doctest::Approx(oracle_mean_over_thresholds(set, 0.0, kSmallAreaMax))
              .epsilon(1e-12));
    CHECK(rep.ap_medium ==
          doctest::Approx(
              oracle_mean_over_thresholds(set, kSmallAreaMax, kMediumAreaMax))
              .epsilon(1e-12));
    CHECK(rep.ap_large ==
          doctest::Approx(oracle_mean_over_thresholds(set, kMediumAreaMax, inf))
              .epsilon(1e-12));
  }
}

TEST_CASE("perfect predictions give 1.0 everywhere that has ground truth") {
  DetectionSet set;
  ImageDetections img;
  img.id = "only";
  img.ground_truth = {box(0, 0, 20, 20), box(50, 50, 140, 120),
                      box(200, 200, 350, 350)};  // small, medium, large
  for (const auto& g : img.ground_truth) {
    BBox p = g;
    p.score = 1.0;
    img.predictions.push_back(p);
  }
  set.images.push_back(img);
  const ApReport rep = ap_summary(set);
  CHECK(rep.ap50_95 == doctest::Approx(1.0));
  CHECK(rep.ap75 == doctest::Approx(1.0));
  CHECK(rep.ap_small == doctest::Approx(1.0));
  CHECK(rep.ap_medium == doctest::Approx(1.0));
  CHECK(rep.ap_large == doctest::Approx(1.0));
}

TEST_CASE("empty buckets report the -1.0 sentinel") {
  DetectionSet set;
  ImageDetections img;
  img.id = "large-only";
  img.ground_truth = {box(0, 0, 200, 200)};
  img.predictions = {box(0, 0, 200, 200, 0.9)};
  set.images.push_back(img);
  const ApReport rep = ap_summary(set);
  CHECK(rep.ap_small == -1.0);
  CHECK(rep.ap_medium == -1.0);
  CHECK(rep.ap_large == doctest::Approx(1.0));

  const DetectionSet empty;
  const ApReport none = ap_summary(empty);
  CHECK(none.ap50_95 == -1.0);
  CHECK(none.ap75 == -1.0);
  CHECK(none.ap_small == -1.0);
  CHECK(none.ap_medium == -1.0);
  CHECK(none.ap_large == -1.0);
}

TEST_CASE("duplicate image ids are rejected") {
  DetectionSet set;
  set.images.push_back({"a", {}, {}});
  set.images.push_back({"a", {}, {}});
  CHECK_THROWS_AS(set.require_valid(), plate::ArgumentError);
}

TEST_CASE("detection recall counts matched ground truths") {
  DetectionSet set;
  ImageDetections img;
  img.id = "r";
  img.ground_truth = {box(0, 0, 10, 10), box(100, 0, 110, 10),
                      box(0, 100, 10, 110)};
  img.predictions = {box(0, 0, 10, 10, 0.9), box(100, 0, 110, 10, 0.8),
                     box(500, 500, 510, 510, 0.7)};
  set.images.push_back(img);
  CHECK(detection_recall(set, 0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(detection_recall(DetectionSet{}, 0.5) == -1.0);
}

TEST_CASE("baseline detector finds dark rectangles on light background") {
  using plate::GrayImage;
  SUBCASE("blank image yields nothing") {
    CHECK(baseline_detect(GrayImage::Constant(32, 64, 0.5)).empty());
    CHECK_THROWS_AS((void)baseline_detect(GrayImage(0, 0)),
                    plate::ArgumentError);
  }
  SUBCASE("one plate-like rectangle yields one tight box") {
    GrayImage img = GrayImage::Constant(64, 128, 0.9);
    for (int y = 10; y < 26; ++y)
      for (int x = 34; x < 74; ++x) img(y, x) = 0.1;
    const auto boxes = baseline_detect(img);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].x_min == doctest::Approx(34.0));
    CHECK(boxes[0].y_min == doctest::Approx(10.0));
    CHECK(boxes[0].x_max == doctest::Approx(74.0));
    CHECK(boxes[0].y_max == doctest::Approx(26.0));
    CHECK(boxes[0].score > 0.0);
    CHECK(boxes[0].score <= 1.0);
    CHECK(plate::iou(boxes[0], box(34, 10, 74, 26)) >= 0.5);
  }
  SUBCASE("two separated rectangles yield two boxes") {
    GrayImage img = GrayImage::Constant(64, 128, 0.9);
    for (int y = 10; y < 26; ++y)
      for (int x = 34; x < 74; ++x) img(y, x) = 0.1;
    for (int y = 42; y < 58; ++y)
      for (int x = 90; x < 122; ++x) img(y, x) = 0.1;
    const auto boxes = baseline_detect(img);
    REQUIRE(boxes.size() == 2);
    CHECK(plate::iou(boxes[0], box(34, 10, 74, 26)) > 0.9);
    CHECK(plate::iou(boxes[1], box(90, 42, 122, 58)) > 0.9);
  }
}
