#include "plate/detect_eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "plate/errors.hpp"

namespace plate::detect {

void DetectionSet::require_valid() const {
  std::set<std::string> seen;
  for (const ImageDetections& img : images) {
    if (!seen.insert(img.id).second)
      throw ArgumentError("detection set: duplicate image id '" + img.id + "'");
    for (const BBox& b : img.ground_truth) b.require_valid("ground truth");
    for (const BBox& b : img.predictions) b.require_valid("prediction");
  }
}

MatchResult match_detections(const std::vector<BBox>& predictions,
                             const std::vector<BBox>& ground_truth,
                             double threshold,
                             const std::vector<bool>& gt_ignored) {
  if (threshold <= 0.0 || threshold > 1.0)
    throw ArgumentError("match_detections: threshold must be in (0,1]");
  if (!gt_ignored.empty() && gt_ignored.size() != ground_truth.size())
    throw ArgumentError("match_detections: ignore mask size mismatch");

  std::vector<int> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return predictions[static_cast<std::size_t>(a)].score >
           predictions[static_cast<std::size_t>(b)].score;
  });

  auto ignored = [&](int g) {
    return !gt_ignored.empty() && gt_ignored[static_cast<std::size_t>(g)];
  };

  MatchResult result;
  std::vector<bool> gt_taken(ground_truth.size(), false);
  for (int p : order) {
    // Best unmatched live GT first; highest IoU, ties to the lowest index.
    int best_gt = -1;
    double best_iou = 0.0;
    for (int g = 0; g < static_cast<int>(ground_truth.size()); ++g) {
      if (gt_taken[static_cast<std::size_t>(g)] || ignored(g)) continue;
      double v = iou(predictions[static_cast<std::size_t>(p)],
                     ground_truth[static_cast<std::size_t>(g)]);
      if (v >= threshold && v > best_iou) {
        best_iou = v;
        best_gt = g;
      }
    }
    if (best_gt >= 0) {
      gt_taken[static_cast<std::size_t>(best_gt)] = true;
      result.matches.push_back({p, best_gt, best_iou});
      continue;
    }
    // Fall back to an ignored GT; such predictions leave the evaluation.
    int best_ign = -1;
    best_iou = 0.0;
    for (int g = 0; g < static_cast<int>(ground_truth.size()); ++g) {
      if (gt_taken[static_cast<std::size_t>(g)] || !ignored(g)) continue;
      double v = iou(predictions[static_cast<std::size_t>(p)],
                     ground_truth[static_cast<std::size_t>(g)]);
      if (v >= threshold && v > best_iou) {
        best_iou = v;
        best_ign = g;
      }
    }
    if (best_ign >= 0) {
      gt_taken[static_cast<std::size_t>(best_ign)] = true;
      result.ignored_predictions.push_back(p);
    } else {
      result.unmatched_predictions.push_back(p);
    }
  }
  for (int g = 0; g < static_cast<int>(ground_truth.size()); ++g)
    if (!gt_taken[static_cast<std::size_t>(g)] && !ignored(g))
      result.unmatched_ground_truth.push_back(g);
  return result;
}

double average_precision(std::vector<ScoredOutcome> outcomes, long npos) {
  if (npos == 0) return -1.0;
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) {
                     return a.score > b.score;
                   });
  std::vector<double> recall, precision;
  long tp = 0, fp = 0;
  for (const ScoredOutcome& o : outcomes) {
    if (o.outcome == Outcome::Ignored) continue;
    if (o.outcome == Outcome::TruePositive)
      ++tp;
    else
      ++fp;
    recall.push_back(static_cast<double>(tp) / static_cast<double>(npos));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
  }
  // Precision envelope from the right, then sample 101 recall points.
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
    precision[static_cast<std::size_t>(i)] =
        std::max(precision[static_cast<std::size_t>(i)],
                 precision[static_cast<std::size_t>(i + 1)]);
  double sum = 0.0;
  std::size_t k = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    while (k < recall.size() && recall[k] < r) ++k;
    if (k < precision.size()) sum += precision[k];
  }
  return sum / 101.0;
}

double dataset_ap(const DetectionSet& set, double threshold, double min_area,
                  double max_area) {
  std::vector<ScoredOutcome> outcomes;
  long npos = 0;
  for (const ImageDetections& img : set.images) {
    std::vector<bool> ignored(img.ground_truth.size(), false);
    for (std::size_t g = 0; g < img.ground_truth.size(); ++g) {
      const double a = img.ground_truth[g].area();
      ignored[g] = (a < min_area || a >= max_area);
      if (!ignored[g]) ++npos;
    }
    MatchResult m = match_detections(img.predictions, img.ground_truth,
                                     threshold, ignored);
    std::vector<Outcome> flag(img.predictions.size(), Outcome::FalsePositive);
    for (const MatchPair& pair : m.matches)
      flag[static_cast<std::size_t>(pair.pred_index)] = Outcome::TruePositive;
    for (int p : m.ignored_predictions)
      flag[static_cast<std::size_t>(p)] = Outcome::Ignored;
    for (std::size_t p = 0; p < img.predictions.size(); ++p)
      outcomes.push_back({img.predictions[p].score, flag[p]});
  }
  return average_precision(std::move(outcomes), npos);
}

namespace {

const double kApThresholds[] = {0.50, 0.55, 0.60, 0.65, 0.70,
                                0.75, 0.80, 0.85, 0.90, 0.95};

double mean_ap_over_thresholds(const DetectionSet& set, double min_area,
                               double max_area) {
  double sum = 0.0;
  for (double t : kApThresholds) {
    double ap = dataset_ap(set, t, min_area, max_area);
    if (ap < 0.0) return -1.0;  // empty bucket at one threshold == empty at all
    sum += ap;
  }
  return sum / 10.0;
}

}  // namespace

ApReport ap_summary(const DetectionSet& detections) {
  detections.require_valid();
  ApReport report;
  report.ap50_95 = mean_ap_over_thresholds(detections, 0.0,
                                           std::numeric_limits<double>::infinity());
  report.ap75 = dataset_ap(detections, 0.75);
  report.ap_small = mean_ap_over_thresholds(detections, 0.0, kSmallAreaMax);
  report.ap_medium = mean_ap_over_thresholds(detections, kSmallAreaMax, kMediumAreaMax);
  report.ap_large = mean_ap_over_thresholds(detections, kMediumAreaMax,
                                            std::numeric_limits<double>::infinity());
  return report;
}

double detection_recall(const DetectionSet& set, double threshold) {
  long matched = 0, total = 0;
  for (const ImageDetections& img : set.images) {
    MatchResult m = match_detections(img.predictions, img.ground_truth, threshold);
    matched += static_cast<long>(m.matches.size());
    total += static_cast<long>(img.ground_truth.size());
  }
  if (total == 0) return -1.0;
  return static_cast<double>(matched) / static_cast<double>(total);
}

std::vector<BBox> baseline_detect(const GrayImage& image) {
  if (image.size() == 0) throw ArgumentError("baseline_detect: empty image");
  const int h = static_cast<int>(image.rows());
  const int w = static_cast<int>(image.cols());
  const double mean = image.mean();

  constexpr int kTile = 8;
  constexpr double kVarThreshold = 0.01;
  const int th = (h + kTile - 1) / kTile;
  const int tw = (w + kTile - 1) / kTile;

  Eigen::MatrixXd tile_var = Eigen::MatrixXd::Zero(th, tw);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> active(th, tw);
  for (int ty = 0; ty < th; ++ty) {
    for (int tx = 0; tx < tw; ++tx) {
      const int y0 = ty * kTile, x0 = tx * kTile;
      const int bh = std::min(kTile, h - y0), bw = std::min(kTile, w - x0);
      auto block = image.block(y0, x0, bh, bw);
      const double m = block.mean();
      tile_var(ty, tx) = (block.array() - m).square().mean();
      active(ty, tx) = tile_var(ty, tx) > kVarThreshold;
    }
  }

  // Flood fill over active tiles, 4-connected, row-major discovery order.
  std::vector<BBox> boxes;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> seen =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(th, tw, false);
  for (int ty = 0; ty < th; ++ty) {
    for (int tx = 0; tx < tw; ++tx) {
      if (!active(ty, tx) || seen(ty, tx)) continue;
      std::vector<std::pair<int, int>> stack{{ty, tx}}, tiles;
      seen(ty, tx) = true;
      while (!stack.empty()) {
        auto [cy, cx] = stack.back();
        stack.pop_back();
        tiles.emplace_back(cy, cx);
        const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          int ny = cy + dy[d], nx = cx + dx[d];
          if (ny < 0 || ny >= th || nx < 0 || nx >= tw) continue;
          if (!active(ny, nx) || seen(ny, nx)) continue;
          seen(ny, nx) = true;
          stack.emplace_back(ny, nx);
        }
      }
      // Tight box over below-mean pixels inside the component's tiles.
      int x_min = w, y_min = h, x_max = -1, y_max = -1;
      double var_sum = 0.0;
      for (auto [cy, cx] : tiles) {
        var_sum += tile_var(cy, cx);
        const int y0 = cy * kTile, x0 = cx * kTile;
        const int bh = std::min(kTile, h - y0), bw = std::min(kTile, w - x0);
        for (int y = y0; y < y0 + bh; ++y) {
          for (int x = x0; x < x0 + bw; ++x) {
            if (image(y, x) < mean) {
              x_min = std::min(x_min, x);
              y_min = std::min(y_min, y);
              x_max = std::max(x_max, x);
              y_max = std::max(y_max, y);
            }
          }
        }
      }
      if (x_max < 0) continue;  // high variance but nothing below the mean
      BBox box;
      box.x_min = x_min;
      box.y_min = y_min;
      box.x_max = x_max + 1;
      box.y_max = y_max + 1;
      box.score = std::clamp(var_sum / static_cast<double>(tiles.size()) / 0.25,
                             0.0, 1.0);
      boxes.push_back(box);
    }
  }
  return boxes;
}

}  // namespace plate::detect
