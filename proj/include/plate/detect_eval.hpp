#pragma once

#include <limits>
#include <string>
#include <vector>

#include "plate/geometry.hpp"
#include "plate/image.hpp"

namespace plate::detect {

/// Ground truth and predictions for one image.
struct ImageDetections {
  std::string id;
  std::vector<BBox> ground_truth;
  std::vector<BBox> predictions;
};

/// Per-image detection lists for a dataset slice. Image ids must be unique;
/// prediction order within an image is the deterministic tie-break for equal
/// scores.
struct DetectionSet {
  std::vector<ImageDetections> images;

  void require_valid() const;
};

struct MatchPair {
  int pred_index;
  int gt_index;
  double overlap;
};

struct MatchResult {
  std::vector<MatchPair> matches;          // in descending-score pred order
  std::vector<int> unmatched_predictions;  // false positives
  std::vector<int> unmatched_ground_truth; // false negatives
  std::vector<int> ignored_predictions;    // matched only an ignored GT
};

/// Greedy score-ordered matching (COCO convention): predictions in descending
/// score (ties by insertion order), each one taking the unmatched ground truth
/// with the highest IoU >= threshold. `gt_ignored`, when non-empty, marks
/// ground truths outside the area slice under evaluation; a prediction whose
/// only match is ignored is neither TP nor FP.
MatchResult match_detections(const std::vector<BBox>& predictions,
                             const std::vector<BBox>& ground_truth,
                             double threshold,
                             const std::vector<bool>& gt_ignored = {});

enum class Outcome { FalsePositive = 0, TruePositive = 1, Ignored = 2 };

struct ScoredOutcome {
  double score;
  Outcome outcome;
};

/// 101-point interpolated average precision over the pooled prediction list.
/// `outcomes` may arrive in any order; sorting by score (stable) happens here.
/// Returns -1.0 when there is no ground truth (npos == 0).
double average_precision(std::vector<ScoredOutcome> outcomes, long npos);

/// Matches every image at `threshold` and pools the outcomes into one AP.
double dataset_ap(const DetectionSet& set, double threshold,
                  double min_area = 0.0,
                  double max_area = std::numeric_limits<double>::infinity());

/// COCO-style size buckets on ground-truth box area.
inline constexpr double kSmallAreaMax = 32.0 * 32.0;
inline constexpr double kMediumAreaMax = 96.0 * 96.0;

/// -1.0 in any field means the corresponding GT bucket is empty.
struct ApReport {
  double ap50_95 = -1.0;
  double ap75 = -1.0;
  double ap_small = -1.0;
  double ap_medium = -1.0;
  double ap_large = -1.0;
};

/// AP averaged over IoU thresholds 0.50:0.05:0.95, AP at 0.75, and
/// size-stratified AP (each also averaged over the ten thresholds).
ApReport ap_summary(const DetectionSet& detections);

/// Share of ground-truth boxes matched by any prediction at the threshold.
/// Reported alongside AP tables as plate-level recall. -1.0 with no GT.
double detection_recall(const DetectionSet& set, double threshold);

/// Demo detector for synthetic scenes: binarize at the mean intensity, find
/// 8x8 tiles with high local variance, and report connected tile regions as
/// tight boxes around their dark pixels. Score is the mean tile variance
/// normalized by the maximum 0.25 possible for [0,1] data.
std::vector<BBox> baseline_detect(const GrayImage& image);

}  // namespace plate::detect
