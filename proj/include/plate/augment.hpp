#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "plate/errors.hpp"
#include "plate/geometry.hpp"
#include "plate/image.hpp"
#include "plate/rng.hpp"

namespace plate::augment {

/// Magnitude bounds for the augmentation recipe. sample_pipeline draws every
/// parameter uniformly within these bounds from a SplitMix64 seeded with
/// `seed`, so one integer reproduces a sample exactly.
struct AugmentConfig {
  double rotation_deg = 15.0;       // rotation angle in [-r, r]
  double hsv_h = 0.015;             // additive hue shift, fraction of a turn
  double hsv_s = 0.7;               // saturation gain g, multiplier 1+g
  double hsv_v = 0.4;               // value gain g, multiplier 1+g
  double translate = 0.1;           // shift as a fraction of width/height
  double scale = 0.5;               // zoom drawn from [1-scale, 1+scale]
  double mosaic_prob = 1.0;         // chance of 2x2 composition
  double perspective_jitter = 0.05; // corner displacement, fraction of extent
  std::uint64_t seed = 0;
};

/// A raster plus its plate annotations. Each box's `label` field carries the
/// plate string, so a mosaic simply concatenates the box lists. Box
/// coordinates are continuous corner-form pixel coordinates sharing the pixel
/// grid (pixel (x, y) sits at integer coordinates); clipping bounds are the
/// full extent [0, width] x [0, height].
struct LabeledImage {
  ImageU8 image;
  std::vector<BBox> boxes;
};

/// Counters for quietly handled degeneracies.
struct AugmentStats {
  long perspective_rejected = 0;  // non-convex target quad, identity applied
  long boxes_dropped = 0;         // transformed box fell below 4 px a side
};

/// Corner displacement table for perspective: rows are the four corners in
/// TL, TR, BR, BL order, columns the (du, dv) displacement as a fraction of
/// the image extent.
using CornerOffsets = Eigen::Matrix<double, 4, 2>;

/// The parameters one sample_pipeline call drew, in draw order. Exposed so
/// tests (and run reports) can audit the stream without re-deriving it.
struct DrawnParams {
  double mosaic_draw = 0.0;  // compared against mosaic_prob
  bool mosaic_applied = false;
  double angle_deg = 0.0;
  CornerOffsets offsets = CornerOffsets::Zero();
  double gain_h = 0.0, gain_s = 0.0, gain_v = 0.0;
  double dx = 0.0, dy = 0.0, zoom = 1.0;
};

/// Rotation about the image center ((w-1)/2, (h-1)/2) using the standard
/// 2-D rotation matrix, bilinear resampling, border fill = mean color.
/// Boxes become the axis-aligned hull of their rotated corners, clipped;
/// boxes left empty by clipping are removed. Angle 0 is pixel-identical.
LabeledImage rotate(const LabeledImage& img, double angle_deg);

/// Homography mapping four source points to four targets (rows of `src` and
/// `dst`), normalized so H(2,2) = 1, found by the standard 8x8 linear solve.
/// Throws DomainError when the correspondence is degenerate.
Eigen::Matrix3d homography(const Eigen::Matrix<double, 4, 2>& src,
                           const Eigen::Matrix<double, 4, 2>& dst);

/// Apply a homography to one point (perspective divide included).
Eigen::Vector2d apply_homography(const Eigen::Matrix3d& h,
                                 const Eigen::Vector2d& p);

/// Warp by the homography that sends the unit square to the square displaced
/// by `offsets`, resampled bilinearly with mean-color fill. A non-convex
/// target quad is rejected: the input is returned unchanged and
/// stats->perspective_rejected is incremented.
LabeledImage perspective(const LabeledImage& img, const CornerOffsets& offsets,
                         AugmentStats* stats = nullptr);

/// Hue shifted additively by gain_h (fraction of a full turn, wrapping);
/// saturation and value multiplied by 1+gain_s and 1+gain_v, clamped.
/// Grayscale rasters only respond to the value gain.
LabeledImage hsv_jitter(const LabeledImage& img, double gain_h, double gain_s,
                        double gain_v);

/// Affine zoom about the center plus a translation of (dx*w, dy*h) pixels,
/// mean-color fill. Transformed boxes are clipped; any box reduced below
/// 4 px in either dimension is dropped and counted in stats->boxes_dropped.
/// Requires zoom > 0.
LabeledImage translate_scale(const LabeledImage& img, double dx, double dy,
                             double zoom, AugmentStats* stats = nullptr);

/// 2x2 composition: each input resized to (out_w/2, out_h/2) and placed
/// row-major in input order; boxes rescaled by the simple side ratio and
/// offset into their quadrant. Requires exactly 4 inputs with matching
/// channel counts and even positive output dimensions.
LabeledImage mosaic(const std::vector<LabeledImage>& inputs, int out_w,
                    int out_h);

/// Full recipe. All parameters are drawn from SplitMix64(config.seed) in a
/// fixed order -- mosaic?, rotation, perspective corner offsets (TL, TR, BR,
/// BL, du before dv), hue, saturation, value, dx, dy, zoom -- and the ops
/// apply in that order. Every draw happens on every call (even when a
/// magnitude is zero or the mosaic branch is not taken), so the stream shape
/// never depends on the config values. Mosaic runs only when the draw falls
/// below mosaic_prob and at least 4 inputs are supplied; it composes the
/// first four onto a canvas of inputs[0]'s dimensions rounded down to even.
LabeledImage sample_pipeline(const std::vector<LabeledImage>& inputs,
                             const AugmentConfig& config,
                             AugmentStats* stats = nullptr,
                             DrawnParams* drawn = nullptr);

}  // namespace plate::augment
