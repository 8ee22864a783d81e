#include "plate/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace plate::augment {

namespace {

std::array<double, 3> mean_color(const ImageU8& img) {
  std::array<double, 3> mean = {0.0, 0.0, 0.0};
  const std::size_t pixels =
      static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (pixels == 0) return mean;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        mean[static_cast<std::size_t>(c)] += img.at(x, y, c);
  for (int c = 0; c < img.channels; ++c)
    mean[static_cast<std::size_t>(c)] /= static_cast<double>(pixels);
  return mean;
}

double bilerp_channel(const ImageU8& img, int c, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto px = [&](int xi, int yi) {
    xi = std::clamp(xi, 0, img.width - 1);
    yi = std::clamp(yi, 0, img.height - 1);
    return static_cast<double>(img.at(xi, yi, c));
  };
  const double top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
  const double bot = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
  return top * (1.0 - fy) + bot * fy;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

/// Resample through an inverse map: `source(x, y)` returns the input-space
/// point the output pixel reads from; points outside the pixel grid take the
/// mean color.
template <class SourceFn>
ImageU8 warp(const ImageU8& img, SourceFn source) {
  ImageU8 out(img.width, img.height, img.channels);
  const auto fill = mean_color(img);
  // Tolerance so border pixels whose source lands a rounding error outside
  // the grid still sample the edge instead of the fill color (the bilinear
  // kernel clamps its neighbor indices, so the value is exact).
  constexpr double tol = 1e-6;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Eigen::Vector2d s = source(x, y);
      const bool inside = s.x() >= -tol && s.x() <= img.width - 1.0 + tol &&
                          s.y() >= -tol && s.y() <= img.height - 1.0 + tol;
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) =
            inside ? quantize(bilerp_channel(img, c, s.x(), s.y()))
                   : quantize(fill[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

/// Forward-map each box's corners, take the axis-aligned hull, clip to the
/// image extent. Boxes emptied by clipping are removed; with min_size > 0,
/// survivors thinner than min_size on either side are dropped and counted.
template <class MapFn>
std::vector<BBox> transform_boxes(const std::vector<BBox>& boxes, MapFn fwd,
                                  int w, int h, double min_size,
                                  long* dropped) {
  std::vector<BBox> out;
  for (const BBox& b : boxes) {
    const std::array<Eigen::Vector2d, 4> corners = {
        Eigen::Vector2d(b.x_min, b.y_min), Eigen::Vector2d(b.x_max, b.y_min),
        Eigen::Vector2d(b.x_max, b.y_max), Eigen::Vector2d(b.x_min, b.y_max)};
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& p : corners) {
      const Eigen::Vector2d q = fwd(p);
      x_lo = std::min(x_lo, q.x());
      x_hi = std::max(x_hi, q.x());
      y_lo = std::min(y_lo, q.y());
      y_hi = std::max(y_hi, q.y());
    }
    BBox t = b;
    t.x_min = std::max(0.0, x_lo);
    t.y_min = std::max(0.0, y_lo);
    t.x_max = std::min(static_cast<double>(w), x_hi);
    t.y_max = std::min(static_cast<double>(h), y_hi);
    const bool empty = t.x_min >= t.x_max || t.y_min >= t.y_max;
    const bool thin =
        !empty && (t.width() < min_size || t.height() < min_size);
    if (empty || thin) {
      if (dropped) ++*dropped;
      continue;
    }
    out.push_back(t);
  }
  return out;
}

/// Unit-square corners in TL, TR, BR, BL order.
Eigen::Matrix<double, 4, 2> unit_corners() {
  Eigen::Matrix<double, 4, 2> c;
  c << 0, 0, 1, 0, 1, 1, 0, 1;
  return c;
}

bool convex_quad(const Eigen::Matrix<double, 4, 2>& q) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector2d a = q.row((i + 1) % 4) - q.row(i);
    const Eigen::Vector2d b = q.row((i + 2) % 4) - q.row((i + 1) % 4);
    const double cross = a.x() * b.y() - a.y() * b.x();
    if (cross == 0.0) return false;  // collinear corners: degenerate
    const int s = cross > 0.0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s,
                double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx <= 0.0 ? 0.0 : d / mx;
  if (d <= 0.0) {
    h = 0.0;
    return;
  }
  double h6;
  if (mx == r)
    h6 = std::fmod((g - b) / d + 6.0, 6.0);
  else if (mx == g)
    h6 = (b - r) / d + 2.0;
  else
    h6 = (r - g) / d + 4.0;
  h = h6 / 6.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g,
                double& b) {
  h -= std::floor(h);  // wrap into [0,1)
  const double h6 = h * 6.0;
  const int sector = std::min(5, static_cast<int>(h6));
  const double f = h6 - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

void require_in_bounds(const LabeledImage& img, const char* what) {
  for (const BBox& b : img.boxes) {
    b.require_valid(what);
    if (b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > img.image.width ||
        b.y_max > img.image.height)
      throw ArgumentError(std::string(what) + ": box outside the raster");
  }
}

}  // namespace

LabeledImage rotate(const LabeledImage& img, double angle_deg) {
  require_in_bounds(img, "rotate");
  if (img.image.empty()) throw ArgumentError("rotate: empty image");
  const double theta = angle_deg * M_PI / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const Eigen::Vector2d center((img.image.width - 1) / 2.0,
                               (img.image.height - 1) / 2.0);
  Eigen::Matrix2d fwd;
  fwd << c, -s, s, c;
  const Eigen::Matrix2d inv = fwd.transpose();

  LabeledImage out;
  out.image = warp(img.image, [&](int x, int y) {
    return Eigen::Vector2d(inv * (Eigen::Vector2d(x, y) - center) + center);
  });
  out.boxes = transform_boxes(
      img.boxes,
      [&](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(fwd * (p - center) + center);
      },
      img.image.width, img.image.height, 0.0, nullptr);
  return out;
}

Eigen::Matrix3d homography(const Eigen::Matrix<double, 4, 2>& src,
                           const Eigen::Matrix<double, 4, 2>& dst) {
  Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> rhs;
  for (int k = 0; k < 4; ++k) {
    const double x = src(k, 0), y = src(k, 1);
    const double gx = dst(k, 0), gy = dst(k, 1);
    a.row(2 * k) << x, y, 1, 0, 0, 0, -gx * x, -gx * y;
    a.row(2 * k + 1) << 0, 0, 0, x, y, 1, -gy * x, -gy * y;
    rhs(2 * k) = gx;
    rhs(2 * k + 1) = gy;
  }
  const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 8, 8>> qr(a);
  if (qr.rank() < 8)
    throw DomainError("homography: degenerate point correspondence");
  const Eigen::Matrix<double, 8, 1> h = qr.solve(rhs);
  Eigen::Matrix3d m;
  m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return m;
}

Eigen::Vector2d apply_homography(const Eigen::Matrix3d& h,
                                 const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(p.x(), p.y(), 1.0);
  if (q.z() == 0.0) throw DomainError("homography: point maps to infinity");
  return Eigen::Vector2d(q.x() / q.z(), q.y() / q.z());
}

LabeledImage perspective(const LabeledImage& img, const CornerOffsets& offsets,
                         AugmentStats* stats) {
  require_in_bounds(img, "perspective");
  if (img.image.width < 2 || img.image.height < 2)
    throw ArgumentError("perspective: image must be at least 2x2");

  const Eigen::Matrix<double, 4, 2> src = unit_corners();
  const Eigen::Matrix<double, 4, 2> dst = src + offsets;
  if (!convex_quad(dst)) {
    if (stats) ++stats->perspective_rejected;
    return img;
  }
  const Eigen::Matrix3d h = homography(src, dst);
  const Eigen::Matrix3d hinv = h.inverse();
  const double sx = img.image.width - 1.0;
  const double sy = img.image.height - 1.0;

  LabeledImage out;
  out.image = warp(img.image, [&](int x, int y) {
    const Eigen::Vector2d u = apply_homography(hinv, {x / sx, y / sy});
    return Eigen::Vector2d(u.x() * sx, u.y() * sy);
  });
  out.boxes = transform_boxes(
      img.boxes,
      [&](const Eigen::Vector2d& p) {
        const Eigen::Vector2d u =
            apply_homography(h, {p.x() / sx, p.y() / sy});
        return Eigen::Vector2d(u.x() * sx, u.y() * sy);
      },
      img.image.width, img.image.height, 0.0, nullptr);
  return out;
}

LabeledImage hsv_jitter(const LabeledImage& img, double gain_h, double gain_s,
                        double gain_v) {
  require_in_bounds(img, "hsv_jitter");
  LabeledImage out = img;
  ImageU8& raster = out.image;
  for (int y = 0; y < raster.height; ++y) {
    for (int x = 0; x < raster.width; ++x) {
      if (raster.channels == 1) {
        const double v = raster.at(x, y) / 255.0;
        raster.at(x, y) =
            quantize(std::clamp(v * (1.0 + gain_v), 0.0, 1.0) * 255.0);
        continue;
      }
      const double r = raster.at(x, y, 0) / 255.0;
      const double g = raster.at(x, y, 1) / 255.0;
      const double b = raster.at(x, y, 2) / 255.0;
      double h, s, v;
      rgb_to_hsv(r, g, b, h, s, v);
      h += gain_h;
      s = std::clamp(s * (1.0 + gain_s), 0.0, 1.0);
      v = std::clamp(v * (1.0 + gain_v), 0.0, 1.0);
      double nr, ng, nb;
      hsv_to_rgb(h, s, v, nr, ng, nb);
      raster.at(x, y, 0) = quantize(nr * 255.0);
      raster.at(x, y, 1) = quantize(ng * 255.0);
      raster.at(x, y, 2) = quantize(nb * 255.0);
    }
  }
  return out;
}

LabeledImage translate_scale(const LabeledImage& img, double dx, double dy,
                             double zoom, AugmentStats* stats) {
  require_in_bounds(img, "translate_scale");
  if (img.image.empty()) throw ArgumentError("translate_scale: empty image");
  if (zoom <= 0.0) throw ArgumentError("translate_scale: zoom must be > 0");
  const Eigen::Vector2d center((img.image.width - 1) / 2.0,
                               (img.image.height - 1) / 2.0);
  const Eigen::Vector2d shift(dx * img.image.width, dy * img.image.height);

  LabeledImage out;
  out.image = warp(img.image, [&](int x, int y) {
    return Eigen::Vector2d((Eigen::Vector2d(x, y) - center - shift) / zoom +
                           center);
  });
  long* dropped = stats ? &stats->boxes_dropped : nullptr;
  out.boxes = transform_boxes(
      img.boxes,
      [&](const Eigen::Vector2d& p) {
        return Eigen::Vector2d(zoom * (p - center) + center + shift);
      },
      img.image.width, img.image.height, 4.0, dropped);
  return out;
}

LabeledImage mosaic(const std::vector<LabeledImage>& inputs, int out_w,
                    int out_h) {
  if (inputs.size() != 4)
    throw ArgumentError("mosaic: exactly 4 inputs required, got " +
                        std::to_string(inputs.size()));
  if (out_w < 2 || out_h < 2 || out_w % 2 != 0 || out_h % 2 != 0)
    throw ArgumentError("mosaic: output dimensions must be positive and even");
  const int channels = inputs[0].image.channels;
  for (const auto& in : inputs) {
    require_in_bounds(in, "mosaic");
    if (in.image.empty()) throw ArgumentError("mosaic: empty input image");
    if (in.image.channels != channels)
      throw ArgumentError("mosaic: inputs must share a channel count");
  }

  const int half_w = out_w / 2, half_h = out_h / 2;
  LabeledImage out;
  out.image = ImageU8(out_w, out_h, channels);
  for (int k = 0; k < 4; ++k) {
    const auto& in = inputs[static_cast<std::size_t>(k)];
    const ImageU8 tile = resize_bilinear(in.image, half_w, half_h);
    const int ox = (k % 2) * half_w;
    const int oy = (k / 2) * half_h;
    for (int y = 0; y < half_h; ++y)
      for (int x = 0; x < half_w; ++x)
        for (int c = 0; c < channels; ++c)
          out.image.at(ox + x, oy + y, c) = tile.at(x, y, c);
    const double sx = static_cast<double>(half_w) / in.image.width;
    const double sy = static_cast<double>(half_h) / in.image.height;
    for (BBox b : in.boxes) {
      b.x_min = b.x_min * sx + ox;
      b.x_max = b.x_max * sx + ox;
      b.y_min = b.y_min * sy + oy;
      b.y_max = b.y_max * sy + oy;
      out.boxes.push_back(std::move(b));
    }
  }
  return out;
}

LabeledImage sample_pipeline(const std::vector<LabeledImage>& inputs,
                             const AugmentConfig& config, AugmentStats* stats,
                             DrawnParams* drawn) {
  if (inputs.empty()) throw ArgumentError("sample_pipeline: no inputs");
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("sample_pipeline: ") + what);
  };
  require(config.rotation_deg >= 0.0, "rotation_deg must be >= 0");
  require(config.hsv_h >= 0.0 && config.hsv_s >= 0.0 && config.hsv_v >= 0.0,
          "hsv magnitudes must be >= 0");
  require(config.translate >= 0.0, "translate must be >= 0");
  require(config.scale >= 0.0 && config.scale < 1.0,
          "scale must be in [0, 1) so zoom stays positive");
  require(config.mosaic_prob >= 0.0 && config.mosaic_prob <= 1.0,
          "mosaic_prob must be in [0, 1]");
  require(config.perspective_jitter >= 0.0,
          "perspective_jitter must be >= 0");

  // Fixed draw order; every draw is consumed on every call so the stream
  // shape never depends on the config or input count.
  SplitMix64 rng(config.seed);
  DrawnParams local;
  DrawnParams& d = drawn ? *drawn : local;
  d.mosaic_draw = rng.next_double();
  d.angle_deg = rng.uniform(-config.rotation_deg, config.rotation_deg);
  for (int k = 0; k < 4; ++k) {
    d.offsets(k, 0) =
        rng.uniform(-config.perspective_jitter, config.perspective_jitter);
    d.offsets(k, 1) =
        rng.uniform(-config.perspective_jitter, config.perspective_jitter);
  }
  d.gain_h = rng.uniform(-config.hsv_h, config.hsv_h);
  d.gain_s = rng.uniform(-config.hsv_s, config.hsv_s);
  d.gain_v = rng.uniform(-config.hsv_v, config.hsv_v);
  d.dx = rng.uniform(-config.translate, config.translate);
  d.dy = rng.uniform(-config.translate, config.translate);
  d.zoom = rng.uniform(1.0 - config.scale, 1.0 + config.scale);

  const int even_w = inputs[0].image.width - inputs[0].image.width % 2;
  const int even_h = inputs[0].image.height - inputs[0].image.height % 2;
  d.mosaic_applied = d.mosaic_draw < config.mosaic_prob &&
                     inputs.size() >= 4 && even_w >= 2 && even_h >= 2;

  LabeledImage current =
      d.mosaic_applied
          ? mosaic({inputs[0], inputs[1], inputs[2], inputs[3]}, even_w, even_h)
          : inputs[0];
  current = rotate(current, d.angle_deg);
  current = perspective(current, d.offsets, stats);
  current = hsv_jitter(current, d.gain_h, d.gain_s, d.gain_v);
  current = translate_scale(current, d.dx, d.dy, d.zoom, stats);
  return current;
}

}  // namespace plate::augment
