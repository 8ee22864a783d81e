#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "plate/errors.hpp"
#include "plate/geometry.hpp"

namespace plate {

/// 8-bit raster, 1 (grayscale) or 3 (RGB) interleaved channels, row-major.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> data;

  ImageU8() = default;
  ImageU8(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool empty() const { return width <= 0 || height <= 0; }

  bool operator==(const ImageU8&) const = default;
};

/// Grayscale raster with values in [0,1]; rows are image rows.
/// The recognizer input strip is one of these at exactly 32 x 128.
using GrayImage = Eigen::MatrixXd;

inline constexpr int kStripHeight = 32;
inline constexpr int kStripWidth = 128;

/// Binary netpbm: P5 for 1 channel, P6 for 3, maxval 255.
ImageU8 read_netpbm(const std::string& path);
void write_netpbm(const ImageU8& img, const std::string& path);

/// [0,1] grayscale <-> 8-bit conversions.
GrayImage to_gray(const ImageU8& img);
ImageU8 to_u8(const GrayImage& img);

/// Bilinear resize (per channel); also used for strip preprocessing.
ImageU8 resize_bilinear(const ImageU8& img, int new_w, int new_h);
GrayImage resize_bilinear(const GrayImage& img, int new_w, int new_h);

/// Any grayscale raster -> canonical 32 x 128 strip: bilinear resize then
/// per-strip min-max normalization (flat images map to all zeros).
GrayImage to_strip(const GrayImage& img);

}  // namespace plate
