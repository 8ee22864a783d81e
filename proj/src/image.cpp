#include "plate/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace plate {

namespace {

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      while ((c = in.peek()) != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(in.get()));
      }
      return tok;
    }
  }
  return tok;
}

int parse_dim(const std::string& tok, const std::string& path) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError(path + ": bad netpbm header field '" + tok + "'");
  }
}

}  // namespace

ImageU8 read_netpbm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic = next_token(in);
  int channels;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError(path + ": expected P5 or P6, got '" + magic + "'");
  }
  int w = parse_dim(next_token(in), path);
  int h = parse_dim(next_token(in), path);
  int maxval = parse_dim(next_token(in), path);
  if (maxval != 255) throw FormatError(path + ": only maxval 255 supported");
  in.get();  // single whitespace after maxval
  ImageU8 img(w, h, channels);
  in.read(reinterpret_cast<char*>(img.data.data()),
          static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
    throw FormatError(path + ": truncated pixel data");
  return img;
}

void write_netpbm(const ImageU8& img, const std::string& path) {
  if (img.empty()) throw ArgumentError("write_netpbm: empty image");
  if (img.channels != 1 && img.channels != 3)
    throw ArgumentError("write_netpbm: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  char header[64];
  int n = std::snprintf(header, sizeof(header), "%s\n%d %d\n255\n",
                        img.channels == 1 ? "P5" : "P6", img.width, img.height);
  out.write(header, n);
  out.write(reinterpret_cast<const char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
  if (!out) throw IoError("short write to " + path);
}

GrayImage to_gray(const ImageU8& img) {
  GrayImage out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 1) {
        out(y, x) = img.at(x, y) / 255.0;
      } else {
        // Rec.601 luma weights.
        out(y, x) = (0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                     0.114 * img.at(x, y, 2)) /
                    255.0;
      }
    }
  }
  return out;
}

ImageU8 to_u8(const GrayImage& img) {
  ImageU8 out(static_cast<int>(img.cols()), static_cast<int>(img.rows()), 1);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = static_cast<std::uint8_t>(
          std::lround(std::clamp(img(y, x), 0.0, 1.0) * 255.0));
  return out;
}

namespace {

// Shared bilinear kernel: sample src at continuous (sx, sy), clamped.
template <class Fetch>
double bilerp(double sx, double sy, int w, int h, Fetch fetch) {
  sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
  int x0 = static_cast<int>(sx);
  int y0 = static_cast<int>(sy);
  int x1 = std::min(x0 + 1, w - 1);
  int y1 = std::min(y0 + 1, h - 1);
  double fx = sx - x0, fy = sy - y0;
  return (1 - fx) * (1 - fy) * fetch(x0, y0) + fx * (1 - fy) * fetch(x1, y0) +
         (1 - fx) * fy * fetch(x0, y1) + fx * fy * fetch(x1, y1);
}

}  // namespace

ImageU8 resize_bilinear(const ImageU8& img, int new_w, int new_h) {
  if (img.empty() || new_w <= 0 || new_h <= 0)
    throw ArgumentError("resize_bilinear: empty image or non-positive size");
  // Route through the normalized-double kernel so u8 and gray resizes agree
  // to the last rounding decision.
  ImageU8 out(new_w, new_h, img.channels);
  GrayImage chan(img.height, img.width);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) chan(y, x) = img.at(x, y, c) / 255.0;
    const GrayImage r = resize_bilinear(chan, new_w, new_h);
    for (int y = 0; y < new_h; ++y)
      for (int x = 0; x < new_w; ++x)
        out.at(x, y, c) = static_cast<std::uint8_t>(
            std::lround(std::clamp(r(y, x), 0.0, 1.0) * 255.0));
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int new_w, int new_h) {
  if (img.size() == 0 || new_w <= 0 || new_h <= 0)
    throw ArgumentError("resize_bilinear: empty image or non-positive size");
  GrayImage out(new_h, new_w);
  const double sx_scale = static_cast<double>(img.cols()) / new_w;
  const double sy_scale = static_cast<double>(img.rows()) / new_h;
  for (int y = 0; y < new_h; ++y) {
    for (int x = 0; x < new_w; ++x) {
      double sx = (x + 0.5) * sx_scale - 0.5;
      double sy = (y + 0.5) * sy_scale - 0.5;
      out(y, x) = bilerp(sx, sy, static_cast<int>(img.cols()),
                         static_cast<int>(img.rows()),
                         [&](int px, int py) { return img(py, px); });
    }
  }
  return out;
}

GrayImage to_strip(const GrayImage& img) {
  if (img.size() == 0) throw ArgumentError("to_strip: empty image");
  GrayImage s = (img.rows() == kStripHeight && img.cols() == kStripWidth)
                    ? img
                    : resize_bilinear(img, kStripWidth, kStripHeight);
  const double lo = s.minCoeff();
  const double hi = s.maxCoeff();
  if (hi - lo < 1e-12) return GrayImage::Zero(kStripHeight, kStripWidth);
  return (s.array() - lo) / (hi - lo);
}

}  // namespace plate
