#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "plate/image.hpp"
#include "plate/rng.hpp"

using plate::GrayImage;
using plate::ImageU8;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

// Straight-line reference for the centre-aligned bilinear mapping, written
// against the definition rather than the library code.
double reference_bilinear(const GrayImage& src, int dst_w, int dst_h, int x,
                          int y) {
  const double sx = (x + 0.5) * (static_cast<double>(src.cols()) / dst_w) - 0.5;
  const double sy = (y + 0.5) * (static_cast<double>(src.rows()) / dst_h) - 0.5;
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  auto clampi = [](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
  const int xa = clampi(x0, static_cast<int>(src.cols()) - 1);
  const int xb = clampi(x0 + 1, static_cast<int>(src.cols()) - 1);
  const int ya = clampi(y0, static_cast<int>(src.rows()) - 1);
  const int yb = clampi(y0 + 1, static_cast<int>(src.rows()) - 1);
  return (1 - fy) * ((1 - fx) * src(ya, xa) + fx * src(ya, xb)) +
         fy * ((1 - fx) * src(yb, xa) + fx * src(yb, xb));
}

}  // namespace

TEST_CASE("P5 round trip preserves every byte") {
  ImageU8 img(7, 5, 1);
  plate::SplitMix64 rng(1);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
  const auto path = temp_file("plate_test_p5.pgm");
  plate::write_netpbm(img, path.string());
  const ImageU8 back = plate::read_netpbm(path.string());
  CHECK(back == img);
  std::filesystem::remove(path);
}

TEST_CASE("P6 round trip preserves every byte") {
  ImageU8 img(4, 3, 3);
  plate::SplitMix64 rng(2);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
  const auto path = temp_file("plate_test_p6.ppm");
  plate::write_netpbm(img, path.string());
  const ImageU8 back = plate::read_netpbm(path.string());
  CHECK(back == img);
  std::filesystem::remove(path);
}

TEST_CASE("reader accepts comments and arbitrary whitespace in the header") {
  const auto path = temp_file("plate_test_comment.pgm");
  std::ofstream out(path, std::ios::binary);
  out << "P5\n# a comment line\n 2 # trailing\n2\n255\n";
  out.write("\x01\x02\x03\x04", 4);
  out.close();
  const ImageU8 img = plate::read_netpbm(path.string());
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.at(0, 0) == 1);
  CHECK(img.at(1, 1) == 4);
  std::filesystem::remove(path);
}

TEST_CASE("reader rejects bad magic, maxval, and truncation") {
  const auto path = temp_file("plate_test_bad.pgm");
  auto write_bytes = [&](const std::string& s) {
    std::ofstream out(path, std::ios::binary);
    out << s;
  };
  write_bytes("P4\n2 2\n255\n\x01\x02\x03\x04");
  CHECK_THROWS_AS((void)plate::read_netpbm(path.string()), plate::FormatError);
  write_bytes("P5\n2 2\n65535\n\x01\x02\x03\x04");
  CHECK_THROWS_AS((void)plate::read_netpbm(path.string()), plate::FormatError);
  write_bytes("P5\n2 2\n255\n\x01\x02");  // short payload
  CHECK_THROWS_AS((void)plate::read_netpbm(path.string()), plate::FormatError);
  CHECK_THROWS_AS((void)plate::read_netpbm("/nonexistent/nope.pgm"),
                  plate::IoError);
  std::filesystem::remove(path);
}

TEST_CASE("to_gray uses the Rec. 601 weights for RGB") {
  ImageU8 img(2, 1, 3);
  img.at(0, 0, 0) = 255;  // pure red
  img.at(1, 0, 1) = 255;  // pure green
  const GrayImage g = plate::to_gray(img);
  CHECK(g(0, 0) == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(g(0, 1) == doctest::Approx(0.587).epsilon(1e-12));

  ImageU8 mono(1, 1, 1, 128);
  CHECK(plate::to_gray(mono)(0, 0) == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("to_u8 clamps and rounds") {
  GrayImage g(1, 4);
  g << -0.2, 0.0, 0.5004, 1.7;
  const ImageU8 u = plate::to_u8(g);
  CHECK(u.at(0, 0) == 0);
  CHECK(u.at(1, 0) == 0);
  CHECK(u.at(2, 0) == 128);  // 0.5004 * 255 = 127.6 -> 128
  CHECK(u.at(3, 0) == 255);
}

TEST_CASE("bilinear resize to the same size is the identity") {
  plate::SplitMix64 rng(3);
  GrayImage g(6, 9);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 9; ++c) g(r, c) = rng.next_double();
  const GrayImage same = plate::resize_bilinear(g, 9, 6);
  CHECK((same - g).cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("bilinear resize matches the per-pixel reference") {
  plate::SplitMix64 rng(4);
  GrayImage g(5, 8);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 8; ++c) g(r, c) = rng.next_double();
  for (const auto& [w, h] : {std::pair{16, 10}, {3, 2}, {8, 5}, {11, 7}}) {
    const GrayImage out = plate::resize_bilinear(g, w, h);
    REQUIRE(out.cols() == w);
    REQUIRE(out.rows() == h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        CHECK(out(y, x) ==
              doctest::Approx(reference_bilinear(g, w, h, x, y)).epsilon(1e-12));
  }
}

TEST_CASE("u8 resize agrees with gray resize channel by channel") {
  ImageU8 img(10, 6, 3);
  plate::SplitMix64 rng(5);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
  const ImageU8 small = plate::resize_bilinear(img, 5, 3);
  REQUIRE(small.width == 5);
  REQUIRE(small.height == 3);
  REQUIRE(small.channels == 3);
  for (int c = 0; c < 3; ++c) {
    GrayImage chan(6, 10);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 10; ++x) chan(y, x) = img.at(x, y, c) / 255.0;
    const GrayImage ref = plate::resize_bilinear(chan, 5, 3);
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 5; ++x) {
        const int expected =
            static_cast<int>(std::lround(std::clamp(ref(y, x), 0.0, 1.0) * 255.0));
        CHECK(static_cast<int>(small.at(x, y, c)) == expected);
      }
  }
}

TEST_CASE("to_strip resizes to 32 x 128 and min-max normalizes") {
  plate::SplitMix64 rng(6);
  GrayImage g(40, 160);
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 160; ++c) g(r, c) = 0.2 + 0.6 * rng.next_double();
  const GrayImage strip = plate::to_strip(g);
  REQUIRE(strip.rows() == plate::kStripHeight);
  REQUIRE(strip.cols() == plate::kStripWidth);
  CHECK(strip.minCoeff() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(strip.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("to_strip maps a flat image to zeros") {
  const GrayImage flat = GrayImage::Constant(32, 128, 0.75);
  const GrayImage strip = plate::to_strip(flat);
  CHECK(strip.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("to_strip keeps an already-sized strip's shape") {
  GrayImage g = GrayImage::Zero(32, 128);
  g(10, 20) = 0.5;
  g(5, 7) = 1.0;
  const GrayImage strip = plate::to_strip(g);
  CHECK(strip(10, 20) == doctest::Approx(0.5));
  CHECK(strip(5, 7) == doctest::Approx(1.0));
  CHECK(strip(0, 0) == 0.0);
}
