#include "plate/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "plate/alphabet.hpp"

namespace plate::synth {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kCapTarget = 24;  // rendered cap height on a 32 px strip
constexpr int kGlyphGap = 2;
constexpr double kSpaceAdvance = 8.0;  // at cap height 24
constexpr double kDashAdvance = 6.0;
constexpr double kBorderInk = 0.08;

/// Nearest-neighbor mask scaling; binary masks stay binary.
GlyphBitmap scale_glyph(const GlyphBitmap& g, double scale) {
  if (scale == 1.0) return g;
  GlyphBitmap out;
  out.height = kCapTarget;
  out.width = std::max(1, static_cast<int>(std::lround(g.width * scale)));
  out.bits.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  for (int y = 0; y < out.height; ++y) {
    int sy = std::min(g.height - 1,
                      static_cast<int>((y + 0.5) * g.height / out.height));
    for (int x = 0; x < out.width; ++x) {
      int sx = std::min(g.width - 1,
                        static_cast<int>((x + 0.5) * g.width / out.width));
      out.bits[static_cast<std::size_t>(y) * out.width + x] = g.at(sx, sy);
    }
  }
  return out;
}

/// Smooth scene texture: bilinear gradient between four corner intensities
/// plus a gentle sinusoid. Local variance stays far below the tile-variance
/// threshold the demo detector uses, so bare background never fires it.
GrayImage textured_background(int w, int h, SplitMix64& rng) {
  const double c00 = rng.uniform(0.35, 0.60);
  const double c10 = rng.uniform(0.35, 0.60);
  const double c01 = rng.uniform(0.35, 0.60);
  const double c11 = rng.uniform(0.35, 0.60);
  const double amp = rng.uniform(0.010, 0.030);
  const double fx = rng.uniform(0.5, 2.0) * 2.0 * M_PI / w;
  const double fy = rng.uniform(0.5, 2.0) * 2.0 * M_PI / h;
  const double px = rng.uniform(0.0, 2.0 * M_PI);
  const double py = rng.uniform(0.0, 2.0 * M_PI);

  GrayImage bg(h, w);
  for (int y = 0; y < h; ++y) {
    const double v = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    for (int x = 0; x < w; ++x) {
      const double u = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      double val = (1 - u) * (1 - v) * c00 + u * (1 - v) * c10 +
                   (1 - u) * v * c01 + u * v * c11;
      val += amp * std::sin(fx * x + px) * std::sin(fy * y + py);
      bg(y, x) = std::clamp(val, 0.0, 1.0);
    }
  }
  return bg;
}

struct Element {
  const GlyphBitmap* glyph = nullptr;  // null: separator (space or dash)
  bool dash = false;
  int advance = 0;
};

}  // namespace

void PlatePattern::validate() const {
  if (tmpl.empty() || tmpl.size() > 8)
    throw ArgumentError("pattern '" + tmpl + "': need 1..8 slots");
  if (tmpl.find('L') == std::string::npos &&
      tmpl.find('N') == std::string::npos)
    throw ArgumentError("pattern '" + tmpl + "': no letter or digit slot");
}

const GlyphBitmap& FontProfile::glyph(char symbol) const {
  auto it = glyphs.find(symbol);
  if (it == glyphs.end())
    throw ArgumentError("font '" + name + "': no glyph for '" +
                        std::string(1, symbol) + "'");
  return it->second;
}

FontProfile load_font(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_font: cannot open " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_font: " + path + ": " + e.what());
  }

  FontProfile font;
  try {
    font.name = doc.at("name").get<std::string>();
    font.cap_height = doc.at("cap_height").get<int>();
    if (font.name.empty()) throw FormatError("load_font: empty font name");
    if (font.cap_height < 7)
      throw FormatError("load_font: cap height below the 5x7 minimum");
    for (const auto& [key, val] : doc.at("glyphs").items()) {
      if (key.size() != 1)
        throw FormatError("load_font: glyph key '" + key +
                          "' is not a single symbol");
      GlyphBitmap g;
      g.width = val.at("width").get<int>();
      g.height = font.cap_height;
      if (g.width < 5)
        throw FormatError("load_font: glyph '" + key +
                          "' narrower than the 5x7 minimum");
      const auto& rows = val.at("rows");
      if (static_cast<int>(rows.size()) != font.cap_height)
        throw FormatError("load_font: glyph '" + key + "' has " +
                          std::to_string(rows.size()) + " rows, want cap " +
                          std::to_string(font.cap_height));
      g.bits.reserve(static_cast<std::size_t>(g.width) * g.height);
      for (const auto& row : rows) {
        int sum = 0;
        std::uint8_t value = 0;  // runs start with background
        for (const auto& run : row) {
          const int len = run.get<int>();
          if (len < 0)
            throw FormatError("load_font: negative run in glyph '" + key + "'");
          for (int i = 0; i < len; ++i) g.bits.push_back(value);
          sum += len;
          value = value ? 0 : 1;
        }
        if (sum != g.width)
          throw FormatError("load_font: glyph '" + key +
                            "' rows do not sum to the width");
      }
      if (std::all_of(g.bits.begin(), g.bits.end(),
                      [](std::uint8_t b) { return b == 0; }))
        throw FormatError("load_font: glyph '" + key + "' has no set bits");
      font.glyphs[key[0]] = std::move(g);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("load_font: " + path + ": " + e.what());
  }

  const Alphabet alphabet;
  for (char c : alphabet.symbols())
    if (!font.glyphs.count(c))
      throw FormatError("load_font: " + path + ": missing glyph for '" +
                        std::string(1, c) + "'");
  return font;
}

void save_font(const FontProfile& font, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_font: cannot open " + path);
  out << "{\n  \"name\": " << ordered_json(font.name).dump()
      << ",\n  \"cap_height\": " << font.cap_height << ",\n  \"glyphs\": {\n";
  std::size_t i = 0;
  for (const auto& [symbol, g] : font.glyphs) {
    out << "    " << ordered_json(std::string(1, symbol)).dump()
        << ": {\"width\": " << g.width << ", \"rows\": [";
    for (int y = 0; y < g.height; ++y) {
      if (y) out << ",";
      out << "[";
      int run = 0;
      std::uint8_t value = 0;
      bool first = true;
      for (int x = 0; x <= g.width; ++x) {
        const std::uint8_t b = x < g.width ? g.bits[static_cast<std::size_t>(
                                                 y) * g.width + x]
                                           : static_cast<std::uint8_t>(2);
        if (b == value) {
          ++run;
        } else {
          if (!first) out << ",";
          out << run;
          first = false;
          value = b == 2 ? value : b;
          run = 1;
        }
      }
      out << "]";
    }
    out << "]}" << (++i < font.glyphs.size() ? "," : "") << "\n";
  }
  out << "  }\n}\n";
  if (!out) throw IoError("save_font: write failed for " + path);
}

PlatePattern default_pattern(const std::string& tag) {
  if (tag == "ontario") return {"LLLLNNN", tag};
  if (tag == "california") return {"NLLLNNN", tag};
  if (tag == "ufpr") return {"LLLNNNN", tag};
  return {"LLL NNN", tag};  // quebec, newyork, and the fallback
}

std::vector<FontSpec> default_fonts(const std::string& dir) {
  static const char* kNames[] = {"california", "newyork", "ontario", "quebec",
                                 "ufpr"};
  std::vector<FontSpec> out;
  for (const char* name : kNames)
    out.push_back({load_font(dir + "/" + name + ".json"),
                   default_pattern(name)});
  return out;
}

std::string sample_string(const PlatePattern& pattern, SplitMix64& rng) {
  pattern.validate();
  std::string out;
  out.reserve(pattern.tmpl.size());
  for (char slot : pattern.tmpl) {
    if (slot == 'L')
      out.push_back(static_cast<char>('A' + rng.below(26)));
    else if (slot == 'N')
      out.push_back(static_cast<char>('0' + rng.below(10)));
    else
      out.push_back(slot);
  }
  return out;
}

StripSample render_strip(const std::string& text, const FontProfile& font,
                         SplitMix64& rng, int canvas_w, int canvas_h) {
  if (text.empty()) throw RenderError("render_strip: empty text");
  // +2 rows so the vertical jitter cannot leave the canvas.
  if (canvas_w < 8 || canvas_h < kCapTarget + 2)
    throw ArgumentError("render_strip: canvas below 8x26");

  const double scale = static_cast<double>(kCapTarget) / font.cap_height;
  std::vector<Element> elements;
  std::vector<GlyphBitmap> scaled;  // owns non-unit-scale masks
  scaled.reserve(text.size());
  int total = 0;
  for (char raw : text) {
    const char c =
        static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
    Element e;
    if (c == ' ') {
      e.advance = static_cast<int>(std::lround(kSpaceAdvance * scale));
    } else if (c == '-') {
      e.dash = true;
      e.advance = static_cast<int>(std::lround(kDashAdvance * scale));
    } else {
      if (!font.glyphs.count(c))
        throw EncodingError("render_strip: font '" + font.name +
                            "' has no glyph for '" + std::string(1, c) + "'");
      scaled.push_back(scale_glyph(font.glyph(c), scale));
      e.glyph = &scaled.back();
      e.advance = scaled.back().width;
    }
    if (!elements.empty()) total += kGlyphGap;
    total += e.advance;
    elements.push_back(e);
  }
  // Leave 1 px on each side for the jitter.
  if (total > canvas_w - 2)
    throw RenderError("render_strip: '" + text + "' needs " +
                      std::to_string(total) + " px, canvas " +
                      std::to_string(canvas_w) + " is too narrow");

  const double bg = rng.uniform(0.7, 1.0);
  const double ink = rng.uniform(0.0, 0.3);
  const int dx = static_cast<int>(rng.below(3)) - 1;

  GrayImage strip = GrayImage::Constant(canvas_h, canvas_w, bg);
  int x = (canvas_w - total) / 2 + dx;
  const int y_base = (canvas_h - kCapTarget) / 2;
  for (const Element& e : elements) {
    const int dy = static_cast<int>(rng.below(3)) - 1;
    const int y0 = y_base + dy;
    if (e.glyph) {
      for (int gy = 0; gy < e.glyph->height; ++gy)
        for (int gx = 0; gx < e.glyph->width; ++gx)
          if (e.glyph->at(gx, gy)) strip(y0 + gy, x + gx) = ink;
    } else if (e.dash) {
      const int mid = y0 + kCapTarget / 2;
      for (int gy = mid - 1; gy <= mid + 1; ++gy)
        for (int gx = 0; gx < e.advance; ++gx) strip(gy, x + gx) = ink;
    }
    x += e.advance + kGlyphGap;
  }

  return {std::move(strip), io::canonical_plate(text)};
}

augment::LabeledImage render_scene(const std::string& text,
                                   const FontProfile& font, int scene_w,
                                   int scene_h, const BBox& placement,
                                   SplitMix64& rng) {
  if (scene_w < 16 || scene_h < 16)
    throw ArgumentError("render_scene: scene below 16x16");
  const int bx = static_cast<int>(std::lround(placement.x_min));
  const int by = static_cast<int>(std::lround(placement.y_min));
  const int bw = static_cast<int>(std::lround(placement.width()));
  const int bh = static_cast<int>(std::lround(placement.height()));
  if (bw < 8 || bh < 8)
    throw ArgumentError("render_scene: plate box below 8x8");
  if (bx < 0 || by < 0 || bx + bw > scene_w || by + bh > scene_h)
    throw ArgumentError("render_scene: plate box outside the scene");

  GrayImage scene = textured_background(scene_w, scene_h, rng);
  StripSample strip = render_strip(text, font, rng);
  GrayImage plate = (bw == strip.image.cols() && bh == strip.image.rows())
                        ? std::move(strip.image)
                        : resize_bilinear(strip.image, bw, bh);
  scene.block(by, bx, bh, bw) = plate;
  // Dark frame just inside the box: keeps the plate one connected blob for
  // tile-based detectors and mirrors real plate borders.
  scene.block(by, bx, 1, bw).setConstant(kBorderInk);
  scene.block(by + bh - 1, bx, 1, bw).setConstant(kBorderInk);
  scene.block(by, bx, bh, 1).setConstant(kBorderInk);
  scene.block(by, bx + bw - 1, bh, 1).setConstant(kBorderInk);

  augment::LabeledImage out;
  out.image = to_u8(scene);
  BBox box = placement;
  box.score = 1.0;
  box.label = strip.label;
  out.boxes.push_back(box);
  return out;
}

augment::LabeledImage background_scene(int scene_w, int scene_h,
                                       SplitMix64& rng) {
  if (scene_w < 16 || scene_h < 16)
    throw ArgumentError("background_scene: scene below 16x16");
  augment::LabeledImage out;
  out.image = to_u8(textured_background(scene_w, scene_h, rng));
  return out;
}

augment::LabeledImage sample_scene(const FontSpec& spec, int scene_w,
                                   int scene_h, SplitMix64& rng) {
  if (scene_w < kStripWidth + 4 || scene_h < kStripHeight + 4)
    throw ArgumentError("sample_scene: scene cannot fit a full-size plate");
  const std::string text = sample_string(spec.pattern, rng);
  const double scale = rng.uniform(0.7, 1.0);
  const int pw = static_cast<int>(std::lround(kStripWidth * scale));
  const int ph = static_cast<int>(std::lround(kStripHeight * scale));
  const int x = 2 + static_cast<int>(rng.below(scene_w - pw - 3));
  const int y = 2 + static_cast<int>(rng.below(scene_h - ph - 3));
  BBox box;
  box.x_min = x;
  box.y_min = y;
  box.x_max = x + pw;
  box.y_max = y + ph;
  return render_scene(text, spec.font, scene_w, scene_h, box, rng);
}

StripSample sample_strip(const std::vector<FontSpec>& fonts, SplitMix64& rng,
                         std::string* tag) {
  if (fonts.empty()) throw ArgumentError("sample_strip: no fonts");
  const FontSpec& spec = fonts[rng.below(fonts.size())];
  if (tag) *tag = spec.pattern.tag;
  const std::string text = sample_string(spec.pattern, rng);
  return render_strip(text, spec.font, rng);
}

std::vector<io::PlateRecord> generate_dataset(std::size_t n,
                                              const DatasetConfig& config) {
  if (n < 5)
    throw ArgumentError("generate_dataset: need at least 5 records, got " +
                        std::to_string(n));
  if (config.fonts.empty())
    throw ArgumentError("generate_dataset: no fonts configured");
  if (config.out_dir.empty())
    throw ArgumentError("generate_dataset: empty output directory");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(config.out_dir) / "images", ec);
  if (ec)
    throw IoError("generate_dataset: cannot create " + config.out_dir + ": " +
                  ec.message());

  std::vector<io::PlateRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng = substream(config.seed, i);
    char name[32];
    std::snprintf(name, sizeof name, "images/%05zu.pgm", i);

    io::PlateRecord rec;
    rec.image = name;
    if (config.scenes) {
      const FontSpec& spec = config.fonts[rng.below(config.fonts.size())];
      augment::LabeledImage scene =
          sample_scene(spec, config.scene_width, config.scene_height, rng);
      rec.plate = scene.boxes.front().label;
      rec.box = scene.boxes.front();
      rec.tag = spec.pattern.tag;
      write_netpbm(scene.image, config.out_dir + "/" + name);
    } else {
      StripSample strip = sample_strip(config.fonts, rng, &rec.tag);
      rec.plate = strip.label;
      rec.box.x_min = 0;
      rec.box.y_min = 0;
      rec.box.x_max = strip.image.cols();
      rec.box.y_max = strip.image.rows();
      rec.box.label = rec.plate;
      write_netpbm(to_u8(strip.image), config.out_dir + "/" + name);
    }
    records.push_back(std::move(rec));
  }

  io::assign_splits(records, io::SplitFractions{}, config.seed);
  io::Manifest manifest;
  manifest.records = records;
  io::save_manifest(manifest, config.out_dir + "/manifest.json");
  return records;
}

}  // namespace plate::synth
