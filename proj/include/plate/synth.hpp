#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "plate/augment.hpp"
#include "plate/data_io.hpp"
#include "plate/errors.hpp"
#include "plate/image.hpp"
#include "plate/rng.hpp"

namespace plate::synth {

/// Plate string template: 'L' draws a uniform letter, 'N' a uniform digit,
/// anything else is copied literally ('-' and ' ' render as separators and
/// are stripped from the canonical label).
struct PlatePattern {
  std::string tmpl;
  std::string tag;

  /// Throws ArgumentError unless the template has 1..8 slots and at least
  /// one of them is an 'L' or 'N'.
  void validate() const;
};

/// Binary glyph mask, row-major, origin top-left. Height equals the font's
/// cap height for every glyph.
struct GlyphBitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, width*height entries

  bool at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
};

/// Named glyph set covering the full 36-symbol alphabet.
/// File format: {"name": ..., "cap_height": H, "glyphs": {"A": {"width": W,
/// "rows": [[run,run,...], ...]}, ...}} where runs alternate background /
/// foreground starting with background and sum to the width.
struct FontProfile {
  std::string name;
  int cap_height = 0;
  std::map<char, GlyphBitmap> glyphs;

  const GlyphBitmap& glyph(char symbol) const;  // ArgumentError if missing
};

FontProfile load_font(const std::string& path);
void save_font(const FontProfile& font, const std::string& path);

/// A font profile plus the string pattern drawn for its jurisdiction.
struct FontSpec {
  FontProfile font;
  PlatePattern pattern;
};

/// Built-in template per jurisdiction tag (placeholders, not real formats).
/// Unknown tags fall back to "LLL NNN".
PlatePattern default_pattern(const std::string& tag);

/// Loads <dir>/{california,newyork,ontario,quebec,ufpr}.json with their
/// default patterns, in that (alphabetical) order.
std::vector<FontSpec> default_fonts(const std::string& dir);

std::string sample_string(const PlatePattern& pattern, SplitMix64& rng);

struct StripSample {
  GrayImage image;    // canvas_h x canvas_w, values in [0,1]
  std::string label;  // canonical (separators stripped)
};

/// Rasterizes text onto a light strip: glyphs scaled to cap height 24,
/// composited left to right with a 2 px gap, vertically centered. Intensities
/// are drawn per strip: background uniform in [0.7,1.0), ink in [0.0,0.3).
/// Placement jitter is +-1 px: one horizontal draw for the whole line, one
/// vertical draw per element. rng draw order: background, ink, dx, then dy
/// per element. Throws RenderError for empty text or text too wide for the
/// canvas, EncodingError for characters with no glyph.
StripSample render_strip(const std::string& text, const FontProfile& font,
                         SplitMix64& rng, int canvas_w = kStripWidth,
                         int canvas_h = kStripHeight);

/// Composites a plate strip (resized to the placement box) onto a smooth
/// textured background and frames it with a dark 1 px border. The returned
/// label holds exactly one box: the placement, with the canonical text.
/// Placement must lie inside the scene with integer-friendly size >= 8x8.
augment::LabeledImage render_scene(const std::string& text,
                                   const FontProfile& font, int scene_w,
                                   int scene_h, const BBox& placement,
                                   SplitMix64& rng);

/// A scene with no plate: just the textured background, zero boxes.
augment::LabeledImage background_scene(int scene_w, int scene_h,
                                       SplitMix64& rng);

/// Draws text from the pattern and places it at a random scale (0.7..1.0 of
/// the 128x32 strip) and position, margin 2 px. Scene must fit the largest
/// plate.
augment::LabeledImage sample_scene(const FontSpec& spec, int scene_w,
                                   int scene_h, SplitMix64& rng);

struct DatasetConfig {
  std::string out_dir;          // receives images/ and manifest.json
  std::vector<FontSpec> fonts;  // must be nonempty
  std::uint64_t seed = 0;
  bool scenes = false;          // strips by default
  int scene_width = 256;
  int scene_height = 96;
};

/// Generates n records: record i derives everything (font choice, text,
/// rendering) from substream(seed, i), so corpora are reproducible and
/// parallel-friendly. Writes images/NNNNN.pgm plus manifest.json under
/// out_dir, assigns 40/20/40 splits with the dataset seed, and returns the
/// records. Requires n >= 5 so every split is populated.
std::vector<io::PlateRecord> generate_dataset(std::size_t n,
                                              const DatasetConfig& config);

/// The in-memory equivalent of one strip-mode dataset record; used anywhere
/// a corpus is needed without touching disk. Returns the sample and the tag
/// of the font that was drawn.
StripSample sample_strip(const std::vector<FontSpec>& fonts, SplitMix64& rng,
                         std::string* tag = nullptr);

}  // namespace plate::synth
