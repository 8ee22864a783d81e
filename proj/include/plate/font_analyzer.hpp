#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "plate/alphabet.hpp"
#include "plate/errors.hpp"
#include "plate/synth.hpp"
#include "plate/text_metrics.hpp"

namespace plate::fonts {

/// Typographic description of one glyph, extracted from its bitmap after
/// normalization to a 32x48 analysis frame (aspect preserved). All positions
/// and areas are normalized to [0,1] over the glyph's tight bounding box;
/// angles are degrees in (0,90). Extraction is deterministic; a glyph simply
/// lacking a feature yields empty lists / zero flags, never an error.
struct GlyphFeatures {
  /// Stroke junctions at the very top of the glyph (e.g. the peak of 'A'),
  /// as (x,y) in glyph-box coordinates. Flat tops that span the full width
  /// or sit on a side edge are stems or bars, not apexes.
  std::vector<std::pair<double, double>> apex_positions;

  /// Heights of interior horizontal strokes spanning >= 60% of the local
  /// width ('A'/'H' bars). Terminal strokes are reported as the flags below.
  std::vector<double> crossbar_ys;

  /// Enclosed background area in the upper / lower half of the glyph box,
  /// as a fraction of the box area ('B' has both, 'U' neither).
  double counter_top = 0.0;
  double counter_bottom = 0.0;

  /// Curvature histogram: density of boundary staircase pixels per 16
  /// angular sectors around the ink centroid, normalized by ink area.
  /// Straight-edged glyphs score exactly zero everywhere.
  std::array<double, 16> bowl_signature{};

  /// Small pointed projection on the right flank (the chin of some 'G's).
  bool spur_present = false;
  std::pair<double, double> spur_location{0.0, 0.0};

  /// Terminal horizontal strokes at the top / bottom edge ('T' top, 'L'
  /// bottom, 'E' both).
  bool hstroke_top = false;
  bool hstroke_bottom = false;

  /// Length of a narrow protrusion hanging below a wide body row, as a
  /// fraction of the glyph height. Zero when the bottom is the body itself
  /// or when the "protrusion" is most of the glyph (a stem).
  double tail_clarity = 0.0;

  /// Dominant diagonal stroke angles, degrees from horizontal, folded into
  /// (0,90). 'A' contributes two, 'N' one, 'O' none.
  std::vector<double> diagonal_angles;
};

inline constexpr std::size_t kCriteria = 8;

/// Criterion order used by weights and breakdowns.
const char* criterion_name(std::size_t index);

/// Uniform weights: 1/8 for each criterion.
std::vector<double> default_weights();

GlyphFeatures extract_features(const synth::GlyphBitmap& glyph);

/// Weighted sum of the eight per-criterion similarities, each in [0,1].
/// Symmetric; pair_score(f,f) = 1. Throws ArgumentError unless weights has
/// kCriteria entries, all >= 0, summing to 1.
double pair_score(const GlyphFeatures& a, const GlyphFeatures& b,
                  const std::vector<double>& weights);
double pair_score(const GlyphFeatures& a, const GlyphFeatures& b);

/// The per-criterion similarities behind pair_score, in criterion order.
std::array<double, kCriteria> criterion_similarities(const GlyphFeatures& a,
                                                     const GlyphFeatures& b);

struct RankedPair {
  char a = 0;  // a < b in alphabet order
  char b = 0;
  double score = 0.0;
};

/// Symmetric pairwise confusability over an alphabet: unit diagonal, scores
/// in [0,1], and the per-criterion breakdown kept for every pair.
class ConfusabilityMatrix {
 public:
  explicit ConfusabilityMatrix(Alphabet alphabet, std::string font_name = "");

  const Alphabet& alphabet() const { return alphabet_; }
  const std::string& font_name() const { return font_name_; }

  double score(char a, char b) const;
  const std::array<double, kCriteria>& breakdown(char a, char b) const;

  /// Stores score and breakdown for both (a,b) and (b,a).
  void set(char a, char b, double score,
           const std::array<double, kCriteria>& breakdown);

  /// All unordered off-diagonal pairs, score descending, ties in lexicographic
  /// (a,b) order.
  std::vector<RankedPair> ranked_pairs() const;

  /// Header row/column of symbols, then the score table.
  std::string to_csv() const;

 private:
  int idx(char c) const;

  Alphabet alphabet_;
  std::string font_name_;
  Eigen::MatrixXd scores_;
  std::vector<std::array<double, kCriteria>> breakdown_;
};

/// Scores every glyph pair of the font. Throws ArgumentError naming the
/// symbol if the font lacks a glyph for some alphabet entry.
ConfusabilityMatrix confusability_matrix(const synth::FontProfile& font,
                                         const std::vector<double>& weights);
ConfusabilityMatrix confusability_matrix(const synth::FontProfile& font);

struct CorrelationResult {
  bool sufficient = false;  // false: fewer than 5 observed confusion pairs
  double rho = 0.0;         // Spearman rank correlation, in [-1,1]
  std::size_t pairs = 0;    // pairs with nonzero symmetrized counts
};

/// Spearman rank correlation with average-rank tie handling. Throws
/// ArgumentError on size mismatch or fewer than 2 points.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Rank-correlates predicted pair scores against observed substitution
/// counts (symmetrized, off-diagonal, nonzero only). Fewer than 5 such pairs
/// is not enough signal: the result is flagged insufficient instead of
/// returning a meaningless coefficient.
CorrelationResult correlate_with_empirical(const ConfusabilityMatrix& matrix,
                                           const text::ConfusionMatrix& confusion);

}  // namespace plate::fonts
