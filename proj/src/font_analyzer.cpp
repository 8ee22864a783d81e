#include "plate/font_analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace plate::fonts {
namespace {

constexpr int kFrameW = 32;
constexpr int kFrameH = 48;

struct Raster {
  int w = 0;
  int h = 0;
  std::vector<std::uint8_t> px;

  bool at(int x, int y) const {
    return x >= 0 && x < w && y >= 0 && y < h &&
           px[static_cast<std::size_t>(y) * w + x] != 0;
  }
  std::uint8_t& ref(int x, int y) {
    return px[static_cast<std::size_t>(y) * w + x];
  }
};

/// Tight-crops the ink and rescales it (nearest neighbor, aspect preserved)
/// to fit the 32x48 analysis frame. All detectors below run on this raster,
/// which is what makes features resolution-independent.
Raster normalize(const synth::GlyphBitmap& g) {
  int x0 = g.width, y0 = g.height, x1 = -1, y1 = -1;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      if (g.at(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return {};  // blank glyph: every feature stays at its default

  const int cw = x1 - x0 + 1;
  const int ch = y1 - y0 + 1;
  const double k = std::min(static_cast<double>(kFrameW) / cw,
                            static_cast<double>(kFrameH) / ch);
  Raster r;
  r.w = std::max(1, static_cast<int>(std::lround(cw * k)));
  r.h = std::max(1, static_cast<int>(std::lround(ch * k)));
  r.px.assign(static_cast<std::size_t>(r.w) * r.h, 0);
  for (int y = 0; y < r.h; ++y) {
    const int sy = y0 + std::min(ch - 1, static_cast<int>((y + 0.5) * ch / r.h));
    for (int x = 0; x < r.w; ++x) {
      const int sx =
          x0 + std::min(cw - 1, static_cast<int>((x + 0.5) * cw / r.w));
      r.ref(x, y) = g.at(sx, sy) ? 1 : 0;
    }
  }
  return r;
}

double norm_x(const Raster& r, double x) { return r.w > 1 ? x / (r.w - 1) : 0.0; }
double norm_y(const Raster& r, double y) { return r.h > 1 ? y / (r.h - 1) : 0.0; }

/// Apexes: interior maximal column intervals whose top profile reaches the
/// glyph top (within a 1-row tolerance, scaled). Intervals touching a side
/// of the box are stems or corner strokes; intervals wider than half the
/// glyph are bars. Both are excluded — an apex is a narrow interior peak.
void detect_apexes(const Raster& r, GlyphFeatures& f) {
  std::vector<int> top(r.w, r.h);
  for (int x = 0; x < r.w; ++x)
    for (int y = 0; y < r.h; ++y)
      if (r.at(x, y)) {
        top[x] = y;
        break;
      }
  const int tol = std::max(1, r.h / 24);
  int x = 0;
  while (x < r.w) {
    if (top[x] > tol) {
      ++x;
      continue;
    }
    int xe = x;
    while (xe + 1 < r.w && top[xe + 1] <= tol) ++xe;
    const bool interior = x > 0 && xe < r.w - 1;
    if (interior && xe - x + 1 <= r.w / 2) {
      int peak = *std::min_element(top.begin() + x, top.begin() + xe + 1);
      f.apex_positions.emplace_back(norm_x(r, 0.5 * (x + xe)),
                                    norm_y(r, peak));
    }
    x = xe + 1;
  }
}

/// Horizontal strokes: row bands whose longest ink run spans >= 60% of the
/// width. Bands thicker than 35% of the height are solid regions, not
/// strokes. Bands at the top/bottom 12% are terminal strokes (flags); the
/// rest are crossbars, reported by normalized center height.
void detect_bars(const Raster& r, GlyphFeatures& f) {
  std::vector<bool> marked(r.h, false);
  for (int y = 0; y < r.h; ++y) {
    int run = 0, best = 0;
    for (int x = 0; x < r.w; ++x) {
      run = r.at(x, y) ? run + 1 : 0;
      best = std::max(best, run);
    }
    marked[y] = best >= 0.6 * r.w;
  }
  int y = 0;
  while (y < r.h) {
    if (!marked[y]) {
      ++y;
      continue;
    }
    int ye = y;
    while (ye + 1 < r.h && marked[ye + 1]) ++ye;
    if (ye - y + 1 <= 0.35 * r.h) {
      if (y <= 0.12 * r.h)
        f.hstroke_top = true;
      else if (ye >= r.h - 1 - 0.12 * r.h)
        f.hstroke_bottom = true;
      else
        f.crossbar_ys.push_back(norm_y(r, 0.5 * (y + ye)));
    }
    y = ye + 1;
  }
}

/// Counters: background regions sealed off from the border (4-connected),
/// split into upper/lower-half areas as fractions of the glyph box.
void detect_counters(const Raster& r, GlyphFeatures& f) {
  std::vector<std::uint8_t> outside(r.px.size(), 0);
  std::deque<std::pair<int, int>> queue;
  auto push = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * r.w + x;
    if (!r.px[i] && !outside[i]) {
      outside[i] = 1;
      queue.emplace_back(x, y);
    }
  };
  for (int x = 0; x < r.w; ++x) {
    push(x, 0);
    push(x, r.h - 1);
  }
  for (int yy = 0; yy < r.h; ++yy) {
    push(0, yy);
    push(r.w - 1, yy);
  }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    if (x > 0) push(x - 1, y);
    if (x + 1 < r.w) push(x + 1, y);
    if (y > 0) push(x, y - 1);
    if (y + 1 < r.h) push(x, y + 1);
  }
  double top = 0, bottom = 0;
  for (int yy = 0; yy < r.h; ++yy)
    for (int x = 0; x < r.w; ++x) {
      const std::size_t i = static_cast<std::size_t>(yy) * r.w + x;
      if (!r.px[i] && !outside[i]) (yy < r.h / 2.0 ? top : bottom) += 1.0;
    }
  const double area = static_cast<double>(r.w) * r.h;
  f.counter_top = top / area;
  f.counter_bottom = bottom / area;
}

/// Bowls: rounded segments rasterize as staircases, so curvature shows up as
/// boundary pixels exposed both vertically and horizontally with another such
/// pixel within two steps along a diagonal. Two steps, not one: the normalize
/// pass scales small bitmaps up by an integer factor, which stretches a
/// one-pixel stair riser accordingly. Isolated right-angle corners have no
/// diagonal partner, so straight-edged glyphs score exactly zero, and the
/// risers of a near-vertical stroke sit too far apart to pair up. The step
/// pixels are binned into 16 angular sectors around the ink centroid and
/// normalized by ink area.
void detect_bowls(const Raster& r, GlyphFeatures& f) {
  double cx = 0, cy = 0, n = 0;
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x)
      if (r.at(x, y)) {
        cx += x;
        cy += y;
        n += 1;
      }
  if (n == 0) return;
  cx /= n;
  cy /= n;

  std::vector<std::uint8_t> exposed(r.px.size(), 0);
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x)
      if (r.at(x, y) && (!r.at(x, y - 1) || !r.at(x, y + 1)) &&
          (!r.at(x - 1, y) || !r.at(x + 1, y)))
        exposed[static_cast<std::size_t>(y) * r.w + x] = 1;

  auto is_exposed = [&](int x, int y) {
    return x >= 0 && x < r.w && y >= 0 && y < r.h &&
           exposed[static_cast<std::size_t>(y) * r.w + x] != 0;
  };
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x) {
      if (!is_exposed(x, y)) continue;
      const bool step = is_exposed(x - 1, y - 1) || is_exposed(x + 1, y - 1) ||
                        is_exposed(x - 1, y + 1) || is_exposed(x + 1, y + 1) ||
                        is_exposed(x - 2, y - 2) || is_exposed(x + 2, y - 2) ||
                        is_exposed(x - 2, y + 2) || is_exposed(x + 2, y + 2);
      if (!step) continue;
      const double angle = std::atan2(cy - y, x - cx);  // y axis flipped
      int sector = static_cast<int>((angle + M_PI) / (2.0 * M_PI / 16.0));
      sector = std::clamp(sector, 0, 15);
      f.bowl_signature[static_cast<std::size_t>(sector)] += 1.0;
    }
  for (double& s : f.bowl_signature) s /= n;
}

/// Spur: a short bump on the right flank in the upper half — rows whose
/// rightmost ink pokes past the rows just above and below by at least 8% of
/// the width but no more than 30% (longer protrusions are bars), over a
/// band at most a quarter of the glyph tall.
void detect_spur(const Raster& r, GlyphFeatures& f) {
  std::vector<int> right(r.h, -1);
  for (int y = 0; y < r.h; ++y)
    for (int x = r.w - 1; x >= 0; --x)
      if (r.at(x, y)) {
        right[y] = x;
        break;
      }
  const int lo = static_cast<int>(std::ceil(0.12 * r.h));
  const int hi = std::min(r.h - 1, static_cast<int>(std::floor(0.45 * r.h)));
  int rmax = -1;
  for (int y = lo; y <= hi; ++y) rmax = std::max(rmax, right[y]);
  if (rmax < 0) return;

  int y = lo;
  while (y <= hi) {
    if (right[y] < rmax - 1) {
      ++y;
      continue;
    }
    int ye = y;
    while (ye + 1 <= hi && right[ye + 1] >= rmax - 1) ++ye;
    const int height = ye - y + 1;
    if (height <= 0.25 * r.h) {
      int base = -1;
      for (int yy = std::max(0, y - 3); yy < y; ++yy)
        base = std::max(base, right[yy]);
      for (int yy = ye + 1; yy <= std::min(r.h - 1, ye + 3); ++yy)
        base = std::max(base, right[yy]);
      const double prot = rmax - base;
      if (base >= 0 && prot >= 0.08 * r.w && prot <= 0.3 * r.w) {
        f.spur_present = true;
        f.spur_location = {norm_x(r, rmax), norm_y(r, 0.5 * (y + ye))};
        return;
      }
    }
    y = ye + 1;
  }
}

/// Tail: a narrow protrusion (row coverage <= 25%) hanging below a wide body
/// row (coverage >= 50%). Long narrow suffixes are stems, not tails, so
/// anything over 35% of the height reports zero.
void detect_tail(const Raster& r, GlyphFeatures& f) {
  std::vector<double> cov(r.h, 0.0);
  for (int y = 0; y < r.h; ++y) {
    int c = 0;
    for (int x = 0; x < r.w; ++x) c += r.at(x, y) ? 1 : 0;
    cov[y] = static_cast<double>(c) / r.w;
  }
  int t = 0;
  int y = r.h - 1;
  while (y >= 0 && cov[y] <= 0.25) {
    ++t;
    --y;
  }
  if (t >= 1 && t <= 0.35 * r.h && y >= 0 && cov[y] >= 0.5)
    f.tail_clarity = static_cast<double>(t) / r.h;
}

struct Slope {
  int dx;
  int dy;  // signed; dx always positive
};

constexpr Slope kSlopes[] = {
    {1, 5},  {1, 4},  {1, 3},  {1, 2},  {2, 3},  {1, 1},  {3, 2},  {2, 1},
    {3, 1},  {1, -5}, {1, -4}, {1, -3}, {1, -2}, {2, -3}, {1, -1}, {3, -2},
    {2, -1}, {3, -1}};

struct Chain {
  int x0 = 0, y0 = 0;
  Slope slope{1, 1};
  int len = 0;  // pixels
  double phys() const {
    return (len - 1) * std::hypot(slope.dx, slope.dy);
  }
};

/// Diagonals: greedy extraction of the longest pixel chains stepping along a
/// small set of rational slopes. A chain inside a thick vertical stem is
/// rejected by the vertical-run test: stems have full-height ink columns,
/// genuine diagonal strokes only stroke-width ones. Accepted chains are
/// erased (with a 2-px halo, so a thick stroke counts once) and the search
/// repeats, up to 8 strokes.
void detect_diagonals(const Raster& r, GlyphFeatures& f) {
  if (r.w == 0) return;
  Raster work = r;
  const double min_len = std::max(8.0, 0.45 * r.h);

  std::vector<int> vrun(r.px.size(), 0);  // on the original raster
  for (int x = 0; x < r.w; ++x) {
    int y = 0;
    while (y < r.h) {
      if (!r.at(x, y)) {
        ++y;
        continue;
      }
      int ye = y;
      while (ye + 1 < r.h && r.at(x, ye + 1)) ++ye;
      for (int yy = y; yy <= ye; ++yy)
        vrun[static_cast<std::size_t>(yy) * r.w + x] = ye - y + 1;
      y = ye + 1;
    }
  }

  auto chain_ok = [&](const Chain& c) {
    if (c.phys() < min_len) return false;
    std::vector<int> runs;
    runs.reserve(static_cast<std::size_t>(c.len));
    for (int i = 0; i < c.len; ++i)
      runs.push_back(vrun[static_cast<std::size_t>(c.y0 + i * c.slope.dy) *
                              r.w +
                          (c.x0 + i * c.slope.dx)]);
    std::nth_element(runs.begin(), runs.begin() + runs.size() / 2, runs.end());
    const int median = runs[runs.size() / 2];
    const int y_extent = (c.len - 1) * std::abs(c.slope.dy) + 1;
    return median <= 0.6 * y_extent;
  };

  for (int stroke = 0; stroke < 8; ++stroke) {
    Chain best;
    for (const Slope& s : kSlopes)
      for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x) {
          if (!work.at(x, y) || work.at(x - s.dx, y - s.dy))
            continue;  // only maximal chains: no predecessor
          int len = 0;
          int cx = x, cy = y;
          while (work.at(cx, cy)) {
            ++len;
            cx += s.dx;
            cy += s.dy;
          }
          Chain c{x, y, s, len};
          if (c.phys() > best.phys() && chain_ok(c)) best = c;
        }
    if (best.len == 0) break;
    f.diagonal_angles.push_back(
        std::atan2(std::abs(best.slope.dy), best.slope.dx) * 180.0 / M_PI);
    for (int i = 0; i < best.len; ++i) {
      const int px = best.x0 + i * best.slope.dx;
      const int py = best.y0 + i * best.slope.dy;
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          if (work.at(px + dx, py + dy)) work.ref(px + dx, py + dy) = 0;
    }
  }
  std::sort(f.diagonal_angles.begin(), f.diagonal_angles.end());
}

/// Mean over a's entries of the best match against b, averaged both ways.
/// Co-absence is perfect agreement; presence against absence is zero.
template <class T, class Match>
double bidirectional(const std::vector<T>& a, const std::vector<T>& b,
                     Match match) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  auto side = [&](const std::vector<T>& from, const std::vector<T>& to) {
    double sum = 0.0;
    for (const T& f : from) {
      double best = 0.0;
      for (const T& t : to) best = std::max(best, match(f, t));
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return 0.5 * (side(a, b) + side(b, a));
}

double point_match(const std::pair<double, double>& p,
                   const std::pair<double, double>& q) {
  return std::max(0.0, 1.0 - std::hypot(p.first - q.first,
                                        p.second - q.second) /
                            std::sqrt(2.0));
}

double area_similarity(double a, double b) {
  if (a < 1e-9 && b < 1e-9) return 1.0;
  return 1.0 - std::abs(a - b) / std::max(a, b);
}

void validate_weights(const std::vector<double>& weights) {
  if (weights.size() != kCriteria)
    throw ArgumentError("pair_score: want " + std::to_string(kCriteria) +
                        " weights, got " + std::to_string(weights.size()));
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ArgumentError("pair_score: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ArgumentError("pair_score: weights sum to " + std::to_string(sum) +
                        ", want 1");
}

}  // namespace

const char* criterion_name(std::size_t index) {
  static const char* kNames[kCriteria] = {"apex",    "crossbar", "counter",
                                          "bowl",    "spur",     "hstroke",
                                          "tail",    "diagonal"};
  if (index >= kCriteria)
    throw ArgumentError("criterion_name: index out of range");
  return kNames[index];
}

std::vector<double> default_weights() {
  return std::vector<double>(kCriteria, 1.0 / kCriteria);
}

GlyphFeatures extract_features(const synth::GlyphBitmap& glyph) {
  GlyphFeatures f;
  const Raster r = normalize(glyph);
  if (r.w == 0) return f;
  detect_apexes(r, f);
  detect_bars(r, f);
  detect_counters(r, f);
  detect_bowls(r, f);
  detect_spur(r, f);
  detect_tail(r, f);
  detect_diagonals(r, f);
  return f;
}

std::array<double, kCriteria> criterion_similarities(const GlyphFeatures& a,
                                                     const GlyphFeatures& b) {
  std::array<double, kCriteria> s{};

  s[0] = bidirectional(a.apex_positions, b.apex_positions, point_match);

  s[1] = bidirectional(a.crossbar_ys, b.crossbar_ys, [](double p, double q) {
    return std::max(0.0, 1.0 - std::abs(p - q));
  });

  s[2] = 0.5 * (area_similarity(a.counter_top, b.counter_top) +
                area_similarity(a.counter_bottom, b.counter_bottom));

  // The 0.1 floor keeps faint rounding (a couple of eased corners) from
  // acting as a hard discriminator: below ~10% combined curvature density
  // two glyphs are both essentially straight-edged.
  double sum_a = 0, sum_b = 0, diff = 0;
  for (std::size_t i = 0; i < a.bowl_signature.size(); ++i) {
    sum_a += a.bowl_signature[i];
    sum_b += b.bowl_signature[i];
    diff += std::abs(a.bowl_signature[i] - b.bowl_signature[i]);
  }
  s[3] = 1.0 - diff / std::max(sum_a + sum_b, 0.1);

  if (!a.spur_present && !b.spur_present)
    s[4] = 1.0;
  else if (a.spur_present != b.spur_present)
    s[4] = 0.0;
  else
    s[4] = point_match(a.spur_location, b.spur_location);

  s[5] = 0.5 * ((a.hstroke_top == b.hstroke_top ? 1.0 : 0.0) +
                (a.hstroke_bottom == b.hstroke_bottom ? 1.0 : 0.0));

  s[6] = 1.0 - std::abs(a.tail_clarity - b.tail_clarity);

  // 10 degrees absorbs quantization jitter (neighboring representable slopes
  // sit ~5-8 degrees apart) without gluing visually distinct strokes — a 45
  // degree leg and a 60 degree one read as different letters.
  s[7] = bidirectional(a.diagonal_angles, b.diagonal_angles,
                       [](double p, double q) {
                         return std::abs(p - q) <= 10.0 ? 1.0 : 0.0;
                       });
  return s;
}

double pair_score(const GlyphFeatures& a, const GlyphFeatures& b,
                  const std::vector<double>& weights) {
  validate_weights(weights);
  const auto sims = criterion_similarities(a, b);
  double score = 0.0;
  for (std::size_t i = 0; i < kCriteria; ++i) score += weights[i] * sims[i];
  return std::clamp(score, 0.0, 1.0);
}

double pair_score(const GlyphFeatures& a, const GlyphFeatures& b) {
  return pair_score(a, b, default_weights());
}

ConfusabilityMatrix::ConfusabilityMatrix(Alphabet alphabet,
                                         std::string font_name)
    : alphabet_(std::move(alphabet)),
      font_name_(std::move(font_name)),
      scores_(Eigen::MatrixXd::Identity(alphabet_.size(), alphabet_.size())),
      breakdown_(static_cast<std::size_t>(alphabet_.size()) *
                 alphabet_.size()) {
  std::array<double, kCriteria> self;
  self.fill(1.0);
  for (int i = 0; i < alphabet_.size(); ++i)
    breakdown_[static_cast<std::size_t>(i) * alphabet_.size() + i] = self;
}

int ConfusabilityMatrix::idx(char c) const {
  auto i = alphabet_.index(c);
  if (!i)
    throw ArgumentError(std::string("confusability: '") + c +
                        "' not in alphabet");
  return *i;
}

double ConfusabilityMatrix::score(char a, char b) const {
  return scores_(idx(a), idx(b));
}

const std::array<double, kCriteria>& ConfusabilityMatrix::breakdown(
    char a, char b) const {
  return breakdown_[static_cast<std::size_t>(idx(a)) * alphabet_.size() +
                    idx(b)];
}

void ConfusabilityMatrix::set(char a, char b, double score,
                              const std::array<double, kCriteria>& breakdown) {
  const int i = idx(a), j = idx(b);
  if (score < 0.0 || score > 1.0)
    throw ArgumentError("confusability: score outside [0,1]");
  scores_(i, j) = score;
  scores_(j, i) = score;
  breakdown_[static_cast<std::size_t>(i) * alphabet_.size() + j] = breakdown;
  breakdown_[static_cast<std::size_t>(j) * alphabet_.size() + i] = breakdown;
}

std::vector<RankedPair> ConfusabilityMatrix::ranked_pairs() const {
  std::vector<RankedPair> pairs;
  const int n = alphabet_.size();
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      pairs.push_back({alphabet_.symbol(i), alphabet_.symbol(j),
                       scores_(i, j)});
  std::sort(pairs.begin(), pairs.end(),
            [](const RankedPair& l, const RankedPair& r) {
              if (l.score != r.score) return l.score > r.score;
              if (l.a != r.a) return l.a < r.a;
              return l.b < r.b;
            });
  return pairs;
}

std::string ConfusabilityMatrix::to_csv() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  const int n = alphabet_.size();
  for (int j = 0; j < n; ++j) out << ',' << alphabet_.symbol(j);
  out << '\n';
  for (int i = 0; i < n; ++i) {
    out << alphabet_.symbol(i);
    for (int j = 0; j < n; ++j) out << ',' << scores_(i, j);
    out << '\n';
  }
  return out.str();
}

ConfusabilityMatrix confusability_matrix(const synth::FontProfile& font,
                                         const std::vector<double>& weights) {
  validate_weights(weights);
  const Alphabet alphabet;
  std::vector<GlyphFeatures> features;
  features.reserve(static_cast<std::size_t>(alphabet.size()));
  for (char c : alphabet.symbols()) {
    auto it = font.glyphs.find(c);
    if (it == font.glyphs.end())
      throw ArgumentError("confusability: font '" + font.name +
                          "' lacks glyph '" + std::string(1, c) + "'");
    features.push_back(extract_features(it->second));
  }
  ConfusabilityMatrix matrix(alphabet, font.name);
  for (int i = 0; i < alphabet.size(); ++i)
    for (int j = i + 1; j < alphabet.size(); ++j) {
      const auto sims = criterion_similarities(
          features[static_cast<std::size_t>(i)],
          features[static_cast<std::size_t>(j)]);
      double score = 0.0;
      for (std::size_t k = 0; k < kCriteria; ++k)
        score += weights[k] * sims[k];
      matrix.set(alphabet.symbol(i), alphabet.symbol(j),
                 std::clamp(score, 0.0, 1.0), sims);
    }
  return matrix;
}

ConfusabilityMatrix confusability_matrix(const synth::FontProfile& font) {
  return confusability_matrix(font, default_weights());
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;  // 1-based average rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ArgumentError("spearman: size mismatch");
  if (x.size() < 2) throw ArgumentError("spearman: need at least 2 points");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx < 1e-12 || syy < 1e-12) return 0.0;  // a constant ranking
  return sxy / std::sqrt(sxx * syy);
}

CorrelationResult correlate_with_empirical(
    const ConfusabilityMatrix& matrix, const text::ConfusionMatrix& confusion) {
  if (matrix.alphabet().symbols() != confusion.alphabet().symbols())
    throw ArgumentError("correlate_with_empirical: alphabets differ");
  std::vector<double> predicted, observed;
  const std::string& symbols = matrix.alphabet().symbols();
  for (std::size_t i = 0; i < symbols.size(); ++i)
    for (std::size_t j = i + 1; j < symbols.size(); ++j) {
      const long c = confusion.count(symbols[i], symbols[j]) +
                     confusion.count(symbols[j], symbols[i]);
      if (c <= 0) continue;
      predicted.push_back(matrix.score(symbols[i], symbols[j]));
      observed.push_back(static_cast<double>(c));
    }
  CorrelationResult result;
  result.pairs = predicted.size();
  if (result.pairs < 5) return result;  // insufficient data
  result.sufficient = true;
  result.rho = spearman(predicted, observed);
  return result;
}

}  // namespace plate::fonts
