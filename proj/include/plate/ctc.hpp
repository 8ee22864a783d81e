#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "plate/alphabet.hpp"
#include "plate/errors.hpp"

namespace plate::ctc {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
constexpr S neg_inf() {
  return -std::numeric_limits<S>::infinity();
}

template <class S>
inline S log_sum_exp(S a, S b) {
  if (a == neg_inf<S>()) return b;
  if (b == neg_inf<S>()) return a;
  const S m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

template <class S>
inline S log_sum_exp(S a, S b, S c) {
  return log_sum_exp(log_sum_exp(a, b), c);
}

/// Row-wise log-softmax; the shift by the row max keeps exp in range for
/// logits of any magnitude.
template <class S>
Matrix<S> log_softmax(const Matrix<S>& logits) {
  Matrix<S> out = logits;
  for (Eigen::Index t = 0; t < out.rows(); ++t) {
    const S m = out.row(t).maxCoeff();
    const S lse = m + std::log((out.row(t).array() - m).exp().sum());
    out.row(t).array() -= lse;
  }
  return out;
}

/// Loss and gradient of one (logits, target) pair.
/// `feasible == false` means no alignment exists (target longer than the
/// frame count allows); loss is +infinity and the gradient is zero.
template <class S>
struct Result {
  S loss = S(0);
  Matrix<S> grad;
  bool feasible = true;
};

/// Target with blanks interleaved: [b, l1, b, l2, ..., lL, b].
inline std::vector<int> extend_with_blanks(const std::vector<int>& labels,
                                           int blank) {
  std::vector<int> ext;
  ext.reserve(labels.size() * 2 + 1);
  ext.push_back(blank);
  for (int l : labels) {
    ext.push_back(l);
    ext.push_back(blank);
  }
  return ext;
}

namespace detail {

template <class S>
void require_logits(const Matrix<S>& logits) {
  if (logits.rows() < 1) throw ArgumentError("ctc: need at least one frame");
  if (logits.cols() < 2) throw ArgumentError("ctc: need at least two classes");
  if (!logits.allFinite()) throw ArgumentError("ctc: non-finite logits");
}

inline void require_target(const std::vector<int>& target, int classes,
                           int blank) {
  for (int l : target) {
    if (l < 0 || l >= classes || l == blank)
      throw ArgumentError("ctc: target index " + std::to_string(l) +
                          " out of range or equal to blank");
  }
}

}  // namespace detail

/// Forward-backward CTC loss with analytic gradient w.r.t. the logits.
/// Everything runs in log space; the loss is in nats.
template <class S>
Result<S> loss_grad(const Matrix<S>& logits, const std::vector<int>& target,
                    int blank) {
  detail::require_logits(logits);
  const int frames = static_cast<int>(logits.rows());
  const int classes = static_cast<int>(logits.cols());
  detail::require_target(target, classes, blank);
  if (blank < 0 || blank >= classes) throw ArgumentError("ctc: blank out of range");

  const std::vector<int> ext = extend_with_blanks(target, blank);
  const int n = static_cast<int>(ext.size());
  const Matrix<S> lsm = log_softmax(logits);
  const S kNegInf = neg_inf<S>();

  // May the label step from ext[s-2] straight to ext[s]?
  auto can_skip = [&](int s) {
    return s >= 2 && ext[static_cast<std::size_t>(s)] != blank &&
           ext[static_cast<std::size_t>(s)] != ext[static_cast<std::size_t>(s - 2)];
  };

  Matrix<S> alpha = Matrix<S>::Constant(frames, n, kNegInf);
  alpha(0, 0) = lsm(0, ext[0]);
  if (n > 1) alpha(0, 1) = lsm(0, ext[1]);
  for (int t = 1; t < frames; ++t) {
    for (int s = 0; s < n; ++s) {
      S acc = alpha(t - 1, s);
      if (s >= 1) acc = log_sum_exp(acc, alpha(t - 1, s - 1));
      if (can_skip(s)) acc = log_sum_exp(acc, alpha(t - 1, s - 2));
      if (acc != kNegInf) alpha(t, s) = acc + lsm(t, ext[static_cast<std::size_t>(s)]);
    }
  }

  S log_p = alpha(frames - 1, n - 1);
  if (n > 1) log_p = log_sum_exp(log_p, alpha(frames - 1, n - 2));

  Result<S> result;
  if (log_p == kNegInf) {
    result.loss = std::numeric_limits<S>::infinity();
    result.grad = Matrix<S>::Zero(frames, classes);
    result.feasible = false;
    return result;
  }
  result.loss = -log_p;

  Matrix<S> beta = Matrix<S>::Constant(frames, n, kNegInf);
  beta(frames - 1, n - 1) = lsm(frames - 1, ext[static_cast<std::size_t>(n - 1)]);
  if (n > 1)
    beta(frames - 1, n - 2) = lsm(frames - 1, ext[static_cast<std::size_t>(n - 2)]);
  for (int t = frames - 2; t >= 0; --t) {
    for (int s = n - 1; s >= 0; --s) {
      S acc = beta(t + 1, s);
      if (s + 1 < n) acc = log_sum_exp(acc, beta(t + 1, s + 1));
      if (s + 2 < n && can_skip(s + 2)) acc = log_sum_exp(acc, beta(t + 1, s + 2));
      if (acc != kNegInf) beta(t, s) = acc + lsm(t, ext[static_cast<std::size_t>(s)]);
    }
  }

  // grad = softmax - posterior; alpha*beta double-counts the frame emission,
  // hence the extra lsm subtraction.
  result.grad = Matrix<S>::Zero(frames, classes);
  for (int t = 0; t < frames; ++t) {
    std::vector<S> acc(static_cast<std::size_t>(classes), kNegInf);
    for (int s = 0; s < n; ++s) {
      const S ab = alpha(t, s) + beta(t, s);
      if (ab == kNegInf) continue;
      S& slot = acc[static_cast<std::size_t>(ext[static_cast<std::size_t>(s)])];
      slot = log_sum_exp(slot, ab);
    }
    for (int k = 0; k < classes; ++k) {
      const S y = std::exp(lsm(t, k));
      const S a = acc[static_cast<std::size_t>(k)];
      const S posterior =
          (a == kNegInf) ? S(0) : std::exp(a - log_p - lsm(t, k));
      result.grad(t, k) = y - posterior;
    }
  }
  return result;
}

/// Exhaustive path-sum loss: every K^T frame labeling, summed over those that
/// collapse to the target. Test oracle; guarded against blowing up.
template <class S>
S brute_force_loss(const Matrix<S>& logits, const std::vector<int>& target,
                   int blank) {
  detail::require_logits(logits);
  const int frames = static_cast<int>(logits.rows());
  const int classes = static_cast<int>(logits.cols());
  detail::require_target(target, classes, blank);
  double paths = std::pow(static_cast<double>(classes), frames);
  if (paths > 1e7)
    throw ArgumentError("ctc brute force: K^T = " + std::to_string(paths) +
                        " exceeds the 1e7 guard");

  const Matrix<S> lsm = log_softmax(logits);
  std::vector<int> path(static_cast<std::size_t>(frames), 0);
  std::vector<int> collapsed;
  S acc = neg_inf<S>();
  while (true) {
    collapsed.clear();
    int prev = -1;
    for (int t = 0; t < frames; ++t) {
      const int c = path[static_cast<std::size_t>(t)];
      if (c != prev && c != blank) collapsed.push_back(c);
      prev = c;
    }
    if (collapsed == target) {
      S lp = S(0);
      for (int t = 0; t < frames; ++t) lp += lsm(t, path[static_cast<std::size_t>(t)]);
      acc = log_sum_exp(acc, lp);
    }
    int t = frames - 1;
    while (t >= 0 && ++path[static_cast<std::size_t>(t)] == classes)
      path[static_cast<std::size_t>(t--)] = 0;
    if (t < 0) break;
  }
  return acc == neg_inf<S>() ? std::numeric_limits<S>::infinity() : -acc;
}

/// Per-frame argmax (ties to the lowest class), collapse repeats, drop blanks.
template <class S>
std::string greedy_decode(const Matrix<S>& logits, const Alphabet& alphabet) {
  detail::require_logits(logits);
  if (static_cast<int>(logits.cols()) != alphabet.num_classes())
    throw ArgumentError("greedy_decode: logit classes do not match alphabet");
  const int blank = alphabet.blank_index();
  std::string out;
  int prev = -1;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(logits.cols()); ++k)
      if (logits(t, k) > logits(t, best)) best = k;
    if (best != prev && best != blank) out.push_back(alphabet.symbol(best));
    prev = best;
  }
  return out;
}

template <class S>
struct BeamHypothesis {
  std::string text;
  S log_prob;
};

/// Prefix beam search. Prefixes that collapse to the same labeling are merged
/// with their probability mass split across blank / non-blank endings, so with
/// a width at least the size of the label space the scores are the exact
/// marginals. Ordering: log-probability descending, ties lexicographic.
template <class S>
std::vector<BeamHypothesis<S>> beam_decode(const Matrix<S>& logits,
                                           const Alphabet& alphabet,
                                           int width) {
  detail::require_logits(logits);
  if (width < 1) throw ArgumentError("beam_decode: width must be >= 1");
  if (static_cast<int>(logits.cols()) != alphabet.num_classes())
    throw ArgumentError("beam_decode: logit classes do not match alphabet");

  const Matrix<S> lsm = log_softmax(logits);
  const int blank = alphabet.blank_index();
  const S kNegInf = neg_inf<S>();

  struct Mass {
    S blank_end = neg_inf<S>();
    S symbol_end = neg_inf<S>();
    S total() const { return log_sum_exp(blank_end, symbol_end); }
  };
  using Beam = std::map<std::vector<int>, Mass>;

  Beam beam;
  beam[{}].blank_end = S(0);

  for (Eigen::Index t = 0; t < lsm.rows(); ++t) {
    Beam next;
    for (const auto& [prefix, mass] : beam) {
      const S total = mass.total();
      // Stay on the same labeling: emit blank, or repeat the last symbol.
      {
        Mass& m = next[prefix];
        m.blank_end = log_sum_exp(m.blank_end, total + lsm(t, blank));
        if (!prefix.empty())
          m.symbol_end =
              log_sum_exp(m.symbol_end, mass.symbol_end + lsm(t, prefix.back()));
      }
      // Extend by each symbol.
      for (int c = 0; c < alphabet.size(); ++c) {
        std::vector<int> extended = prefix;
        extended.push_back(c);
        // A repeated symbol needs a blank in between, so only the
        // blank-ending mass may extend with the same symbol again.
        const S source =
            (!prefix.empty() && c == prefix.back()) ? mass.blank_end : total;
        if (source == kNegInf) continue;
        Mass& m = next[std::move(extended)];
        m.symbol_end = log_sum_exp(m.symbol_end, source + lsm(t, c));
      }
    }
    if (static_cast<int>(next.size()) > width) {
      std::vector<std::pair<std::vector<int>, Mass>> entries(next.begin(),
                                                             next.end());
      std::sort(entries.begin(), entries.end(),
                [](const auto& a, const auto& b) {
                  const S ta = a.second.total(), tb = b.second.total();
                  if (ta != tb) return ta > tb;
                  return a.first < b.first;
                });
      entries.resize(static_cast<std::size_t>(width));
      next = Beam(entries.begin(), entries.end());
    }
    beam = std::move(next);
  }

  std::vector<BeamHypothesis<S>> out;
  out.reserve(beam.size());
  for (const auto& [prefix, mass] : beam)
    out.push_back({alphabet.decode(prefix), mass.total()});
  std::sort(out.begin(), out.end(),
            [](const BeamHypothesis<S>& a, const BeamHypothesis<S>& b) {
              if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
              return a.text < b.text;
            });
  return out;
}

/// Logit fixtures on disk: CSV, one frame per row.
std::string logits_to_csv(const Matrix<double>& logits);
Matrix<double> logits_from_csv(const std::string& text);

}  // namespace plate::ctc
