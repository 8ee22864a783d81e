#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "plate/alphabet.hpp"
#include "plate/ctc.hpp"
#include "plate/errors.hpp"
#include "plate/image.hpp"
#include "plate/rng.hpp"

namespace plate::recognizer {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Fixed architecture. A 32 x W strip (W divisible by 4) passes through four
// 3x3 same-padding conv + ReLU blocks with max pools (2,2), (2,2), (2,1),
// (2,1), leaving a 64-channel 2 x (W/4) map. Each column becomes one frame:
// the two rows' channel vectors concatenated, frame[h*64 + c]. A
// bidirectional LSTM (hidden 64 per direction) runs over the T = W/4 frames
// and a linear projection emits K = 37 logits per frame.
inline constexpr int kInputHeight = 32;
inline constexpr std::array<int, 5> kChannels = {1, 16, 32, 64, 64};
inline constexpr std::array<int, 4> kPoolH = {2, 2, 2, 2};
inline constexpr std::array<int, 4> kPoolW = {2, 2, 1, 1};
inline constexpr int kHidden = 64;
inline constexpr int kFrameDim = 2 * kChannels[4];  // 128
inline constexpr int kGateDim = 4 * kHidden;        // i, f, g, o stacked
inline constexpr int kClasses = 37;                 // 36 symbols + blank

template <class S>
struct ConvLayerT {
  Mat<S> kernel;  // (out_ch) x (in_ch * 9), column index = ci*9 + ky*3 + kx
  Vec<S> bias;    // (out_ch)
};

template <class S>
struct LstmDirT {
  Mat<S> w_input;  // 256 x 128, gate rows stacked [i; f; g; o]
  Mat<S> w_recur;  // 256 x 64
  Vec<S> bias;     // 256
};

template <class S>
struct ModelParamsT {
  std::array<ConvLayerT<S>, 4> conv;
  LstmDirT<S> lstm_fwd, lstm_bwd;
  Mat<S> proj_weight;  // 37 x 128
  Vec<S> proj_bias;    // 37

  template <class S2>
  ModelParamsT<S2> cast() const {
    ModelParamsT<S2> out;
    for (int l = 0; l < 4; ++l) {
      out.conv[static_cast<std::size_t>(l)].kernel =
          conv[static_cast<std::size_t>(l)].kernel.template cast<S2>();
      out.conv[static_cast<std::size_t>(l)].bias =
          conv[static_cast<std::size_t>(l)].bias.template cast<S2>();
    }
    auto cast_dir = [](const LstmDirT<S>& d) {
      LstmDirT<S2> o;
      o.w_input = d.w_input.template cast<S2>();
      o.w_recur = d.w_recur.template cast<S2>();
      o.bias = d.bias.template cast<S2>();
      return o;
    };
    out.lstm_fwd = cast_dir(lstm_fwd);
    out.lstm_bwd = cast_dir(lstm_bwd);
    out.proj_weight = proj_weight.template cast<S2>();
    out.proj_bias = proj_bias.template cast<S2>();
    return out;
  }

  long parameter_count() const {
    long n = 0;
    for (const auto& c : conv) n += c.kernel.size() + c.bias.size();
    for (const LstmDirT<S>* d : {&lstm_fwd, &lstm_bwd})
      n += d->w_input.size() + d->w_recur.size() + d->bias.size();
    return n + proj_weight.size() + proj_bias.size();
  }
};

/// Checkpoints and the public API carry float32 parameters; training and the
/// gradient tests instantiate the double variant.
using ModelParams = ModelParamsT<float>;

namespace detail {

template <class S>
void require_params(const ModelParamsT<S>& p) {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ArchitectureError(std::string("model params: ") + what);
  };
  for (int l = 0; l < 4; ++l) {
    const auto& c = p.conv[static_cast<std::size_t>(l)];
    check(c.kernel.rows() == kChannels[static_cast<std::size_t>(l) + 1] &&
              c.kernel.cols() == kChannels[static_cast<std::size_t>(l)] * 9,
          "conv kernel shape");
    check(c.bias.size() == kChannels[static_cast<std::size_t>(l) + 1],
          "conv bias shape");
    check(c.kernel.allFinite() && c.bias.allFinite(), "non-finite conv values");
  }
  for (const LstmDirT<S>* d : {&p.lstm_fwd, &p.lstm_bwd}) {
    check(d->w_input.rows() == kGateDim && d->w_input.cols() == kFrameDim,
          "lstm input weight shape");
    check(d->w_recur.rows() == kGateDim && d->w_recur.cols() == kHidden,
          "lstm recurrent weight shape");
    check(d->bias.size() == kGateDim, "lstm bias shape");
    check(d->w_input.allFinite() && d->w_recur.allFinite() && d->bias.allFinite(),
          "non-finite lstm values");
  }
  check(p.proj_weight.rows() == kClasses && p.proj_weight.cols() == kFrameDim,
        "projection weight shape");
  check(p.proj_bias.size() == kClasses, "projection bias shape");
  check(p.proj_weight.allFinite() && p.proj_bias.allFinite(),
        "non-finite projection values");
}

inline void require_strip(const GrayImage& strip) {
  if (strip.rows() != kInputHeight)
    throw ArchitectureError("strip height must be 32, got " +
                            std::to_string(strip.rows()));
  if (strip.cols() < 4 || strip.cols() % 4 != 0)
    throw ArchitectureError("strip width must be a positive multiple of 4");
  if (!strip.allFinite() || strip.minCoeff() < 0.0 || strip.maxCoeff() > 1.0)
    throw ArchitectureError("strip values must lie in [0,1]");
}

}  // namespace detail

/// Deterministic initialization: weights uniform in [-s, s], s = sqrt(1/fan_in)
/// (fan_in = in_ch*9 for conv kernels, 128 for lstm input and projection
/// weights, 64 for lstm recurrent weights), biases zero. Tensors are filled
/// row-major in a fixed order (conv1..4 kernels, fwd/bwd lstm input then
/// recurrent weights, projection weight) from one SplitMix64 stream, so a
/// seed pins every value.
template <class S>
ModelParamsT<S> init_params(std::uint64_t seed) {
  SplitMix64 rng(seed);
  auto fill = [&rng](Mat<S>& m, int rows, int cols, int fan_in) {
    const double s = std::sqrt(1.0 / fan_in);
    m.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        m(r, c) = static_cast<S>(rng.uniform(-s, s));
  };
  ModelParamsT<S> p;
  for (int l = 0; l < 4; ++l) {
    const int in = kChannels[static_cast<std::size_t>(l)];
    const int out = kChannels[static_cast<std::size_t>(l) + 1];
    fill(p.conv[static_cast<std::size_t>(l)].kernel, out, in * 9, in * 9);
    p.conv[static_cast<std::size_t>(l)].bias = Vec<S>::Zero(out);
  }
  for (LstmDirT<S>* d : {&p.lstm_fwd, &p.lstm_bwd}) {
    fill(d->w_input, kGateDim, kFrameDim, kFrameDim);
    fill(d->w_recur, kGateDim, kHidden, kHidden);
    d->bias = Vec<S>::Zero(kGateDim);
  }
  fill(p.proj_weight, kClasses, kFrameDim, kFrameDim);
  p.proj_bias = Vec<S>::Zero(kClasses);
  return p;
}

// ---------------------------------------------------------------------------
// Forward pass with trace capture (the trace feeds backward()).

template <class S>
struct ConvTrace {
  Mat<S> col;               // (in_ch*9) x (h*w) im2col patches of the input
  Mat<S> relu;              // out_ch x (h*w), post-ReLU, pre-pool
  Mat<S> pooled;            // out_ch x (hp*wp)
  std::vector<int> argmax;  // winning flat input index per pooled cell
  int w = 0, h = 0, wp = 0, hp = 0;
};

template <class S>
struct LstmTrace {
  // Stored in processing order (the backward direction runs over reversed
  // frames, so its row s corresponds to time T-1-s).
  Mat<S> i, f, g, o, c, h;  // T x 64 each
};

template <class S>
struct ForwardTrace {
  std::array<ConvTrace<S>, 4> conv;
  Mat<S> frames;  // T x 128
  LstmTrace<S> fwd, bwd;
  Mat<S> concat;  // T x 128, [h_fwd, h_bwd] in time order
  Mat<S> logits;  // T x 37
};

namespace detail {

template <class S>
void im2col(const Mat<S>& in, int channels, int h, int w, Mat<S>& col) {
  col.resize(channels * 9, h * w);
  for (int ci = 0; ci < channels; ++ci) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int row = ci * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            col(row, y * w + x) = (sy < 0 || sy >= h || sx < 0 || sx >= w)
                                      ? S(0)
                                      : in(ci, sy * w + sx);
          }
        }
      }
    }
  }
}

template <class S>
void max_pool(const Mat<S>& in, int h, int w, int ph, int pw, Mat<S>& out,
              std::vector<int>& argmax) {
  const int hp = h / ph, wp = w / pw;
  const int channels = static_cast<int>(in.rows());
  out.resize(channels, hp * wp);
  argmax.assign(static_cast<std::size_t>(channels) * hp * wp, 0);
  for (int c = 0; c < channels; ++c) {
    for (int yp = 0; yp < hp; ++yp) {
      for (int xp = 0; xp < wp; ++xp) {
        S best = in(c, (yp * ph) * w + xp * pw);
        int best_idx = (yp * ph) * w + xp * pw;
        for (int dy = 0; dy < ph; ++dy) {
          for (int dx = 0; dx < pw; ++dx) {
            const int idx = (yp * ph + dy) * w + (xp * pw + dx);
            if (in(c, idx) > best) {  // first maximum wins on ties
              best = in(c, idx);
              best_idx = idx;
            }
          }
        }
        out(c, yp * wp + xp) = best;
        argmax[static_cast<std::size_t>(c) * hp * wp + yp * wp + xp] = best_idx;
      }
    }
  }
}

template <class S>
inline S sigmoid(S v) {
  return S(1) / (S(1) + std::exp(-v));
}

// One LSTM direction over `order`-permuted frames; fills the trace in
// processing order.
template <class S>
void lstm_run(const LstmDirT<S>& d, const Mat<S>& frames, bool reversed,
              LstmTrace<S>& tr) {
  const int frames_n = static_cast<int>(frames.rows());
  for (Mat<S>* m : {&tr.i, &tr.f, &tr.g, &tr.o, &tr.c, &tr.h})
    m->resize(frames_n, kHidden);
  // All input contributions in one product (rows stay in time order; the
  // step loop below picks the right row per direction).
  const Mat<S> gates_in = frames * d.w_input.transpose();
  Vec<S> h_prev = Vec<S>::Zero(kHidden);
  Vec<S> c_prev = Vec<S>::Zero(kHidden);
  Vec<S> a(kGateDim);
  for (int s = 0; s < frames_n; ++s) {
    const int t = reversed ? frames_n - 1 - s : s;
    a = gates_in.row(t).transpose() + d.w_recur * h_prev + d.bias;
    for (int j = 0; j < kHidden; ++j) {
      const S iv = sigmoid(a(j));
      const S fv = sigmoid(a(kHidden + j));
      const S gv = std::tanh(a(2 * kHidden + j));
      const S ov = sigmoid(a(3 * kHidden + j));
      const S cv = fv * c_prev(j) + iv * gv;
      const S hv = ov * std::tanh(cv);
      tr.i(s, j) = iv;
      tr.f(s, j) = fv;
      tr.g(s, j) = gv;
      tr.o(s, j) = ov;
      tr.c(s, j) = cv;
      tr.h(s, j) = hv;
    }
    h_prev = tr.h.row(s).transpose();
    c_prev = tr.c.row(s).transpose();
  }
}

}  // namespace detail

/// Forward pass; returns T x 37 logits and (optionally) the full trace.
template <class S>
Mat<S> forward(const ModelParamsT<S>& p, const GrayImage& strip,
               ForwardTrace<S>* trace = nullptr) {
  detail::require_params(p);
  detail::require_strip(strip);
  const int w0 = static_cast<int>(strip.cols());

  ForwardTrace<S> local;
  ForwardTrace<S>& tr = trace ? *trace : local;

  // Channel-major maps: map(c, y*w + x).
  Mat<S> map(1, kInputHeight * w0);
  for (int y = 0; y < kInputHeight; ++y)
    for (int x = 0; x < w0; ++x) map(0, y * w0 + x) = static_cast<S>(strip(y, x));

  int h = kInputHeight, w = w0;
  for (int l = 0; l < 4; ++l) {
    auto& ct = tr.conv[static_cast<std::size_t>(l)];
    const auto& layer = p.conv[static_cast<std::size_t>(l)];
    ct.h = h;
    ct.w = w;
    detail::im2col(map, kChannels[static_cast<std::size_t>(l)], h, w, ct.col);
    ct.relu.noalias() = layer.kernel * ct.col;
    ct.relu.colwise() += layer.bias;
    ct.relu = ct.relu.cwiseMax(S(0));
    detail::max_pool(ct.relu, h, w, kPoolH[static_cast<std::size_t>(l)],
                     kPoolW[static_cast<std::size_t>(l)], ct.pooled, ct.argmax);
    h /= kPoolH[static_cast<std::size_t>(l)];
    w /= kPoolW[static_cast<std::size_t>(l)];
    ct.hp = h;
    ct.wp = w;
    map = ct.pooled;
  }
  // h == 2 here; columns become frames.
  const int frames_n = w;
  tr.frames.resize(frames_n, kFrameDim);
  for (int t = 0; t < frames_n; ++t)
    for (int y = 0; y < 2; ++y)
      for (int c = 0; c < kChannels[4]; ++c)
        tr.frames(t, y * kChannels[4] + c) = map(c, y * frames_n + t);

  detail::lstm_run(p.lstm_fwd, tr.frames, false, tr.fwd);
  detail::lstm_run(p.lstm_bwd, tr.frames, true, tr.bwd);

  tr.concat.resize(frames_n, 2 * kHidden);
  for (int t = 0; t < frames_n; ++t) {
    tr.concat.row(t).head(kHidden) = tr.fwd.h.row(t);
    tr.concat.row(t).tail(kHidden) = tr.bwd.h.row(frames_n - 1 - t);
  }

  tr.logits.noalias() = tr.concat * p.proj_weight.transpose();
  tr.logits.rowwise() += p.proj_bias.transpose();
  return tr.logits;
}

// ---------------------------------------------------------------------------
// Backward pass: analytic gradient of the CTC loss w.r.t. every parameter.

template <class S>
struct GradT {
  std::array<ConvLayerT<S>, 4> conv;
  LstmDirT<S> lstm_fwd, lstm_bwd;
  Mat<S> proj_weight;
  Vec<S> proj_bias;

  static GradT zero() {
    GradT g;
    for (int l = 0; l < 4; ++l) {
      g.conv[static_cast<std::size_t>(l)].kernel = Mat<S>::Zero(
          kChannels[static_cast<std::size_t>(l) + 1],
          kChannels[static_cast<std::size_t>(l)] * 9);
      g.conv[static_cast<std::size_t>(l)].bias =
          Vec<S>::Zero(kChannels[static_cast<std::size_t>(l) + 1]);
    }
    for (LstmDirT<S>* d : {&g.lstm_fwd, &g.lstm_bwd}) {
      d->w_input = Mat<S>::Zero(kGateDim, kFrameDim);
      d->w_recur = Mat<S>::Zero(kGateDim, kHidden);
      d->bias = Vec<S>::Zero(kGateDim);
    }
    g.proj_weight = Mat<S>::Zero(kClasses, kFrameDim);
    g.proj_bias = Vec<S>::Zero(kClasses);
    return g;
  }

  void add_scaled(const GradT& other, S scale) {
    for (int l = 0; l < 4; ++l) {
      conv[static_cast<std::size_t>(l)].kernel +=
          scale * other.conv[static_cast<std::size_t>(l)].kernel;
      conv[static_cast<std::size_t>(l)].bias +=
          scale * other.conv[static_cast<std::size_t>(l)].bias;
    }
    auto dir = [scale](LstmDirT<S>& a, const LstmDirT<S>& b) {
      a.w_input += scale * b.w_input;
      a.w_recur += scale * b.w_recur;
      a.bias += scale * b.bias;
    };
    dir(lstm_fwd, other.lstm_fwd);
    dir(lstm_bwd, other.lstm_bwd);
    proj_weight += scale * other.proj_weight;
    proj_bias += scale * other.proj_bias;
  }

  S max_abs() const {
    S m = S(0);
    for (const auto& c : conv)
      m = std::max({m, c.kernel.cwiseAbs().maxCoeff(),
                    c.bias.cwiseAbs().maxCoeff()});
    for (const LstmDirT<S>* d : {&lstm_fwd, &lstm_bwd})
      m = std::max({m, d->w_input.cwiseAbs().maxCoeff(),
                    d->w_recur.cwiseAbs().maxCoeff(),
                    d->bias.cwiseAbs().maxCoeff()});
    return std::max({m, proj_weight.cwiseAbs().maxCoeff(),
                     proj_bias.cwiseAbs().maxCoeff()});
  }
};

template <class S>
struct BackwardResult {
  S loss = S(0);
  bool feasible = true;
  GradT<S> grad;
};

namespace detail {

// BPTT through one direction. dh_out rows are in processing order; returns
// the frame gradient contribution (also processing order) and accumulates the
// parameter gradients.
template <class S>
Mat<S> lstm_backward(const LstmDirT<S>& d, const LstmTrace<S>& tr,
                     const Mat<S>& frames, bool reversed, const Mat<S>& dh_out,
                     LstmDirT<S>& grad) {
  const int frames_n = static_cast<int>(dh_out.rows());
  Mat<S> da_all(frames_n, kGateDim);
  Vec<S> dh_carry = Vec<S>::Zero(kHidden);
  Vec<S> dc_carry = Vec<S>::Zero(kHidden);
  for (int s = frames_n - 1; s >= 0; --s) {
    for (int j = 0; j < kHidden; ++j) {
      const S iv = tr.i(s, j), fv = tr.f(s, j), gv = tr.g(s, j),
              ov = tr.o(s, j), cv = tr.c(s, j);
      const S tc = std::tanh(cv);
      const S dh = dh_out(s, j) + dh_carry(j);
      const S dov = dh * tc;
      const S dc = dc_carry(j) + dh * ov * (S(1) - tc * tc);
      const S div = dc * gv;
      const S dgv = dc * iv;
      const S dfv = (s > 0) ? dc * tr.c(s - 1, j) : S(0);
      dc_carry(j) = dc * fv;
      da_all(s, j) = div * iv * (S(1) - iv);
      da_all(s, kHidden + j) = dfv * fv * (S(1) - fv);
      da_all(s, 2 * kHidden + j) = dgv * (S(1) - gv * gv);
      da_all(s, 3 * kHidden + j) = dov * ov * (S(1) - ov);
    }
    dh_carry.noalias() =
        d.w_recur.transpose() * da_all.row(s).transpose();
  }
  // Parameter gradients in three batched products.
  Mat<S> x_order(frames_n, kFrameDim);
  Mat<S> h_prev(frames_n, kHidden);
  for (int s = 0; s < frames_n; ++s) {
    const int t = reversed ? frames_n - 1 - s : s;
    x_order.row(s) = frames.row(t);
    if (s == 0)
      h_prev.row(s).setZero();
    else
      h_prev.row(s) = tr.h.row(s - 1);
  }
  grad.w_input.noalias() += da_all.transpose() * x_order;
  grad.w_recur.noalias() += da_all.transpose() * h_prev;
  grad.bias.noalias() += da_all.colwise().sum().transpose();
  return da_all * d.w_input;  // frame gradients, processing order
}

}  // namespace detail

/// Gradient of the CTC loss for one (strip, target) pair. An infeasible
/// target reports feasible = false with a zero gradient (callers skip the
/// sample and count it).
template <class S>
BackwardResult<S> backward(const ModelParamsT<S>& p, const GrayImage& strip,
                           const std::vector<int>& target) {
  ForwardTrace<S> tr;
  forward(p, strip, &tr);
  const int frames_n = static_cast<int>(tr.logits.rows());

  BackwardResult<S> out;
  out.grad = GradT<S>::zero();
  const auto ctc = ctc::loss_grad(tr.logits, target, kClasses - 1);
  out.loss = ctc.loss;
  out.feasible = ctc.feasible;
  if (!ctc.feasible) return out;

  // Projection.
  out.grad.proj_weight.noalias() = ctc.grad.transpose() * tr.concat;
  out.grad.proj_bias = ctc.grad.colwise().sum().transpose();
  Mat<S> d_concat = ctc.grad * p.proj_weight;  // T x 128

  // Split per direction; backward direction sees reversed processing order.
  Mat<S> dh_fwd = d_concat.leftCols(kHidden);
  Mat<S> dh_bwd(frames_n, kHidden);
  for (int s = 0; s < frames_n; ++s)
    dh_bwd.row(s) = d_concat.row(frames_n - 1 - s).tail(kHidden);

  Mat<S> d_frames = detail::lstm_backward(p.lstm_fwd, tr.fwd, tr.frames, false,
                                          dh_fwd, out.grad.lstm_fwd);
  const Mat<S> d_frames_bwd = detail::lstm_backward(
      p.lstm_bwd, tr.bwd, tr.frames, true, dh_bwd, out.grad.lstm_bwd);
  for (int s = 0; s < frames_n; ++s)
    d_frames.row(frames_n - 1 - s) += d_frames_bwd.row(s);

  // Frames back to the final pooled map.
  Mat<S> d_map(kChannels[4], 2 * frames_n);
  for (int t = 0; t < frames_n; ++t)
    for (int y = 0; y < 2; ++y)
      for (int c = 0; c < kChannels[4]; ++c)
        d_map(c, y * frames_n + t) = d_frames(t, y * kChannels[4] + c);

  // Conv stack in reverse.
  for (int l = 3; l >= 0; --l) {
    const auto& ct = tr.conv[static_cast<std::size_t>(l)];
    const auto& layer = p.conv[static_cast<std::size_t>(l)];
    auto& g = out.grad.conv[static_cast<std::size_t>(l)];
    // Un-pool into the ReLU output grid.
    Mat<S> d_relu = Mat<S>::Zero(ct.relu.rows(), ct.relu.cols());
    const int cells = ct.hp * ct.wp;
    for (int c = 0; c < static_cast<int>(ct.relu.rows()); ++c)
      for (int j = 0; j < cells; ++j)
        d_relu(c, ct.argmax[static_cast<std::size_t>(c) * cells + j]) +=
            d_map(c, j);
    // ReLU gate.
    d_relu.array() *= (ct.relu.array() > S(0)).template cast<S>();
    g.kernel.noalias() += d_relu * ct.col.transpose();
    g.bias.noalias() += d_relu.rowwise().sum();
    if (l == 0) break;  // no need to push into the input image
    const Mat<S> d_col = layer.kernel.transpose() * d_relu;
    // col2im scatter-add into the previous pooled map.
    const int in_ch = kChannels[static_cast<std::size_t>(l)];
    d_map = Mat<S>::Zero(in_ch, ct.h * ct.w);
    for (int ci = 0; ci < in_ch; ++ci) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int row = ci * 9 + ky * 3 + kx;
          for (int y = 0; y < ct.h; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= ct.h) continue;
            for (int x = 0; x < ct.w; ++x) {
              const int sx = x + kx - 1;
              if (sx < 0 || sx >= ct.w) continue;
              d_map(ci, sy * ct.w + sx) += d_col(row, y * ct.w + x);
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training, prediction, checkpoints (non-template entry points).

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
  int jobs = 1;  // parallel per-sample gradients; result independent of jobs
};

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean CTC loss per epoch, nats
  long skipped_samples = 0;        // infeasible (strip, label) pairs, summed
};

using Sample = std::pair<GrayImage, std::string>;

/// Plain SGD over shuffled epochs. Deterministic given (dataset order, config):
/// init and the per-epoch shuffles derive from config.seed alone, and batch
/// gradients are means of per-sample gradients reduced in sample-index order
/// regardless of `jobs`. Throws DivergenceError when an epoch's mean loss
/// exceeds 1e4.
TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& config,
                  const Alphabet& alphabet = Alphabet());

struct Prediction {
  std::string text;
  double confidence = 0.0;  // mean max-softmax over frames
};

Prediction predict(const ModelParams& params, const GrayImage& strip,
                   const Alphabet& alphabet = Alphabet());

/// Checkpoint: "LPRM", version u32 LE, then named tensors until EOF
/// (u32 name length, name bytes, u32 rank, u32 dims, row-major float32 LE
/// values). load_params validates the complete tensor table and shapes.
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

/// CSV "epoch,mean_loss" with one row per epoch.
std::string loss_history_csv(const std::vector<double>& epoch_loss);

}  // namespace plate::recognizer
