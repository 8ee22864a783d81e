#include "plate/recognizer.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

namespace plate::recognizer {

// ---------------------------------------------------------------------------
// Training

TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& config,
                  const Alphabet& alphabet) {
  if (dataset.empty()) throw ArgumentError("train: empty dataset");
  if (config.learning_rate <= 0.0)
    throw ArgumentError("train: learning_rate must be > 0");
  if (config.epochs < 1) throw ArgumentError("train: epochs must be >= 1");
  if (config.batch_size < 1) throw ArgumentError("train: batch_size must be >= 1");
  if (config.jobs < 1) throw ArgumentError("train: jobs must be >= 1");
  if (alphabet.num_classes() != kClasses)
    throw ArchitectureError("train: alphabet must have " +
                            std::to_string(kClasses - 1) + " symbols");

  // Encode every label up front; unknown characters fail fast.
  std::vector<std::vector<int>> targets;
  targets.reserve(dataset.size());
  for (const auto& [strip, label] : dataset) targets.push_back(alphabet.encode(label));

  ModelParamsT<double> weights = init_params<double>(config.seed);

  const int n = static_cast<int>(dataset.size());
  const int batch = config.batch_size;
  const int jobs = std::min(config.jobs, batch);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<BackwardResult<double>> slot(static_cast<std::size_t>(batch));

  TrainResult out;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Shuffle stream depends on the seed and epoch only, never on the data.
    auto rng = substream(config.seed, 1 + static_cast<std::uint64_t>(epoch));
    shuffle(order, rng);

    double loss_sum = 0.0;
    long loss_count = 0;
    for (int start = 0; start < n; start += batch) {
      const int m = std::min(batch, n - start);
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(m));
      auto run = [&](int tid) {
        for (int k = tid; k < m; k += jobs) {
          try {
            const std::size_t idx = order[static_cast<std::size_t>(start + k)];
            slot[static_cast<std::size_t>(k)] =
                backward(weights, dataset[idx].first, targets[idx]);
          } catch (...) {
            errors[static_cast<std::size_t>(k)] = std::current_exception();
          }
        }
      };
      if (jobs == 1) {
        run(0);
      } else {
        std::vector<std::thread> pool;
        for (int tid = 1; tid < jobs; ++tid) pool.emplace_back(run, tid);
        run(0);
        for (auto& th : pool) th.join();
      }
      // Deterministic error propagation: lowest sample index wins.
      for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

      // Fixed-order reduction: the batch gradient is the mean of per-sample
      // gradients summed in sample-index order, so results do not depend on
      // the number of jobs.
      GradT<double> sum = GradT<double>::zero();
      long included = 0;
      for (int k = 0; k < m; ++k) {
        auto& r = slot[static_cast<std::size_t>(k)];
        if (!r.feasible) {
          ++out.skipped_samples;
          continue;
        }
        sum.add_scaled(r.grad, 1.0);
        loss_sum += r.loss;
        ++loss_count;
        ++included;
      }
      if (included == 0) continue;
      const double step = -config.learning_rate / static_cast<double>(included);
      for (int l = 0; l < 4; ++l) {
        weights.conv[static_cast<std::size_t>(l)].kernel +=
            step * sum.conv[static_cast<std::size_t>(l)].kernel;
        weights.conv[static_cast<std::size_t>(l)].bias +=
            step * sum.conv[static_cast<std::size_t>(l)].bias;
      }
      for (auto [w, g] : {std::pair{&weights.lstm_fwd, &sum.lstm_fwd},
                          std::pair{&weights.lstm_bwd, &sum.lstm_bwd}}) {
        w->w_input += step * g->w_input;
        w->w_recur += step * g->w_recur;
        w->bias += step * g->bias;
      }
      weights.proj_weight += step * sum.proj_weight;
      weights.proj_bias += step * sum.proj_bias;

      // Guard: report runaway updates as divergence, not as a shape error
      // from the next forward pass.
      bool finite = weights.proj_weight.allFinite() && weights.proj_bias.allFinite();
      for (const auto& c : weights.conv)
        finite = finite && c.kernel.allFinite() && c.bias.allFinite();
      for (const auto* d : {&weights.lstm_fwd, &weights.lstm_bwd})
        finite = finite && d->w_input.allFinite() && d->w_recur.allFinite() &&
                 d->bias.allFinite();
      if (!finite)
        throw DivergenceError("train: parameters became non-finite at epoch " +
                              std::to_string(epoch + 1));
    }

    if (loss_count == 0)
      throw DivergenceError("train: no feasible samples in epoch " +
                            std::to_string(epoch + 1));
    const double mean_loss = loss_sum / static_cast<double>(loss_count);
    out.epoch_loss.push_back(mean_loss);
    if (!std::isfinite(mean_loss) || mean_loss > 1e4)
      throw DivergenceError(
          "train: mean loss " + std::to_string(mean_loss) + " at epoch " +
          std::to_string(epoch + 1) + " exceeds the divergence guard (1e4)");
  }

  out.params = weights.cast<float>();
  return out;
}

// ---------------------------------------------------------------------------
// Prediction

Prediction predict(const ModelParams& params, const GrayImage& strip,
                   const Alphabet& alphabet) {
  if (alphabet.num_classes() != kClasses)
    throw ArchitectureError("predict: alphabet must have " +
                            std::to_string(kClasses - 1) + " symbols");
  const ModelParamsT<double> w = params.cast<double>();
  const Mat<double> logits = forward(w, strip);
  Prediction out;
  out.text = ctc::greedy_decode(logits, alphabet);
  const Mat<double> lsm = ctc::log_softmax(logits);
  double acc = 0.0;
  for (Eigen::Index t = 0; t < lsm.rows(); ++t)
    acc += std::exp(lsm.row(t).maxCoeff());
  out.confidence = acc / static_cast<double>(lsm.rows());
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'L', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& buf, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(buf, v);
}

// Serialize one tensor record; matrix data is emitted row-major regardless of
// Eigen's storage order.
template <class M>
void put_tensor(std::string& buf, const std::string& name,
                const std::vector<std::uint32_t>& dims, const M& m) {
  put_u32(buf, static_cast<std::uint32_t>(name.size()));
  buf += name;
  put_u32(buf, static_cast<std::uint32_t>(dims.size()));
  std::uint64_t count = 1;
  for (auto d : dims) {
    put_u32(buf, d);
    count *= d;
  }
  if (count != static_cast<std::uint64_t>(m.size()))
    throw ArchitectureError("checkpoint: dims do not cover tensor " + name);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32(buf, m(r, c));
}

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) {
    if (pos + n > buf.size())
      throw FormatError(std::string("checkpoint truncated while reading ") +
                        what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(
               static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)]))
           << (8 * i);
    pos += 4;
    return v;
  }
  float f32(const char* what) {
    const std::uint32_t v = u32(what);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
  bool at_end() const { return pos == buf.size(); }
};

struct LoadedTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

// The full expected table; dims are the logical tensor shapes.
std::vector<std::pair<std::string, std::vector<std::uint32_t>>> expected_table() {
  std::vector<std::pair<std::string, std::vector<std::uint32_t>>> t;
  for (int l = 0; l < 4; ++l) {
    const auto out = static_cast<std::uint32_t>(kChannels[static_cast<std::size_t>(l) + 1]);
    const auto in = static_cast<std::uint32_t>(kChannels[static_cast<std::size_t>(l)]);
    const std::string base = "conv" + std::to_string(l + 1);
    t.push_back({base + ".kernel", {out, in, 3, 3}});
    t.push_back({base + ".bias", {out}});
  }
  for (const char* dir : {"lstm_fwd", "lstm_bwd"}) {
    t.push_back({std::string(dir) + ".w_input", {kGateDim, kFrameDim}});
    t.push_back({std::string(dir) + ".w_recur", {kGateDim, kHidden}});
    t.push_back({std::string(dir) + ".bias", {kGateDim}});
  }
  t.push_back({"proj.weight", {kClasses, kFrameDim}});
  t.push_back({"proj.bias", {kClasses}});
  return t;
}

void fill_matrix(Mat<float>& m, Eigen::Index rows, Eigen::Index cols,
                 const std::vector<float>& values, const std::string& name) {
  m.resize(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const float v = values[k++];
      if (!std::isfinite(v))
        throw FormatError("checkpoint tensor " + name + " has non-finite values");
      m(r, c) = v;
    }
}

}  // namespace

void save_params(const ModelParams& params, const std::string& path) {
  detail::require_params(params);
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  for (int l = 0; l < 4; ++l) {
    const auto& c = params.conv[static_cast<std::size_t>(l)];
    const auto out = static_cast<std::uint32_t>(c.kernel.rows());
    const auto in = static_cast<std::uint32_t>(c.kernel.cols() / 9);
    const std::string base = "conv" + std::to_string(l + 1);
    put_tensor(buf, base + ".kernel", {out, in, 3, 3}, c.kernel);
    put_tensor(buf, base + ".bias", {out}, c.bias);
  }
  for (auto [name, d] : {std::pair{"lstm_fwd", &params.lstm_fwd},
                         std::pair{"lstm_bwd", &params.lstm_bwd}}) {
    put_tensor(buf, std::string(name) + ".w_input", {kGateDim, kFrameDim},
               d->w_input);
    put_tensor(buf, std::string(name) + ".w_recur", {kGateDim, kHidden},
               d->w_recur);
    put_tensor(buf, std::string(name) + ".bias", {kGateDim}, d->bias);
  }
  put_tensor(buf, "proj.weight", {kClasses, kFrameDim}, params.proj_weight);
  put_tensor(buf, "proj.bias", {kClasses}, params.proj_bias);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path);
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  Cursor cur{buf};

  const std::string magic = cur.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic (expected \"LPRM\")");
  const std::uint32_t version = cur.u32("version");
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported version " +
                      std::to_string(version));

  std::map<std::string, LoadedTensor> tensors;
  while (!cur.at_end()) {
    const std::uint32_t name_len = cur.u32("tensor name length");
    if (name_len == 0 || name_len > 256)
      throw FormatError("checkpoint: implausible tensor name length " +
                        std::to_string(name_len));
    const std::string name = cur.bytes(name_len, "tensor name");
    const std::uint32_t rank = cur.u32("tensor rank");
    if (rank == 0 || rank > 8)
      throw FormatError("checkpoint: implausible rank for tensor " + name);
    LoadedTensor t;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = cur.u32("tensor dims");
      if (d == 0) throw FormatError("checkpoint: zero dim in tensor " + name);
      t.dims.push_back(d);
      count *= d;
      if (count > (1u << 24))
        throw FormatError("checkpoint: tensor " + name + " too large");
    }
    t.values.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i)
      t.values.push_back(cur.f32("tensor values"));
    if (!tensors.emplace(name, std::move(t)).second)
      throw FormatError("checkpoint: duplicate tensor " + name);
  }

  const auto expected = expected_table();
  for (const auto& [name, loaded] : tensors) {
    bool known = false;
    for (const auto& [en, ed] : expected) known = known || en == name;
    if (!known) throw FormatError("checkpoint: unexpected tensor " + name);
  }

  ModelParams p;
  auto take = [&](const std::string& name,
                  const std::vector<std::uint32_t>& dims) -> const std::vector<float>& {
    auto it = tensors.find(name);
    if (it == tensors.end())
      throw FormatError("checkpoint: missing tensor " + name);
    if (it->second.dims != dims) {
      std::string got;
      for (auto d : it->second.dims) got += std::to_string(d) + " ";
      throw FormatError("checkpoint: tensor " + name +
                        " has unexpected shape [ " + got + "]");
    }
    return it->second.values;
  };
  for (int l = 0; l < 4; ++l) {
    const auto out = static_cast<std::uint32_t>(kChannels[static_cast<std::size_t>(l) + 1]);
    const auto in = static_cast<std::uint32_t>(kChannels[static_cast<std::size_t>(l)]);
    const std::string base = "conv" + std::to_string(l + 1);
    auto& c = p.conv[static_cast<std::size_t>(l)];
    fill_matrix(c.kernel, out, in * 9, take(base + ".kernel", {out, in, 3, 3}),
                base + ".kernel");
    Mat<float> b;
    fill_matrix(b, out, 1, take(base + ".bias", {out}), base + ".bias");
    c.bias = b;
  }
  for (auto [name, d] : {std::pair{"lstm_fwd", &p.lstm_fwd},
                         std::pair{"lstm_bwd", &p.lstm_bwd}}) {
    const std::string base(name);
    fill_matrix(d->w_input, kGateDim, kFrameDim,
                take(base + ".w_input", {kGateDim, kFrameDim}), base + ".w_input");
    fill_matrix(d->w_recur, kGateDim, kHidden,
                take(base + ".w_recur", {kGateDim, kHidden}), base + ".w_recur");
    Mat<float> b;
    fill_matrix(b, kGateDim, 1, take(base + ".bias", {kGateDim}), base + ".bias");
    d->bias = b;
  }
  fill_matrix(p.proj_weight, kClasses, kFrameDim,
              take("proj.weight", {kClasses, kFrameDim}), "proj.weight");
  Mat<float> pb;
  fill_matrix(pb, kClasses, 1, take("proj.bias", {kClasses}), "proj.bias");
  p.proj_bias = pb;

  detail::require_params(p);
  return p;
}

std::string loss_history_csv(const std::vector<double>& epoch_loss) {
  std::string out = "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, epoch_loss[i]);
    out += buf;
  }
  return out;
}

}  // namespace plate::recognizer
