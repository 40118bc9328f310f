#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tsaudit/errors.hpp"
#include "tsaudit/grid.hpp"
#include "tsaudit/rng.hpp"
#include "tsaudit/tensor.hpp"

// The three classifier families of the audit: a stacked LSTM read out from
// its last hidden state, a dilated causal temporal ConvNet with residual
// blocks and global average pooling, and a small self-attention encoder with
// learned positional embeddings. All end in linear -> softmax.

namespace tsaudit::models {

using autodiff::Tensor;

enum class Arch { Recurrent, TemporalConv, Attention };

inline std::string_view to_string(Arch a) {
  switch (a) {
    case Arch::Recurrent: return "lstm";
    case Arch::TemporalConv: return "tcn";
    case Arch::Attention: return "attention";
  }
  return "?";
}

inline Arch arch_from_string(std::string_view s) {
  if (s == "lstm" || s == "recurrent") return Arch::Recurrent;
  if (s == "tcn" || s == "temporal_conv") return Arch::TemporalConv;
  if (s == "attention" || s == "transformer") return Arch::Attention;
  throw ConfigError("unsupported architecture: " + std::string(s));
}

struct ClassifierConfig {
  Arch arch = Arch::Recurrent;
  std::size_t hidden = 32;
  std::size_t layers = 1;
  std::size_t num_classes = 2;
  std::size_t input_features = 4;   // alpha
  std::size_t seq_len = 20;         // T
  std::uint64_t seed = 1;

  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  std::size_t early_stop_patience = 10;
};

struct EpochStats {
  std::size_t epoch = 0;  // 0 is the pre-training state
  double loss = 0.0;
  double accuracy = 0.0;
};

struct FinalStats {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct Checkpoint {
  ClassifierConfig config;
  std::vector<double> parameters;
  std::vector<EpochStats> history;
  FinalStats final_stats;
  std::uint64_t dataset_fingerprint = 0;
};

struct TrainExample {
  Grid frame;
  std::size_t label = 0;
};

class Classifier {
 public:
  static Classifier build(const ClassifierConfig& cfg) {
    validate(cfg);
    Classifier m;
    m.cfg_ = cfg;
    rng::SplitMix64 g(rng::derive_seed(cfg.seed, "model-init"));
    switch (cfg.arch) {
      case Arch::Recurrent: m.build_lstm(g); break;
      case Arch::TemporalConv: m.build_tcn(g); break;
      case Arch::Attention: m.build_attention(g); break;
    }
    return m;
  }

  const ClassifierConfig& config() const { return cfg_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.numel();
    return n;
  }

  std::vector<double> flatten_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& p : params_) {
      out.insert(out.end(), p.value().begin(), p.value().end());
    }
    return out;
  }

  void load_parameters(const std::vector<double>& flat) {
    if (flat.size() != parameter_count()) {
      throw DataError("parameter payload does not match the config-derived count");
    }
    std::size_t offset = 0;
    for (auto& p : params_) {
      std::copy(flat.begin() + offset, flat.begin() + offset + p.numel(),
                p.value().begin());
      offset += p.numel();
    }
  }

  void set_trainable(bool on) {
    for (auto& p : params_) p.set_requires_grad(on);
  }

  // Graph-building forward pass: x is [input_features, seq_len], the result
  // is the [num_classes, 1] logits vector.
  Tensor forward(const Tensor& x) const {
    if (x.ndim() != 2 || x.dim(0) != cfg_.input_features || x.dim(1) != cfg_.seq_len) {
      throw DimensionError("forward: frame shape does not match the model config");
    }
    switch (cfg_.arch) {
      case Arch::Recurrent: return forward_lstm(x);
      case Arch::TemporalConv: return forward_tcn(x);
      case Arch::Attention: return forward_attention(x);
    }
    throw ConfigError("unsupported architecture");
  }

  std::vector<double> logits(const Grid& frame) const {
    autodiff::Tape::NoGrad ng;
    return forward(to_tensor(frame)).value();
  }

  std::vector<double> predict_proba(const Grid& frame) const {
    return autodiff::softmax_values(logits(frame));
  }

  std::size_t predict(const Grid& frame) const {
    const auto p = predict_proba(frame);
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  // Pre-softmax score of one class; the quantity the explainers perturb.
  double class_score(const Grid& frame, std::size_t cls) const {
    const auto z = logits(frame);
    if (cls >= z.size()) throw IndexError("class_score: class out of range");
    return z[cls];
  }

  // d(score of cls)/d(input cell), aligned with the frame.
  Grid class_score_gradient(const Grid& frame, std::size_t cls,
                            bool use_probability = false) const {
    auto fwd = [this](const Tensor& x) { return forward(x); };
    auto g = autodiff::input_gradient(fwd, frame.data, {frame.rows, frame.cols}, cls,
                                      use_probability);
    return Grid(frame.rows, frame.cols, std::move(g));
  }

  static Classifier from_checkpoint(const Checkpoint& ckpt) {
    Classifier m = build(ckpt.config);
    m.load_parameters(ckpt.parameters);
    m.set_trainable(false);
    return m;
  }

  static Tensor to_tensor(const Grid& g) {
    return Tensor::from(g.data, {g.rows, g.cols});
  }

 private:
  static void validate(const ClassifierConfig& cfg) {
    if (cfg.hidden < 4) throw ConfigError("hidden size must be at least 4");
    if (cfg.layers < 1) throw ConfigError("need at least one layer");
    if (cfg.num_classes < 2) throw ConfigError("need at least two classes");
    if (cfg.input_features < 1 || cfg.seq_len < 1) {
      throw ConfigError("bad input geometry");
    }
    if (cfg.arch == Arch::Attention && cfg.hidden % 2 != 0) {
      throw ConfigError("attention model width must be even (two heads)");
    }
  }

  Tensor add_param(std::size_t rows, std::size_t cols, rng::SplitMix64& g,
                   double stddev) {
    std::vector<double> v(rows * cols);
    for (double& x : v) x = stddev == 0.0 ? 0.0 : stddev * rng::gaussian(g);
    Tensor t = Tensor::from(std::move(v), {rows, cols});
    t.set_requires_grad(true);
    params_.push_back(t);
    return t;
  }

  // ---- LSTM: gates ordered i, f, g, o along the 4H rows; two bias vectors
  // per layer (input-side and recurrent-side), PyTorch-style accounting.
  void build_lstm(rng::SplitMix64& g) {
    const std::size_t h = cfg_.hidden;
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      const std::size_t in = l == 0 ? cfg_.input_features : h;
      lstm_.push_back({
          add_param(4 * h, in, g, 1.0 / std::sqrt(static_cast<double>(in))),
          add_param(4 * h, h, g, 1.0 / std::sqrt(static_cast<double>(h))),
          add_param(4 * h, 1, g, 0.0),
          add_param(4 * h, 1, g, 0.0),
      });
      // forget-gate bias starts at 1 so early gradients flow through time
      for (std::size_t i = h; i < 2 * h; ++i) lstm_.back().b_ih.value()[i] = 1.0;
    }
    head_w_ = add_param(cfg_.num_classes, h, g, 1.0 / std::sqrt(static_cast<double>(h)));
    head_b_ = add_param(cfg_.num_classes, 1, g, 0.0);
  }

  Tensor forward_lstm(const Tensor& x) const {
    using namespace autodiff;
    const std::size_t h = cfg_.hidden;
    std::vector<Tensor> hs(cfg_.layers), cs(cfg_.layers), bias(cfg_.layers);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      hs[l] = Tensor::zeros({h, 1});
      cs[l] = Tensor::zeros({h, 1});
      bias[l] = add(lstm_[l].b_ih, lstm_[l].b_hh);
    }
    for (std::size_t t = 0; t < cfg_.seq_len; ++t) {
      Tensor in = column(x, t);
      for (std::size_t l = 0; l < cfg_.layers; ++l) {
        Tensor z = add(add(matmul(lstm_[l].w_in, in), matmul(lstm_[l].w_rec, hs[l])),
                       bias[l]);
        Tensor gi = sigmoid(slice_rows(z, 0, h));
        Tensor gf = sigmoid(slice_rows(z, h, 2 * h));
        Tensor gg = autodiff::tanh(slice_rows(z, 2 * h, 3 * h));
        Tensor go = sigmoid(slice_rows(z, 3 * h, 4 * h));
        cs[l] = add(mul(gf, cs[l]), mul(gi, gg));
        hs[l] = mul(go, autodiff::tanh(cs[l]));
        in = hs[l];
      }
    }
    return add(matmul(head_w_, hs[cfg_.layers - 1]), head_b_);
  }

  // ---- TCN: `layers` residual blocks with dilation 1,2,4,... and kernel 3;
  // two causal convolutions per block, 1x1 skip when channels change.
  void build_tcn(rng::SplitMix64& g) {
    const std::size_t h = cfg_.hidden;
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      const std::size_t in = l == 0 ? cfg_.input_features : h;
      TcnBlock block;
      block.dilation = std::size_t{1} << l;
      const double s_in = 1.0 / std::sqrt(static_cast<double>(3 * in));
      const double s_h = 1.0 / std::sqrt(static_cast<double>(3 * h));
      for (int k = 0; k < 3; ++k) block.conv1.push_back(add_param(h, in, g, s_in));
      block.bias1 = add_param(h, 1, g, 0.0);
      for (int k = 0; k < 3; ++k) block.conv2.push_back(add_param(h, h, g, s_h));
      block.bias2 = add_param(h, 1, g, 0.0);
      if (in != h) {
        block.skip_w = add_param(h, in, g, 1.0 / std::sqrt(static_cast<double>(in)));
        block.skip_b = add_param(h, 1, g, 0.0);
      }
      tcn_.push_back(std::move(block));
    }
    head_w_ = add_param(cfg_.num_classes, h, g, 1.0 / std::sqrt(static_cast<double>(h)));
    head_b_ = add_param(cfg_.num_classes, 1, g, 0.0);
  }

  static Tensor causal_conv(const Tensor& x, const std::vector<Tensor>& taps,
                            const Tensor& bias, std::size_t dilation) {
    using namespace autodiff;
    const std::size_t kernel = taps.size();
    Tensor acc = matmul(taps[kernel - 1], x);  // zero shift
    for (std::size_t k = kernel - 1; k-- > 0;) {
      const std::size_t shift = (kernel - 1 - k) * dilation;
      acc = add(acc, matmul(taps[k], shift_columns_right(x, shift)));
    }
    return add_col_broadcast(acc, bias);
  }

  Tensor forward_tcn(const Tensor& x) const {
    using namespace autodiff;
    Tensor cur = x;
    for (const auto& block : tcn_) {
      Tensor a = relu(causal_conv(cur, block.conv1, block.bias1, block.dilation));
      Tensor y = causal_conv(a, block.conv2, block.bias2, block.dilation);
      Tensor skip = block.skip_w.has_value()
                        ? add_col_broadcast(matmul(*block.skip_w, cur), *block.skip_b)
                        : cur;
      cur = relu(add(y, skip));
    }
    return add(matmul(head_w_, row_mean(cur)), head_b_);
  }

  // ---- Attention: learned positional embeddings, two heads per block,
  // per-head output projections summed (equivalent to concat + projection),
  // residual two-layer feed-forward, mean pooling over time.
  void build_attention(rng::SplitMix64& g) {
    const std::size_t m = cfg_.hidden;
    const std::size_t dk = m / 2;
    const std::size_t f = 2 * m;
    const double s_m = 1.0 / std::sqrt(static_cast<double>(m));
    attn_in_w_ = add_param(m, cfg_.input_features, g,
                           1.0 / std::sqrt(static_cast<double>(cfg_.input_features)));
    attn_in_b_ = add_param(m, 1, g, 0.0);
    attn_pos_ = add_param(m, cfg_.seq_len, g, 0.1);
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
      AttnBlock block;
      block.ln1_gain = add_param(m, 1, g, 0.0);
      block.ln1_bias = add_param(m, 1, g, 0.0);
      std::fill(block.ln1_gain.value().begin(), block.ln1_gain.value().end(), 1.0);
      for (int head = 0; head < 2; ++head) {
        block.heads.push_back({
            add_param(dk, m, g, s_m),
            add_param(dk, m, g, s_m),
            add_param(dk, m, g, s_m),
            add_param(m, dk, g, 1.0 / std::sqrt(static_cast<double>(dk))),
        });
      }
      block.ln2_gain = add_param(m, 1, g, 0.0);
      block.ln2_bias = add_param(m, 1, g, 0.0);
      std::fill(block.ln2_gain.value().begin(), block.ln2_gain.value().end(), 1.0);
      block.ffn_w1 = add_param(f, m, g, s_m);
      block.ffn_b1 = add_param(f, 1, g, 0.0);
      block.ffn_w2 = add_param(m, f, g, 1.0 / std::sqrt(static_cast<double>(f)));
      block.ffn_b2 = add_param(m, 1, g, 0.0);
      attn_.push_back(std::move(block));
    }
    head_w_ = add_param(cfg_.num_classes, m, g, s_m);
    head_b_ = add_param(cfg_.num_classes, 1, g, 0.0);
  }

  Tensor forward_attention(const Tensor& x) const {
    using namespace autodiff;
    const std::size_t dk = cfg_.hidden / 2;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    Tensor h = add(add_col_broadcast(matmul(attn_in_w_, x), attn_in_b_), attn_pos_);
    for (const auto& block : attn_) {
      // pre-norm residual blocks
      Tensor hn = layer_norm_columns(h, block.ln1_gain, block.ln1_bias);
      Tensor mixed;
      bool first = true;
      for (const auto& head : block.heads) {
        Tensor q = matmul(head.wq, hn);
        Tensor k = matmul(head.wk, hn);
        Tensor v = matmul(head.wv, hn);
        Tensor weights = softmax_columns(scale(matmul(transpose(k), q), inv_sqrt_dk));
        Tensor out = matmul(head.wo, matmul(v, weights));
        mixed = first ? out : add(mixed, out);
        first = false;
      }
      h = add(h, mixed);
      Tensor fn = layer_norm_columns(h, block.ln2_gain, block.ln2_bias);
      Tensor f = relu(add_col_broadcast(matmul(block.ffn_w1, fn), block.ffn_b1));
      h = add(h, add_col_broadcast(matmul(block.ffn_w2, f), block.ffn_b2));
    }
    return add(matmul(head_w_, row_mean(h)), head_b_);
  }

  struct LstmLayer {
    Tensor w_in, w_rec, b_ih, b_hh;
  };
  struct TcnBlock {
    std::vector<Tensor> conv1, conv2;
    Tensor bias1, bias2;
    std::optional<Tensor> skip_w, skip_b;
    std::size_t dilation = 1;
  };
  struct AttnHead {
    Tensor wq, wk, wv, wo;
  };
  struct AttnBlock {
    std::vector<AttnHead> heads;
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
    Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  };

  ClassifierConfig cfg_;
  std::vector<Tensor> params_;
  std::vector<LstmLayer> lstm_;
  std::vector<TcnBlock> tcn_;
  std::vector<AttnBlock> attn_;
  Tensor attn_in_w_, attn_in_b_, attn_pos_;
  Tensor head_w_, head_b_;
};

// Fully seeded Adam training loop. Epoch 0 in the history is the untrained
// state; each later entry holds the static train loss/accuracy after that
// epoch. The returned checkpoint carries the best-loss parameters, so its
// final loss never exceeds the initial one.
inline Checkpoint train(Classifier& model, const std::vector<TrainExample>& train_set,
                        const TrainConfig& cfg,
                        const std::vector<TrainExample>* eval_set = nullptr,
                        std::uint64_t dataset_fingerprint = 0) {
  using namespace autodiff;
  if (train_set.empty()) throw DataError("train: empty training set");
  if (cfg.learning_rate < 0.0) throw ConfigError("train: negative learning rate");
  if (cfg.epochs < 1) throw ConfigError("train: need at least one epoch");
  model.set_trainable(true);

  auto evaluate = [&](const std::vector<TrainExample>& set) {
    Tape::NoGrad ng;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& ex : set) {
      const auto z = model.logits(ex.frame);
      const auto p = softmax_values(z);
      loss_sum += -std::log(std::max(p[ex.label], 1e-300));
      const std::size_t pred =
          static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      correct += pred == ex.label;
    }
    return std::pair<double, double>{loss_sum / static_cast<double>(set.size()),
                                     static_cast<double>(correct) / set.size()};
  };

  std::vector<EpochStats> history;
  auto [loss0, acc0] = evaluate(train_set);
  history.push_back({0, loss0, acc0});

  double best_loss = loss0;
  std::vector<double> best_params = model.flatten_parameters();
  std::size_t since_best = 0;

  // Adam state
  const std::size_t n_params = model.parameter_count();
  std::vector<double> m1(n_params, 0.0), m2(n_params, 0.0);
  std::size_t adam_t = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::SplitMix64 g(rng::derive_seed(cfg.seed, "batch-order", epoch));
    rng::shuffle(order, g);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      for (auto& p : model.parameters()) p.zero_grad();
      for (std::size_t i = start; i < stop; ++i) {
        const auto& ex = train_set[order[i]];
        Tape tape;
        Tape::Scope scope(tape);
        Tensor logits = model.forward(Classifier::to_tensor(ex.frame));
        Tensor loss = scale(softmax_cross_entropy(logits, ex.label), inv_batch);
        if (!std::isfinite(loss.item())) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch));
        }
        tape.backward(loss);
      }
      ++adam_t;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
      std::size_t offset = 0;
      for (auto& p : model.parameters()) {
        const auto grad = p.grad();
        for (std::size_t i = 0; i < grad.size(); ++i) {
          const std::size_t j = offset + i;
          m1[j] = cfg.adam_beta1 * m1[j] + (1.0 - cfg.adam_beta1) * grad[i];
          m2[j] = cfg.adam_beta2 * m2[j] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
          p.value()[i] -=
              cfg.learning_rate * (m1[j] / bc1) / (std::sqrt(m2[j] / bc2) + cfg.adam_eps);
        }
        offset += grad.size();
      }
    }
    auto [loss, acc] = evaluate(train_set);
    if (!std::isfinite(loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    }
    history.push_back({epoch, loss, acc});
    if (loss < best_loss) {
      best_loss = loss;
      best_params = model.flatten_parameters();
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      break;
    }
  }

  model.load_parameters(best_params);
  model.set_trainable(false);

  Checkpoint ckpt;
  ckpt.config = model.config();
  ckpt.parameters = std::move(best_params);
  ckpt.history = std::move(history);
  auto [fl, fa] = evaluate(train_set);
  ckpt.final_stats.train_loss = fl;
  ckpt.final_stats.train_accuracy = fa;
  if (eval_set != nullptr && !eval_set->empty()) {
    ckpt.final_stats.test_accuracy = evaluate(*eval_set).second;
  }
  ckpt.dataset_fingerprint = dataset_fingerprint;
  return ckpt;
}

// ---------------------------------------------------------------------------
// Checkpoint container: text header, then the parameter payload as raw
// little-endian 64-bit floats.

namespace detail {

inline void write_doubles_le(std::ostream& out, const std::vector<double>& v) {
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap64(bits);
    }
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
}

inline std::vector<double> read_doubles_le(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[8];
    in.read(buf, 8);
    if (!in) throw DataError("checkpoint: truncated parameter payload");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap64(bits);
    }
    double d;
    std::memcpy(&d, &bits, sizeof d);
    v[i] = d;
  }
  return v;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  char buf[160];
  out << "tsaudit-checkpoint v1\n";
  out << "arch " << to_string(ckpt.config.arch) << "\n";
  out << "hidden " << ckpt.config.hidden << "\n";
  out << "layers " << ckpt.config.layers << "\n";
  out << "classes " << ckpt.config.num_classes << "\n";
  out << "features " << ckpt.config.input_features << "\n";
  out << "seq_len " << ckpt.config.seq_len << "\n";
  out << "seed " << ckpt.config.seed << "\n";
  out << "fingerprint " << ckpt.dataset_fingerprint << "\n";
  out << "history " << ckpt.history.size() << "\n";
  for (const auto& e : ckpt.history) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", e.epoch, e.loss, e.accuracy);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "final %.17g %.17g %.17g\n", ckpt.final_stats.train_loss,
                ckpt.final_stats.train_accuracy, ckpt.final_stats.test_accuracy);
  out << buf;
  out << "params " << ckpt.parameters.size() << "\n";
  detail::write_doubles_le(out, ckpt.parameters);
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint file: " + path);
  save_checkpoint(ckpt, out);
}

inline Checkpoint load_checkpoint(std::istream& in) {
  Checkpoint ckpt;
  std::string line;
  if (!std::getline(in, line) || line != "tsaudit-checkpoint v1") {
    throw DataError("checkpoint: unrecognized container header");
  }
  std::size_t param_count = 0;
  std::size_t history_count = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "arch") {
      std::string v;
      ls >> v;
      ckpt.config.arch = arch_from_string(v);
    } else if (key == "hidden") ls >> ckpt.config.hidden;
    else if (key == "layers") ls >> ckpt.config.layers;
    else if (key == "classes") ls >> ckpt.config.num_classes;
    else if (key == "features") ls >> ckpt.config.input_features;
    else if (key == "seq_len") ls >> ckpt.config.seq_len;
    else if (key == "seed") ls >> ckpt.config.seed;
    else if (key == "fingerprint") ls >> ckpt.dataset_fingerprint;
    else if (key == "history") {
      ls >> history_count;
      for (std::size_t i = 0; i < history_count; ++i) {
        if (!std::getline(in, line)) throw DataError("checkpoint: truncated history");
        EpochStats e;
        std::istringstream hs(line);
        hs >> e.epoch >> e.loss >> e.accuracy;
        if (!hs) throw DataError("checkpoint: malformed history line");
        ckpt.history.push_back(e);
      }
    } else if (key == "final") {
      ls >> ckpt.final_stats.train_loss >> ckpt.final_stats.train_accuracy >>
          ckpt.final_stats.test_accuracy;
    } else if (key == "params") {
      ls >> param_count;
      break;
    } else {
      throw DataError("checkpoint: unknown header key '" + key + "'");
    }
  }
  ckpt.parameters = detail::read_doubles_le(in, param_count);
  // the count must match the config-derived count exactly
  Classifier probe = Classifier::build(ckpt.config);
  if (probe.parameter_count() != ckpt.parameters.size()) {
    throw DataError("checkpoint: parameter count does not match the config");
  }
  return ckpt;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint file: " + path);
  return load_checkpoint(in);
}

}  // namespace tsaudit::models
