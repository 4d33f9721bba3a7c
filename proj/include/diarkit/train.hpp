// diarkit/train.hpp
//
// A linear softmax classifier trained with the CE + CTC dual loss under
// AdamW, with early stopping on a held-out split.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "diarkit/embed.hpp"
#include "diarkit/error.hpp"
#include "diarkit/losses.hpp"
#include "diarkit/synth.hpp"

namespace diarkit {

enum class LrSchedule { kConstant, kCosine };

struct TrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  double weight_decay = 0.01;
  std::size_t early_stop_patience = 3;
  double dual_loss_lambda = 0.5;
  std::uint64_t rng_seed = 0;
  LrSchedule schedule = LrSchedule::kConstant;
  double validation_fraction = 0.2;

  void validate() const {
    if (!(learning_rate > 0.0) || batch_size == 0 || max_epochs == 0 || early_stop_patience == 0) {
      throw Error(ErrorCode::kInvalidArgument, "learning rate, batch size, epochs and patience must be positive");
    }
    if (!(weight_decay >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "weight_decay must be >= 0");
    if (!(dual_loss_lambda >= 0.0 && dual_loss_lambda <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "dual_loss_lambda must be in [0, 1]");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "validation_fraction must be in (0, 1)");
    }
  }
};

// Adam with decoupled weight decay. Decay multiplies decayed parameters by
// (1 - lr * decay) before the moment update is applied.
class AdamW {
 public:
  AdamW(std::size_t n_params, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8)
      : m_(n_params, 0.0), v_(n_params, 0.0), decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<double> params, std::span<const double> grads, std::span<const char> decay_mask,
            double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size() || decay_mask.size() != m_.size()) {
      throw Error(ErrorCode::kLengthMismatch, "AdamW parameter count mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const double shrink = 1.0 - lr * decay_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (decay_mask[i]) params[i] *= shrink;
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
      if (m_[i] != 0.0) params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

  std::size_t steps() const { return t_; }

 private:
  std::vector<double> m_, v_;
  double decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

// Output 0 is the CTC blank; speaker class c is output c + 1.
struct ToyModel {
  std::size_t outputs = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // outputs x dim, row-major
  std::vector<double> bias;     // outputs

  ToyModel() = default;
  ToyModel(std::size_t n_classes, std::size_t feature_dim)
      : outputs(n_classes + 1), dim(feature_dim), weights(outputs * feature_dim, 0.0), bias(outputs, 0.0) {}

  std::size_t num_classes() const { return outputs - 1; }

  std::vector<double> logits(std::span<const double> x) const {
    std::vector<double> z(bias);
    for (std::size_t v = 0; v < outputs; ++v) {
      for (std::size_t d = 0; d < dim; ++d) z[v] += weights[v * dim + d] * x[d];
    }
    return z;
  }

  // Most likely speaker class, ignoring the blank.
  std::size_t predict(std::span<const double> x) const {
    const auto z = logits(x);
    return static_cast<std::size_t>(std::max_element(z.begin() + 1, z.end()) - (z.begin() + 1));
  }
};

// Rows are [weights..., bias] per output.
inline EmbeddingMatrix to_matrix(const ToyModel &m) {
  EmbeddingMatrix out;
  out.count = m.outputs;
  out.dim = m.dim + 1;
  out.values.reserve(out.count * out.dim);
  for (std::size_t v = 0; v < m.outputs; ++v) {
    for (std::size_t d = 0; d < m.dim; ++d) out.values.push_back(static_cast<float>(m.weights[v * m.dim + d]));
    out.values.push_back(static_cast<float>(m.bias[v]));
  }
  return out;
}

inline ToyModel toy_model_from_matrix(const EmbeddingMatrix &m) {
  if (m.count < 2 || m.dim < 2) throw Error(ErrorCode::kCorruptHeader, "toy model needs >= 2 rows and columns");
  ToyModel t(m.count - 1, m.dim - 1);
  for (std::size_t v = 0; v < t.outputs; ++v) {
    for (std::size_t d = 0; d < t.dim; ++d) t.weights[v * t.dim + d] = m.values[v * m.dim + d];
    t.bias[v] = m.values[v * m.dim + t.dim];
  }
  return t;
}

// A contiguous run of frames and its target speaker sequence.
struct LabeledChunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<std::size_t> labels;
};

// Collapses consecutive equal frame labels.
inline std::vector<std::size_t> run_length_labels(std::span<const std::size_t> frame_labels) {
  std::vector<std::size_t> out;
  for (std::size_t l : frame_labels) {
    if (out.empty() || out.back() != l) out.push_back(l);
  }
  return out;
}

// Cuts the frames into chunks of `chunk_frames` with run-length targets.
inline std::vector<LabeledChunk> chunk_sequences(std::span<const std::size_t> frame_labels,
                                                 std::size_t chunk_frames) {
  if (chunk_frames == 0) throw Error(ErrorCode::kInvalidArgument, "chunk_frames must be positive");
  std::vector<LabeledChunk> out;
  for (std::size_t b = 0; b < frame_labels.size(); b += chunk_frames) {
    const std::size_t e = std::min(frame_labels.size(), b + chunk_frames);
    out.push_back({b, e, run_length_labels(frame_labels.subspan(b, e - b))});
  }
  return out;
}

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Seeded shuffle of [0, n), last round(n * fraction) items (at least one)
// form the validation set.
inline DataSplit split_train_validation(std::size_t n, double validation_fraction, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorCode::kEmptyData, "need at least two chunks to split");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(mix_seed(seed, 0x5b1));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * validation_fraction)), 1, n - 1);
  DataSplit s;
  s.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  s.validation.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  return s;
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ToyModel model;
  std::vector<EpochRecord> history;
  DataSplit split;
};

inline nlohmann::json history_to_json(std::span<const EpochRecord> history) {
  auto arr = nlohmann::json::array();
  for (const auto &r : history) {
    arr.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}});
  }
  return arr;
}

namespace detail {

// Dual loss of one chunk; accumulates d loss / d parameters into gw, gb
// when they are non-empty. CE is averaged over frames and CTC is divided by
// the chunk length so both terms are per-frame quantities.
inline double chunk_loss(const ToyModel &model, const FeatureMatrix &features,
                         std::span<const std::size_t> frame_labels, const LabeledChunk &chunk, double lambda,
                         std::span<double> gw, std::span<double> gb, double scale) {
  const std::size_t T = chunk.end - chunk.begin;
  const std::size_t V = model.outputs;
  FeatureMatrix lp(T, V);
  std::vector<std::vector<double>> probs(T);
  double ce = 0.0;
  FeatureMatrix dz(T, V);
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = features.row(chunk.begin + t);
    const auto z = model.logits(x);
    const auto row = log_softmax(z);
    std::copy(row.begin(), row.end(), lp.row(t).begin());
    probs[t].resize(V);
    for (std::size_t v = 0; v < V; ++v) probs[t][v] = std::exp(row[v]);
    const auto c = cross_entropy(z, frame_labels[chunk.begin + t] + 1);
    ce += c.loss;
    for (std::size_t v = 0; v < V; ++v) dz.at(t, v) += lambda * c.grad[v] / static_cast<double>(T);
  }
  ce /= static_cast<double>(T);

  std::vector<std::size_t> targets(chunk.labels.size());
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = chunk.labels[i] + 1;
  const auto ctc = ctc_loss(lp, targets, {.check_normalized = false});
  const double ctc_per_frame = ctc.loss / static_cast<double>(T);

  if (!gw.empty()) {
    // Chain rule through log-softmax: dz = g - p * sum(g).
    for (std::size_t t = 0; t < T; ++t) {
      double gsum = 0.0;
      for (std::size_t v = 0; v < V; ++v) gsum += ctc.grad.at(t, v);
      for (std::size_t v = 0; v < V; ++v) {
        dz.at(t, v) += (1.0 - lambda) * (ctc.grad.at(t, v) - probs[t][v] * gsum) / static_cast<double>(T);
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto x = features.row(chunk.begin + t);
      for (std::size_t v = 0; v < V; ++v) {
        const double g = dz.at(t, v) * scale;
        gb[v] += g;
        for (std::size_t d = 0; d < model.dim; ++d) gw[v * model.dim + d] += g * x[d];
      }
    }
  }
  return dual_loss(ce, ctc_per_frame, lambda);
}

}  // namespace detail

// Mean dual loss over the given chunks.
inline double evaluate_loss(const ToyModel &model, const FeatureMatrix &features,
                            std::span<const std::size_t> frame_labels, std::span<const LabeledChunk> chunks,
                            std::span<const std::size_t> which, double lambda) {
  double total = 0.0;
  for (std::size_t i : which) {
    total += detail::chunk_loss(model, features, frame_labels, chunks[i], lambda, {}, {}, 0.0);
  }
  return which.empty() ? 0.0 : total / static_cast<double>(which.size());
}

// Trains on the chunks in a seeded 80/20 split. When `chunks` is empty each
// frame becomes its own chunk. Stops after max_epochs or once validation
// loss has not improved for early_stop_patience consecutive epochs.
inline TrainResult train_toy(const FeatureMatrix &features, std::span<const std::size_t> frame_labels,
                             std::vector<LabeledChunk> chunks, const TrainConfig &config) {
  config.validate();
  if (features.rows == 0 || features.cols == 0) throw Error(ErrorCode::kEmptyData, "no training frames");
  if (frame_labels.size() != features.rows) {
    throw Error(ErrorCode::kLengthMismatch, "one label per feature row required");
  }
  std::size_t n_classes = 0;
  for (std::size_t l : frame_labels) n_classes = std::max(n_classes, l + 1);
  if (chunks.empty()) {
    for (std::size_t i = 0; i < features.rows; ++i) chunks.push_back({i, i + 1, {frame_labels[i]}});
  }
  for (const auto &c : chunks) {
    if (c.begin >= c.end || c.end > features.rows) {
      throw Error(ErrorCode::kIndexOutOfRange, "chunk outside the feature matrix");
    }
    for (std::size_t l : c.labels) {
      if (l >= n_classes) throw Error(ErrorCode::kLabelOutOfRange, "chunk label has no frames");
    }
  }

  TrainResult result;
  result.split = split_train_validation(chunks.size(), config.validation_fraction, config.rng_seed);
  ToyModel &model = result.model;
  model = ToyModel(n_classes, features.cols);
  std::mt19937_64 rng(mix_seed(config.rng_seed, 0x7e11));
  std::normal_distribution<double> init(0.0, 0.01);
  for (double &w : model.weights) w = init(rng);

  const std::size_t n_w = model.weights.size(), n_b = model.bias.size();
  std::vector<double> params(n_w + n_b), grads(n_w + n_b);
  std::vector<char> decay_mask(n_w + n_b, 0);
  std::fill(decay_mask.begin(), decay_mask.begin() + static_cast<std::ptrdiff_t>(n_w), 1);
  AdamW opt(params.size(), config.weight_decay);

  double best_val = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::vector<std::size_t> order = result.split.train;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double lr = config.learning_rate;
    if (config.schedule == LrSchedule::kCosine) {
      lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch - 1) /
                                  static_cast<double>(config.max_epochs)));
    }
    std::shuffle(order.begin(), order.end(), rng);
    double train_total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t e = std::min(order.size(), b + config.batch_size);
      const double scale = 1.0 / static_cast<double>(e - b);
      std::fill(grads.begin(), grads.end(), 0.0);
      std::span<double> gw(grads.data(), n_w), gb(grads.data() + n_w, n_b);
      for (std::size_t k = b; k < e; ++k) {
        train_total += detail::chunk_loss(model, features, frame_labels, chunks[order[k]],
                                          config.dual_loss_lambda, gw, gb, scale);
      }
      std::copy(model.weights.begin(), model.weights.end(), params.begin());
      std::copy(model.bias.begin(), model.bias.end(), params.begin() + static_cast<std::ptrdiff_t>(n_w));
      opt.step(params, grads, decay_mask, lr);
      std::copy(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(n_w), model.weights.begin());
      std::copy(params.begin() + static_cast<std::ptrdiff_t>(n_w), params.end(), model.bias.begin());
    }
    const double val = evaluate_loss(model, features, frame_labels, chunks, result.split.validation,
                                     config.dual_loss_lambda);
    result.history.push_back({epoch, train_total / static_cast<double>(order.size()), val});
    if (val < best_val) {
      best_val = val;
      stale = 0;
    } else if (++stale >= config.early_stop_patience) {
      break;
    }
  }
  return result;
}

}  // namespace diarkit
