// diarkit/losses.hpp
//
// Softmax cross-entropy, CTC (log-domain forward-backward) and their convex
// combination.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "diarkit/embed.hpp"
#include "diarkit/error.hpp"

namespace diarkit {

inline constexpr std::size_t kBlank = 0;

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// grad is d loss / d logits = softmax - one_hot.
inline LossGrad cross_entropy(std::span<const double> logits, std::size_t true_class) {
  if (true_class >= logits.size()) throw Error(ErrorCode::kIndexOutOfRange, "true class out of range");
  for (double v : logits) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite logit");
  }
  const auto lp = log_softmax(logits);
  LossGrad out;
  out.loss = -lp[true_class];
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(lp[i]);
  out.grad[true_class] -= 1.0;
  return out;
}

struct CtcOptions {
  // Reject rows whose probabilities do not sum to 1 within tolerance.
  bool check_normalized = true;
  double normalization_tolerance = 1e-6;
};

struct CtcResult {
  double loss = 0.0;
  // d loss / d log_probs, same shape as the input lattice.
  FeatureMatrix grad;
};

// Minimum frames needed to emit `labels`: one per label plus a blank between
// each pair of equal neighbours.
inline std::size_t ctc_min_frames(std::span<const std::size_t> labels) {
  std::size_t need = labels.size();
  for (std::size_t i = 1; i < labels.size(); ++i) need += labels[i] == labels[i - 1] ? 1 : 0;
  return need;
}

// log_probs is T x V with the blank at column 0; labels use 1..V-1.
inline CtcResult ctc_loss(const FeatureMatrix &log_probs, std::span<const std::size_t> labels,
                          const CtcOptions &opts = {}) {
  const std::size_t T = log_probs.rows, V = log_probs.cols;
  if (T == 0 || V < 2) throw Error(ErrorCode::kInvalidArgument, "CTC lattice needs T >= 1 and V >= 2");
  for (std::size_t l : labels) {
    if (l == kBlank || l >= V) throw Error(ErrorCode::kLabelOutOfRange, "CTC label is blank or >= V");
  }
  if (opts.check_normalized) {
    for (std::size_t t = 0; t < T; ++t) {
      double s = 0.0;
      for (double v : log_probs.row(t)) s += std::exp(v);
      if (!(std::abs(s - 1.0) <= opts.normalization_tolerance)) {
        throw Error(ErrorCode::kUnnormalizedRow, "CTC row " + std::to_string(t) + " does not sum to 1");
      }
    }
  }
  if (ctc_min_frames(labels) > T) throw Error(ErrorCode::kImpossibleAlignment, "too few frames for labels");

  // Extended sequence: blank, l1, blank, l2, ..., blank.
  const std::size_t S = 2 * labels.size() + 1;
  std::vector<std::size_t> ext(S, kBlank);
  for (std::size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  auto can_skip = [&](std::size_t s) { return s >= 2 && ext[s] != kBlank && ext[s] != ext[s - 2]; };

  const double ninf = -std::numeric_limits<double>::infinity();
  // alpha includes the emission at t; beta excludes it.
  FeatureMatrix alpha(T, S), beta(T, S);
  std::fill(alpha.data.begin(), alpha.data.end(), ninf);
  std::fill(beta.data.begin(), beta.data.end(), ninf);
  alpha.at(0, 0) = log_probs.at(0, ext[0]);
  if (S > 1) alpha.at(0, 1) = log_probs.at(0, ext[1]);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha.at(t - 1, s);
      if (s >= 1) a = log_sum_exp(a, alpha.at(t - 1, s - 1));
      if (can_skip(s)) a = log_sum_exp(a, alpha.at(t - 1, s - 2));
      alpha.at(t, s) = a == ninf ? ninf : a + log_probs.at(t, ext[s]);
    }
  }
  beta.at(T - 1, S - 1) = 0.0;
  if (S > 1) beta.at(T - 1, S - 2) = 0.0;
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t s = 0; s < S; ++s) {
      double b = beta.at(t + 1, s) + log_probs.at(t + 1, ext[s]);
      if (s + 1 < S) b = log_sum_exp(b, beta.at(t + 1, s + 1) + log_probs.at(t + 1, ext[s + 1]));
      if (s + 2 < S && can_skip(s + 2)) {
        b = log_sum_exp(b, beta.at(t + 1, s + 2) + log_probs.at(t + 1, ext[s + 2]));
      }
      beta.at(t, s) = b;
    }
  }

  double log_p = alpha.at(T - 1, S - 1);
  if (S > 1) log_p = log_sum_exp(log_p, alpha.at(T - 1, S - 2));
  if (!std::isfinite(log_p)) throw Error(ErrorCode::kImpossibleAlignment, "no alignment has nonzero probability");

  CtcResult out;
  out.loss = -log_p;
  out.grad = FeatureMatrix(T, V);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      const double ab = alpha.at(t, s) + beta.at(t, s);
      if (ab != ninf) out.grad.at(t, ext[s]) -= std::exp(ab - log_p);
    }
  }
  return out;
}

inline double dual_loss(double ce, double ctc, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be in [0, 1]");
  if (lambda == 1.0) return ce;
  if (lambda == 0.0) return ctc;
  return lambda * ce + (1.0 - lambda) * ctc;
}

}  // namespace diarkit
