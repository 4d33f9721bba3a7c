// diarkit/embed.hpp
//
// Segment embeddings: MFCC (+delta, +delta-delta) features pooled to
// mean/std vectors, and a loader for externally computed embeddings.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/error.hpp"
#include "diarkit/fft.hpp"
#include "diarkit/vad.hpp"

namespace diarkit {

// Row-major frames x dims matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double &at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

struct MfccConfig {
  std::size_t n_mels = 40;
  std::size_t n_coeffs = 13;
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_fft = 512;
  double low_hz = 20.0;
  double high_hz = 0.0;  // 0 means Nyquist
  // Columns of the 39-dim frame vector kept for pooling (13 cepstra + 13 deltas).
  std::size_t pooled_dims = 26;

  std::size_t feature_dim() const { return 3 * n_coeffs; }
  std::size_t embedding_dim() const { return 2 * pooled_dims; }

  void validate() const {
    if (n_mels == 0 || n_coeffs == 0 || n_coeffs >= n_mels) {
      throw Error(ErrorCode::kInvalidArgument, "need 0 < n_coeffs < n_mels");
    }
    if (!(frame_ms > 0.0) || !(hop_ms > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "frame and hop must be positive");
    }
    if (pooled_dims == 0 || pooled_dims > feature_dim()) {
      throw Error(ErrorCode::kInvalidArgument, "pooled_dims must be in [1, 3 * n_coeffs]");
    }
  }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular HTK-style filters over the n_fft / 2 + 1 power bins.
inline std::vector<std::vector<double>> mel_filterbank(const MfccConfig &cfg, int sample_rate_hz) {
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const double nyquist = 0.5 * sample_rate_hz;
  const double high = cfg.high_hz > 0.0 ? std::min(cfg.high_hz, nyquist) : nyquist;
  const double mel_lo = hz_to_mel(cfg.low_hz), mel_hi = hz_to_mel(high);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(cfg.n_mels + 1));
  }
  std::vector<std::vector<double>> fb(cfg.n_mels, std::vector<double>(bins, 0.0));
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(cfg.n_fft);
      if (f > lo && f < hi) fb[m][k] = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
    }
  }
  return fb;
}

namespace detail {

inline void append_deltas(FeatureMatrix &m, std::size_t src_col, std::size_t dst_col,
                          std::size_t width) {
  constexpr int kWindow = 2;
  const double denom = 2.0 * (1 * 1 + 2 * 2);
  const auto rows = static_cast<std::ptrdiff_t>(m.rows);
  for (std::ptrdiff_t t = 0; t < rows; ++t) {
    for (std::size_t c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int n = 1; n <= kWindow; ++n) {
        const auto ahead = static_cast<std::size_t>(std::min<std::ptrdiff_t>(rows - 1, t + n));
        const auto behind = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, t - n));
        acc += n * (m.at(ahead, src_col + c) - m.at(behind, src_col + c));
      }
      m.at(static_cast<std::size_t>(t), dst_col + c) = acc / denom;
    }
  }
}

}  // namespace detail

// Static cepstra c1..cN (c0 dropped) for every frame of [onset, offset).
inline FeatureMatrix static_cepstra(const AudioBuffer &buf, double onset_s, double offset_s,
                                    const MfccConfig &cfg) {
  cfg.validate();
  constexpr double kEps = 1e-9;
  if (onset_s < -kEps || offset_s > buf.duration_s() + kEps || offset_s <= onset_s) {
    throw Error(ErrorCode::kSegmentOutOfRange, "segment lies outside the buffer");
  }
  const double sr = buf.sample_rate_hz;
  const auto frame = static_cast<std::size_t>(std::lround(cfg.frame_ms * sr / 1000.0));
  const auto hop = static_cast<std::size_t>(std::lround(cfg.hop_ms * sr / 1000.0));
  const auto begin = static_cast<std::size_t>(std::max(0.0, std::round(onset_s * sr)));
  const auto end = std::min(buf.size(), static_cast<std::size_t>(std::round(offset_s * sr)));
  const std::size_t len = end > begin ? end - begin : 0;
  if (len < frame) throw Error(ErrorCode::kTooShort, "segment shorter than one MFCC frame");
  const std::size_t n_fft = std::max(cfg.n_fft, next_pow2(frame));

  MfccConfig fb_cfg = cfg;
  fb_cfg.n_fft = n_fft;
  const auto fb = mel_filterbank(fb_cfg, buf.sample_rate_hz);
  const auto window = hamming_window(frame);
  const std::size_t n_frames = 1 + (len - frame) / hop;
  const std::size_t m_count = cfg.n_mels;

  std::vector<std::vector<double>> dct(cfg.n_coeffs, std::vector<double>(m_count));
  const double scale = std::sqrt(2.0 / static_cast<double>(m_count));
  for (std::size_t k = 0; k < cfg.n_coeffs; ++k) {
    for (std::size_t m = 0; m < m_count; ++m) {
      dct[k][m] = scale * std::cos(std::numbers::pi * static_cast<double>(k + 1) *
                                   (static_cast<double>(m) + 0.5) / static_cast<double>(m_count));
    }
  }

  FeatureMatrix out(n_frames, cfg.n_coeffs);
  std::vector<double> padded(n_fft, 0.0);
  std::vector<double> log_mel(m_count);
  std::vector<double> power(n_fft / 2 + 1);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t at = begin + t * hop;
    std::fill(padded.begin(), padded.end(), 0.0);
    for (std::size_t i = 0; i < frame; ++i) padded[i] = buf.samples[at + i] * window[i];
    const auto spec = rfft(padded);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
    for (std::size_t m = 0; m < m_count; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += fb[m][k] * power[k];
      log_mel[m] = std::log(std::max(e, 1e-30));
    }
    for (std::size_t k = 0; k < cfg.n_coeffs; ++k) {
      double c = 0.0;
      for (std::size_t m = 0; m < m_count; ++m) c += dct[k][m] * log_mel[m];
      out.at(t, k) = c;
    }
  }
  return out;
}

// Mean static cepstrum over every frame of the given segments: the
// run-level mean removed by cepstral mean subtraction.
inline std::vector<double> cepstral_mean(const AudioBuffer &buf, std::span<const Segment> segments,
                                         const MfccConfig &cfg = {}) {
  std::vector<double> mean(cfg.n_coeffs, 0.0);
  std::size_t frames = 0;
  for (const auto &s : segments) {
    const auto c = static_cepstra(buf, s.onset_s, s.offset_s, cfg);
    for (std::size_t t = 0; t < c.rows; ++t) {
      for (std::size_t k = 0; k < c.cols; ++k) mean[k] += c.at(t, k);
    }
    frames += c.rows;
  }
  if (frames > 0) {
    for (double &v : mean) v /= static_cast<double>(frames);
  }
  return mean;
}

// frames x (3 * n_coeffs): cepstra c1..cN, deltas, delta-deltas. When
// `run_mean` is given it is subtracted from the cepstra first.
inline FeatureMatrix mfcc_features(const AudioBuffer &buf, const Segment &segment,
                                   const MfccConfig &cfg = {},
                                   std::span<const double> run_mean = {}) {
  const auto stat = static_cepstra(buf, segment.onset_s, segment.offset_s, cfg);
  if (!run_mean.empty() && run_mean.size() != cfg.n_coeffs) {
    throw Error(ErrorCode::kDimMismatch, "run mean has the wrong dimension");
  }
  const std::size_t nc = cfg.n_coeffs;
  FeatureMatrix out(stat.rows, 3 * nc);
  for (std::size_t t = 0; t < stat.rows; ++t) {
    for (std::size_t k = 0; k < nc; ++k) {
      out.at(t, k) = stat.at(t, k) - (run_mean.empty() ? 0.0 : run_mean[k]);
    }
  }
  detail::append_deltas(out, 0, nc, nc);
  detail::append_deltas(out, nc, 2 * nc, nc);
  return out;
}

struct Embedding {
  std::vector<double> vector;
  std::size_t segment_index = 0;

  std::size_t dim() const { return vector.size(); }
};

// Per-dimension mean followed by per-dimension standard deviation over the
// first `pooled_dims` feature columns.
inline Embedding pool_embedding(const FeatureMatrix &features, std::size_t pooled_dims,
                                std::size_t segment_index = 0) {
  if (features.rows < 2) throw Error(ErrorCode::kTooFewFrames, "pooling needs at least 2 frames");
  if (pooled_dims == 0 || pooled_dims > features.cols) {
    throw Error(ErrorCode::kDimMismatch, "pooled_dims exceeds feature width");
  }
  Embedding e;
  e.segment_index = segment_index;
  e.vector.assign(2 * pooled_dims, 0.0);
  const auto n = static_cast<double>(features.rows);
  for (std::size_t c = 0; c < pooled_dims; ++c) {
    double sum = 0.0;
    for (std::size_t t = 0; t < features.rows; ++t) sum += features.at(t, c);
    const double mean = sum / n;
    double var = 0.0;
    for (std::size_t t = 0; t < features.rows; ++t) {
      const double d = features.at(t, c) - mean;
      var += d * d;
    }
    e.vector[c] = mean;
    e.vector[pooled_dims + c] = std::sqrt(var / n);
  }
  return e;
}

inline Embedding pool_embedding(const FeatureMatrix &features) {
  return pool_embedding(features, std::min<std::size_t>(26, features.cols));
}

// Produces one embedding per segment; implementations are deterministic and
// have a fixed output dimension.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed(const AudioBuffer &buf, const Segment &segment) const = 0;
  virtual std::size_t dim() const = 0;
};

class MfccEmbedder : public EmbeddingProvider {
 public:
  explicit MfccEmbedder(MfccConfig cfg = {}, std::vector<double> run_mean = {})
      : cfg_(std::move(cfg)), run_mean_(std::move(run_mean)) {
    cfg_.validate();
  }

  // Embedder with cepstral mean subtraction over all frames of `segments`.
  static MfccEmbedder for_run(const AudioBuffer &buf, std::span<const Segment> segments,
                              const MfccConfig &cfg = {}) {
    return MfccEmbedder(cfg, segments.empty() ? std::vector<double>{}
                                              : cepstral_mean(buf, segments, cfg));
  }

  Embedding embed(const AudioBuffer &buf, const Segment &segment) const override {
    const auto feats = mfcc_features(buf, segment, cfg_, run_mean_);
    return pool_embedding(feats, cfg_.pooled_dims, segment.index);
  }

  std::size_t dim() const override { return cfg_.embedding_dim(); }

 private:
  MfccConfig cfg_;
  std::vector<double> run_mean_;
};

// ---------------------------------------------------------------------------
// Embedding-matrix files: little-endian uint32 count, uint32 dim, then
// count * dim float32 values, row-major.

struct EmbeddingMatrix {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

inline std::vector<unsigned char> encode_embedding_matrix(const EmbeddingMatrix &m) {
  if (m.values.size() != m.count * m.dim) {
    throw Error(ErrorCode::kDimMismatch, "matrix payload does not match count * dim");
  }
  std::vector<unsigned char> out;
  out.reserve(8 + 4 * m.values.size());
  detail::put_u32(out, static_cast<std::uint32_t>(m.count));
  detail::put_u32(out, static_cast<std::uint32_t>(m.dim));
  for (float v : m.values) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, 4);
    detail::put_u32(out, bits);
  }
  return out;
}

inline EmbeddingMatrix decode_embedding_matrix(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8) throw Error(ErrorCode::kCorruptHeader, "embedding file shorter than header");
  EmbeddingMatrix m;
  m.count = detail::read_u32(bytes.data());
  m.dim = detail::read_u32(bytes.data() + 4);
  if (m.dim == 0 && m.count > 0) throw Error(ErrorCode::kCorruptHeader, "zero embedding dimension");
  const std::size_t payload = bytes.size() - 8;
  const std::size_t needed = m.count * m.dim * 4;
  if (payload < needed) {
    throw Error(ErrorCode::kTruncatedFile, "expected " + std::to_string(m.count) + " rows, file holds " +
                                               std::to_string(m.dim ? payload / (4 * m.dim) : 0));
  }
  if (payload > needed) throw Error(ErrorCode::kCorruptHeader, "trailing bytes after matrix payload");
  m.values.resize(m.count * m.dim);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const std::uint32_t bits = detail::read_u32(bytes.data() + 8 + 4 * i);
    std::memcpy(&m.values[i], &bits, 4);
  }
  return m;
}

inline void write_embedding_matrix(const std::filesystem::path &path, const EmbeddingMatrix &m) {
  detail::write_all_bytes(path, encode_embedding_matrix(m));
}

inline EmbeddingMatrix read_embedding_matrix(const std::filesystem::path &path) {
  return decode_embedding_matrix(detail::read_all_bytes(path));
}

inline EmbeddingMatrix to_matrix(std::span<const Embedding> embs) {
  EmbeddingMatrix m;
  m.count = embs.size();
  m.dim = embs.empty() ? 0 : embs.front().dim();
  m.values.reserve(m.count * m.dim);
  for (const auto &e : embs) {
    if (e.dim() != m.dim) throw Error(ErrorCode::kDimMismatch, "embeddings differ in dimension");
    for (double v : e.vector) m.values.push_back(static_cast<float>(v));
  }
  return m;
}

// Segment index -> embedding. When `expected_dim` is set the file's dimension
// must match it.
inline std::map<std::size_t, Embedding> load_external_embeddings(
    const std::filesystem::path &path, std::optional<std::size_t> expected_dim = std::nullopt) {
  const auto m = read_embedding_matrix(path);
  if (expected_dim && m.count > 0 && *expected_dim != m.dim) {
    throw Error(ErrorCode::kDimMismatch, "file has dim " + std::to_string(m.dim) + ", run expects " +
                                             std::to_string(*expected_dim));
  }
  std::map<std::size_t, Embedding> out;
  for (std::size_t i = 0; i < m.count; ++i) {
    const auto r = m.row(i);
    out.emplace(i, Embedding{std::vector<double>(r.begin(), r.end()), i});
  }
  return out;
}

// Serves precomputed embeddings by segment index.
class ExternalEmbeddings : public EmbeddingProvider {
 public:
  ExternalEmbeddings(std::map<std::size_t, Embedding> table, std::size_t dim)
      : table_(std::move(table)), dim_(dim) {}

  static ExternalEmbeddings load(const std::filesystem::path &path,
                                 std::optional<std::size_t> expected_dim = std::nullopt) {
    auto table = load_external_embeddings(path, expected_dim);
    const std::size_t dim = table.empty() ? expected_dim.value_or(0) : table.begin()->second.dim();
    return ExternalEmbeddings(std::move(table), dim);
  }

  Embedding embed(const AudioBuffer &, const Segment &segment) const override {
    const auto it = table_.find(segment.index);
    if (it == table_.end()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "no external embedding for segment " + std::to_string(segment.index));
    }
    return it->second;
  }

  std::size_t dim() const override { return dim_; }
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::size_t, Embedding> table_;
  std::size_t dim_;
};

}  // namespace diarkit
