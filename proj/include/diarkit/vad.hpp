// diarkit/vad.hpp
//
// Relative-energy speech activity detection and sliding-window segmentation.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/error.hpp"
#include "diarkit/fft.hpp"

namespace diarkit {

struct SpeechRegion {
  double onset_s = 0.0;
  double offset_s = 0.0;

  double duration_s() const { return offset_s - onset_s; }
  bool operator==(const SpeechRegion &) const = default;
};

struct VadParams {
  double frame_ms = 30.0;
  double hop_ms = 10.0;
  // Speech iff frame energy >= noise floor + threshold_db.
  double threshold_db = 6.0;
  double hangover_ms = 200.0;
  double min_region_ms = 100.0;
  double floor_percentile = 0.1;
  // Used only when the file's frame energies span less than threshold_db:
  // such a file is speech-like iff its long-term spectral flatness is below
  // this value (tonal/harmonic), otherwise it is treated as noise.
  double stationary_flatness = 0.5;

  void validate() const {
    if (!(frame_ms > 0.0) || !(hop_ms > 0.0) || hop_ms > frame_ms) {
      throw Error(ErrorCode::kInvalidArgument, "VAD requires 0 < hop_ms <= frame_ms");
    }
    if (!(threshold_db > 0.0) || hangover_ms < 0.0 || min_region_ms < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "invalid VAD threshold/hangover");
    }
    if (!(floor_percentile > 0.0 && floor_percentile < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "floor_percentile must be in (0, 1)");
    }
  }
};

namespace detail {

inline double spectral_flatness(std::span<const double> x, std::size_t frame) {
  const std::size_t n = next_pow2(frame);
  const auto w = hann_window(n);
  std::vector<double> power(n / 2 + 1, 0.0);
  std::vector<double> buf(n);
  std::size_t frames = 0;
  for (std::size_t s = 0; s + n <= x.size(); s += n / 2) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[s + i] * w[i];
    const auto spec = rfft(buf);
    for (std::size_t k = 0; k < spec.size(); ++k) power[k] += std::norm(spec[k]);
    ++frames;
  }
  if (frames == 0) return 1.0;
  double log_sum = 0.0, sum = 0.0;
  const double tiny = 1e-300;
  for (std::size_t k = 1; k < power.size(); ++k) {
    log_sum += std::log(power[k] + tiny);
    sum += power[k];
  }
  const auto bins = static_cast<double>(power.size() - 1);
  if (sum <= 0.0) return 1.0;
  return std::exp(log_sum / bins) / (sum / bins);
}

}  // namespace detail

// Marks frames whose energy is at least threshold_db above the file's own
// noise floor (a low percentile of frame energies), closes gaps shorter than
// the hangover and drops regions shorter than min_region_ms. The DC offset is
// removed first, and all decisions are relative, so scaling the input by any
// positive constant leaves the result unchanged.
inline std::vector<SpeechRegion> energy_vad(const AudioBuffer &buf, const VadParams &params = {}) {
  params.validate();
  if (buf.sample_rate_hz != kCanonicalSampleRate) {
    throw Error(ErrorCode::kInvalidArgument, "VAD expects 16 kHz input; resample first");
  }
  const double sr = buf.sample_rate_hz;
  const auto frame = static_cast<std::size_t>(std::lround(params.frame_ms * sr / 1000.0));
  const auto hop = static_cast<std::size_t>(std::lround(params.hop_ms * sr / 1000.0));
  if (buf.size() < frame) throw Error(ErrorCode::kTooShort, "buffer shorter than one VAD frame");

  std::vector<double> x = to_double(buf.samples);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double &v : x) v -= mean;

  const std::size_t n_frames = (x.size() - frame) / hop + 1;
  std::vector<double> energy_db(n_frames);
  double max_db = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n_frames; ++j) {
    double e = 0.0;
    for (std::size_t i = 0; i < frame; ++i) e += x[j * hop + i] * x[j * hop + i];
    e /= static_cast<double>(frame);
    energy_db[j] = e > 0.0 ? 10.0 * std::log10(e) : -std::numeric_limits<double>::infinity();
    max_db = std::max(max_db, energy_db[j]);
  }
  if (!std::isfinite(max_db)) return {};

  std::vector<double> sorted = energy_db;
  const auto idx = static_cast<std::size_t>(
      std::floor(params.floor_percentile * static_cast<double>(n_frames - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(idx), sorted.end());
  const double floor_db = sorted[idx];

  std::vector<bool> speech(n_frames, false);
  if (max_db - floor_db < params.threshold_db) {
    if (detail::spectral_flatness(x, frame) >= params.stationary_flatness) return {};
    std::fill(speech.begin(), speech.end(), true);
  } else {
    for (std::size_t j = 0; j < n_frames; ++j) speech[j] = energy_db[j] >= floor_db + params.threshold_db;
  }

  // Hangover: bridge short non-speech gaps between speech frames.
  const double gap_limit = params.hangover_ms / params.hop_ms;
  std::size_t j = 0;
  while (j < n_frames && !speech[j]) ++j;
  while (j < n_frames) {
    std::size_t k = j;
    while (k < n_frames && speech[k]) ++k;
    std::size_t next = k;
    while (next < n_frames && !speech[next]) ++next;
    if (next < n_frames && static_cast<double>(next - k) < gap_limit) {
      std::fill(speech.begin() + static_cast<std::ptrdiff_t>(k),
                speech.begin() + static_cast<std::ptrdiff_t>(next), true);
    }
    j = next;
  }

  const double duration = buf.duration_s();
  std::vector<SpeechRegion> regions;
  j = 0;
  while (j < n_frames) {
    if (!speech[j]) {
      ++j;
      continue;
    }
    std::size_t k = j;
    while (k + 1 < n_frames && speech[k + 1]) ++k;
    const double on = j == 0 ? 0.0
                             : (static_cast<double>(j * hop) + 0.5 * static_cast<double>(frame - hop)) / sr;
    const double off = k + 1 == n_frames
                           ? duration
                           : (static_cast<double>(k * hop) + 0.5 * static_cast<double>(frame + hop)) / sr;
    SpeechRegion r{std::max(0.0, on), std::min(duration, off)};
    if (r.duration_s() * 1000.0 >= params.min_region_ms) regions.push_back(r);
    j = k + 1;
  }
  return regions;
}

struct Segment {
  std::string file_id;
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::size_t index = 0;

  double duration_s() const { return offset_s - onset_s; }
  bool operator==(const Segment &) const = default;
};

struct SegmentParams {
  double window_s = 1.5;
  double hop_s = 0.75;
  // Shortest tail window emitted after the last full window of a region.
  double min_tail_s = 0.5;

  void validate() const {
    if (!(window_s > 0.0) || !(hop_s > 0.0) || hop_s > window_s) {
      throw Error(ErrorCode::kInvalidArgument, "segmentation requires 0 < hop <= window");
    }
    if (min_tail_s < 0.0 || min_tail_s > window_s) {
      throw Error(ErrorCode::kInvalidArgument, "min_tail_s must be in [0, window]");
    }
  }
};

// Sliding windows that stay inside each region, plus one shorter tail window
// (>= min_tail_s) covering whatever the full windows left at the region end.
inline std::vector<Segment> uniform_segment(std::span<const SpeechRegion> regions,
                                            const SegmentParams &params = {},
                                            const std::string &file_id = {}) {
  params.validate();
  constexpr double kEps = 1e-9;
  std::vector<Segment> segments;
  for (const auto &r : regions) {
    double start = r.onset_s;
    double covered = r.onset_s;
    while (start + params.window_s <= r.offset_s + kEps) {
      segments.push_back({file_id, start, std::min(start + params.window_s, r.offset_s), 0});
      covered = start + params.window_s;
      start += params.hop_s;
    }
    if (r.offset_s - covered > kEps && r.offset_s - start >= params.min_tail_s - kEps) {
      segments.push_back({file_id, start, r.offset_s, 0});
    }
  }
  std::stable_sort(segments.begin(), segments.end(),
                   [](const Segment &a, const Segment &b) { return a.onset_s < b.onset_s; });
  for (std::size_t i = 0; i < segments.size(); ++i) segments[i].index = i;
  return segments;
}

}  // namespace diarkit
