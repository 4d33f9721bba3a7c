// diarkit/dsp.hpp
//
// Preprocessing: RMS normalization, SNR measurement and spectral-gate noise
// reduction.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/error.hpp"
#include "diarkit/fft.hpp"

namespace diarkit {

inline double mean_square(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return acc / static_cast<double>(x.size());
}

inline double mean_square(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

inline double rms(std::span<const float> x) { return std::sqrt(mean_square(x)); }
inline double rms(std::span<const double> x) { return std::sqrt(mean_square(x)); }

struct NormalizeResult {
  AudioBuffer audio;
  double gain = 1.0;
  // Set when the scaled signal exceeded full scale and was clipped to [-1, 1].
  bool clipped = false;
};

inline constexpr double kDefaultTargetRms = 0.1;

inline NormalizeResult rms_normalize(const AudioBuffer &buf,
                                     double target_rms = kDefaultTargetRms) {
  if (!(target_rms > 0.0 && target_rms < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target_rms must be in (0, 1)");
  }
  const double current = rms(buf.samples);
  if (current == 0.0) throw Error(ErrorCode::kSilentInput, "cannot normalize a silent buffer");

  NormalizeResult r;
  r.gain = target_rms / current;
  r.audio.sample_rate_hz = buf.sample_rate_hz;
  r.audio.samples.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    double v = r.gain * buf.samples[i];
    if (v > 1.0 || v < -1.0) {
      v = std::clamp(v, -1.0, 1.0);
      r.clipped = true;
    }
    r.audio.samples[i] = static_cast<float>(v);
  }
  return r;
}

// 10 log10(P_signal / P_noise) with P the mean squared amplitude. Returns
// +infinity when the noise is exactly zero.
inline double snr_db(std::span<const float> signal, std::span<const float> noise) {
  if (signal.empty() || noise.empty()) {
    throw Error(ErrorCode::kEmptyBuffer, "snr_db needs non-empty inputs");
  }
  const double pn = mean_square(noise);
  if (pn == 0.0) return std::numeric_limits<double>::infinity();
  const double ps = mean_square(signal);
  if (ps == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ps / pn);
}

inline double snr_db(const AudioBuffer &signal, const AudioBuffer &noise) {
  return snr_db(signal.samples, noise.samples);
}

// SNR of `noisy` against a known clean reference; the residual is the noise.
inline double estimate_snr_db(const AudioBuffer &noisy, const AudioBuffer &clean_ref) {
  if (noisy.size() != clean_ref.size()) {
    throw Error(ErrorCode::kLengthMismatch, "noisy and clean buffers differ in length");
  }
  if (noisy.empty()) throw Error(ErrorCode::kEmptyBuffer, "estimate_snr_db of empty buffers");
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const double c = clean_ref.samples[i];
    const double r = static_cast<double>(noisy.samples[i]) - c;
    ps += c * c;
    pn += r * r;
  }
  if (pn == 0.0) return std::numeric_limits<double>::infinity();
  if (ps == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ps / pn);
}

struct DenoiseParams {
  std::size_t frame_len = 512;
  std::size_t hop = 256;
  double noise_percentile = 0.2;
  double gate_threshold_db = 6.0;
  double attenuation_db = 20.0;
  // Half-widths of the time/frequency neighbourhood whose mean power drives
  // the gate decision; 0/0 gates each cell on its own magnitude.
  std::size_t smooth_frames = 2;
  std::size_t smooth_bins = 2;

  void validate() const {
    if (frame_len == 0 || hop == 0 || hop > frame_len) {
      throw Error(ErrorCode::kInvalidArgument, "denoise requires 0 < hop <= frame_len");
    }
    if (!(noise_percentile > 0.0 && noise_percentile <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "noise_percentile must be in (0, 1]");
    }
    if (!(gate_threshold_db > 0.0) || !(attenuation_db > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "gate threshold and attenuation must be positive");
    }
  }
};

// STFT magnitude gate. Each cell's level is the RMS magnitude over a small
// time/frequency neighbourhood; per frequency bin the noise floor is the
// requested percentile of that level across frames, and cells whose level is
// below floor + gate_threshold_db are attenuated by attenuation_db. Analysis
// and synthesis use a square-root Hann window so unit gain reconstructs the
// input and any gain <= 1 cannot add energy.
inline AudioBuffer spectral_gate_denoise(const AudioBuffer &buf,
                                         const DenoiseParams &params = {}) {
  params.validate();
  const std::size_t n = params.frame_len;
  const std::size_t hop = params.hop;
  if (buf.size() < n) throw Error(ErrorCode::kTooShort, "buffer shorter than one frame");

  const std::size_t len = buf.size();
  const std::size_t pad = n;
  std::vector<double> x(len + 2 * pad, 0.0);
  for (std::size_t i = 0; i < len; ++i) x[pad + i] = buf.samples[i];

  std::vector<double> window = hann_window(n);
  for (double &w : window) w = std::sqrt(w);

  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s <= pad + len - 1; s += hop) starts.push_back(s);

  const std::size_t bins = n / 2 + 1;
  const std::size_t frames = starts.size();
  std::vector<std::vector<std::complex<double>>> spectra(frames);
  std::vector<double> frame(n);
  for (std::size_t j = 0; j < frames; ++j) {
    for (std::size_t i = 0; i < n; ++i) frame[i] = x[starts[j] + i] * window[i];
    spectra[j] = rfft(frame);
  }

  // Neighbourhood RMS via a 2-D prefix sum of |X|^2.
  std::vector<double> prefix((frames + 1) * (bins + 1), 0.0);
  auto at = [&](std::size_t j, std::size_t k) -> double & { return prefix[j * (bins + 1) + k]; };
  for (std::size_t j = 0; j < frames; ++j) {
    for (std::size_t k = 0; k < bins; ++k) {
      at(j + 1, k + 1) = std::norm(spectra[j][k]) + at(j, k + 1) + at(j + 1, k) - at(j, k);
    }
  }
  std::vector<double> level(frames * bins);
  for (std::size_t j = 0; j < frames; ++j) {
    const std::size_t j0 = j >= params.smooth_frames ? j - params.smooth_frames : 0;
    const std::size_t j1 = std::min(frames, j + params.smooth_frames + 1);
    for (std::size_t k = 0; k < bins; ++k) {
      const std::size_t k0 = k >= params.smooth_bins ? k - params.smooth_bins : 0;
      const std::size_t k1 = std::min(bins, k + params.smooth_bins + 1);
      const double sum = at(j1, k1) - at(j0, k1) - at(j1, k0) + at(j0, k0);
      level[j * bins + k] = std::sqrt(std::max(0.0, sum) / static_cast<double>((j1 - j0) * (k1 - k0)));
    }
  }

  // Floor statistics come from frames lying fully inside the signal.
  std::vector<std::size_t> interior;
  for (std::size_t j = 0; j < frames; ++j) {
    if (starts[j] >= pad && starts[j] + n <= pad + len) interior.push_back(j);
  }
  if (interior.empty()) interior.push_back(0);

  const double gate_ratio = std::pow(10.0, params.gate_threshold_db / 20.0);
  const double floor_gain = std::pow(10.0, -params.attenuation_db / 20.0);
  std::vector<double> threshold(bins);
  std::vector<double> mags(interior.size());
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t m = 0; m < interior.size(); ++m) mags[m] = level[interior[m] * bins + k];
    const auto idx = static_cast<std::size_t>(
        std::floor(params.noise_percentile * static_cast<double>(mags.size() - 1)));
    std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(idx), mags.end());
    threshold[k] = mags[idx] * gate_ratio;
  }

  std::vector<double> y(x.size(), 0.0);
  std::vector<double> norm(x.size(), 0.0);
  for (std::size_t j = 0; j < starts.size(); ++j) {
    auto &spec = spectra[j];
    for (std::size_t k = 0; k < bins; ++k) {
      if (level[j * bins + k] < threshold[k]) spec[k] *= floor_gain;
    }
    const auto out = irfft(spec, n);
    for (std::size_t i = 0; i < n; ++i) {
      y[starts[j] + i] += out[i] * window[i];
      norm[starts[j] + i] += window[i] * window[i];
    }
  }

  AudioBuffer result;
  result.sample_rate_hz = buf.sample_rate_hz;
  result.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double w = norm[pad + i];
    result.samples[i] = static_cast<float>(w > 1e-12 ? y[pad + i] / w : 0.0);
  }
  return result;
}

}  // namespace diarkit
