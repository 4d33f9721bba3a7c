// diarkit/augment.hpp
//
// Data augmentation: additive noise, pitch shift and playback-speed change.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/dsp.hpp"
#include "diarkit/error.hpp"
#include "diarkit/fft.hpp"
#include "diarkit/synth.hpp"

namespace diarkit {

enum class NoiseKind { kWhite, kBabble };

inline const char *to_string(NoiseKind kind) {
  return kind == NoiseKind::kWhite ? "white" : "babble";
}

inline NoiseKind parse_noise_kind(const std::string &s) {
  if (s == "white") return NoiseKind::kWhite;
  if (s == "babble") return NoiseKind::kBabble;
  throw Error(ErrorCode::kInvalidArgument, "unknown noise kind: " + s);
}

inline constexpr int kBabbleStreams = 4;

// Unscaled noise of length n. Babble is the sum of four independently
// time-shifted synthetic voices.
inline std::vector<double> make_noise(std::size_t n, NoiseKind kind, std::uint64_t seed,
                                      int sample_rate_hz = kCanonicalSampleRate) {
  std::vector<double> noise(n, 0.0);
  if (n == 0) return noise;
  std::mt19937_64 rng(mix_seed(seed, 0xa0d10));
  if (kind == NoiseKind::kWhite) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double &v : noise) v = gauss(rng);
    return noise;
  }
  const auto pool = make_profile_pool(24, mix_seed(seed, 0xbab));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const double duration = std::max(kMinUtteranceSeconds, static_cast<double>(n) / sample_rate_hz);
  for (int s = 0; s < kBabbleStreams; ++s) {
    const auto voice = synth_utterance(pool[pick(rng)], duration, rng(), sample_rate_hz);
    std::uniform_int_distribution<std::size_t> shift_dist(0, voice.size() - 1);
    const std::size_t shift = shift_dist(rng);
    for (std::size_t i = 0; i < n; ++i) {
      noise[i] += voice.samples[(i + shift) % voice.size()];
    }
  }
  return noise;
}

// Adds noise whose RMS is exactly `intensity` times the RMS of `buf`.
inline AudioBuffer add_noise(const AudioBuffer &buf, double intensity, NoiseKind kind,
                             std::uint64_t seed) {
  if (!(intensity >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "intensity must be >= 0");
  if (intensity == 0.0) return buf;
  const double signal_rms = rms(buf.samples);
  if (signal_rms == 0.0) throw Error(ErrorCode::kSilentInput, "cannot scale noise to a silent buffer");
  auto noise = make_noise(buf.size(), kind, seed, buf.sample_rate_hz);
  const double noise_rms = rms(noise);
  const double gain = noise_rms > 0.0 ? intensity * signal_rms / noise_rms : 0.0;
  AudioBuffer out;
  out.sample_rate_hz = buf.sample_rate_hz;
  out.samples.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    out.samples[i] = static_cast<float>(buf.samples[i] + gain * noise[i]);
  }
  return out;
}

struct WsolaParams {
  double window_ms = 30.0;
  double tolerance_ms = 7.5;
};

namespace detail {

inline double normalized_xcorr(std::span<const double> x, std::ptrdiff_t a, std::ptrdiff_t b,
                               std::size_t n) {
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  double dot = 0.0, ea = 0.0, eb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ia = a + static_cast<std::ptrdiff_t>(i);
    const auto ib = b + static_cast<std::ptrdiff_t>(i);
    const double va = (ia >= 0 && ia < len) ? x[static_cast<std::size_t>(ia)] : 0.0;
    const double vb = (ib >= 0 && ib < len) ? x[static_cast<std::size_t>(ib)] : 0.0;
    dot += va * vb;
    ea += va * va;
    eb += vb * vb;
  }
  const double denom = std::sqrt(ea * eb);
  return denom > 0.0 ? dot / denom : 0.0;
}

}  // namespace detail

// Waveform-similarity overlap-add time stretch to exactly `out_len` samples.
// Each analysis frame is chosen within +/- tolerance of its nominal position
// to best match the natural continuation of the previously copied frame.
inline std::vector<double> wsola_stretch(std::span<const double> x, std::size_t out_len,
                                         int sample_rate_hz, const WsolaParams &params = {}) {
  std::vector<double> y(out_len, 0.0);
  if (x.empty() || out_len == 0) return y;
  const auto n = static_cast<std::size_t>(std::lround(params.window_ms * sample_rate_hz / 1000.0));
  const auto tol = static_cast<std::ptrdiff_t>(std::lround(params.tolerance_ms * sample_rate_hz / 1000.0));
  const std::size_t hop_out = n / 2;
  const double stretch = static_cast<double>(out_len) / static_cast<double>(x.size());
  const double hop_in = static_cast<double>(hop_out) / stretch;
  const auto window = hann_window(n);
  const auto len = static_cast<std::ptrdiff_t>(x.size());

  std::vector<double> acc(out_len + n, 0.0), wsum(out_len + n, 0.0);
  std::ptrdiff_t prev = 0;
  for (std::size_t k = 0; k * hop_out < out_len; ++k) {
    std::ptrdiff_t pos = 0;
    if (k > 0) {
      const auto nominal = static_cast<std::ptrdiff_t>(std::llround(static_cast<double>(k) * hop_in));
      const std::ptrdiff_t natural = prev + static_cast<std::ptrdiff_t>(hop_out);
      double best = -2.0;
      pos = nominal;
      for (std::ptrdiff_t d = -tol; d <= tol; ++d) {
        const std::ptrdiff_t cand = nominal + d;
        if (cand < 0 || cand >= len) continue;
        const double c = detail::normalized_xcorr(x, cand, natural, n);
        if (c > best) {
          best = c;
          pos = cand;
        }
      }
    }
    const std::size_t out_at = k * hop_out;
    for (std::size_t i = 0; i < n; ++i) {
      const std::ptrdiff_t src = pos + static_cast<std::ptrdiff_t>(i);
      const double v = (src >= 0 && src < len) ? x[static_cast<std::size_t>(src)] : 0.0;
      acc[out_at + i] += v * window[i];
      wsum[out_at + i] += window[i];
    }
    prev = pos;
  }
  for (std::size_t i = 0; i < out_len; ++i) y[i] = wsum[i] > 1e-6 ? acc[i] / wsum[i] : 0.0;
  return y;
}

// Shifts pitch by 2^(semitones/12) at unchanged duration: resample by the
// inverse ratio, then WSOLA-stretch back to the input length.
inline AudioBuffer pitch_shift(const AudioBuffer &buf, double semitones) {
  if (!(std::abs(semitones) <= 12.0)) {
    throw Error(ErrorCode::kInvalidArgument, "|semitones| must be <= 12");
  }
  if (semitones == 0.0 || buf.empty()) return buf;
  const double ratio = std::pow(2.0, semitones / 12.0);
  const auto x = to_double(buf.samples);
  const auto mid_len = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(x.size()) / ratio)));
  const auto squeezed = resample_by_ratio(x, 1.0 / ratio, mid_len);
  AudioBuffer out;
  out.sample_rate_hz = buf.sample_rate_hz;
  out.samples = to_float(wsola_stretch(squeezed, x.size(), buf.sample_rate_hz));
  return out;
}

// Playback-rate change: duration divides by `factor` and every frequency
// multiplies by it.
inline AudioBuffer speed_change(const AudioBuffer &buf, double factor) {
  if (!(factor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "speed factor must be positive");
  if (factor == 1.0 || buf.empty()) return buf;
  const auto x = to_double(buf.samples);
  const auto out_len = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(x.size()) / factor)));
  AudioBuffer out;
  out.sample_rate_hz = buf.sample_rate_hz;
  out.samples = to_float(resample_by_ratio(x, 1.0 / factor, out_len));
  return out;
}

struct AugmentSpec {
  // Noise RMS as a fraction of signal RMS; 0.05 gives 26.02 dB SNR.
  double noise_intensity = 0.05;
  NoiseKind noise_kind = NoiseKind::kWhite;
  double pitch_semitones = 0.0;
  double speed_factor = 1.0;
  std::uint64_t rng_seed = 0;
  // Lifts the [-5, 5] semitone and [0.9, 1.1] speed limits.
  bool allow_out_of_range = false;

  static AugmentSpec identity() {
    AugmentSpec s;
    s.noise_intensity = 0.0;
    return s;
  }

  void validate() const {
    if (!(noise_intensity >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "noise_intensity must be >= 0");
    }
    if (!(speed_factor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "speed_factor must be > 0");
    if (allow_out_of_range) return;
    if (pitch_semitones < -5.0 || pitch_semitones > 5.0) {
      throw Error(ErrorCode::kInvalidArgument, "pitch_semitones outside [-5, 5]");
    }
    if (speed_factor < 0.9 || speed_factor > 1.1) {
      throw Error(ErrorCode::kInvalidArgument, "speed_factor outside [0.9, 1.1]");
    }
  }
};

// Draws pitch and speed uniformly from [-5, 5] semitones and [0.9, 1.1].
inline AugmentSpec sample_augment_spec(std::uint64_t seed, double noise_intensity = 0.05,
                                       NoiseKind kind = NoiseKind::kWhite) {
  std::mt19937_64 rng(mix_seed(seed, 0xa5));
  std::uniform_real_distribution<double> pitch(-5.0, 5.0);
  std::uniform_real_distribution<double> speed(0.9, 1.1);
  AugmentSpec s;
  s.noise_intensity = noise_intensity;
  s.noise_kind = kind;
  s.pitch_semitones = pitch(rng);
  s.speed_factor = speed(rng);
  s.rng_seed = rng();
  return s;
}

// Applies speed, then pitch, then noise. Callers must rescale reference turn
// times by 1 / speed_factor (see rescale_turns).
inline AudioBuffer augment_file(const AudioBuffer &buf, const AugmentSpec &spec) {
  spec.validate();
  AudioBuffer out = speed_change(buf, spec.speed_factor);
  out = pitch_shift(out, spec.pitch_semitones);
  return add_noise(out, spec.noise_intensity, spec.noise_kind, spec.rng_seed);
}

inline std::vector<Turn> rescale_turns(std::span<const Turn> turns, double speed_factor) {
  std::vector<Turn> out(turns.begin(), turns.end());
  for (auto &t : out) {
    t.onset_s /= speed_factor;
    t.duration_s /= speed_factor;
  }
  return out;
}

}  // namespace diarkit
