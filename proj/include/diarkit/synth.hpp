// diarkit/synth.hpp
//
// Deterministic harmonic-plus-formant voice synthesizer. Stands in for
// recorded speech so that every generated file has exact ground truth.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/error.hpp"

namespace diarkit {

struct Formant {
  double center_hz = 500.0;
  double bandwidth_hz = 100.0;
};

struct SpeakerProfile {
  double f0_hz = 120.0;
  std::array<Formant, 3> formants{};
  double harmonic_tilt_db_per_octave = -6.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (f0_hz < 90.0 || f0_hz > 280.0) {
      throw Error(ErrorCode::kInvalidArgument, "f0 must lie in [90, 280] Hz");
    }
    for (std::size_t i = 0; i < formants.size(); ++i) {
      if (formants[i].center_hz <= 0.0 || formants[i].bandwidth_hz <= 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "formant parameters must be positive");
      }
      if (i > 0 && formants[i].center_hz <= formants[i - 1].center_hz) {
        throw Error(ErrorCode::kInvalidArgument, "formants must be ascending");
      }
    }
  }
};

inline constexpr double kMinUtteranceSeconds = 0.5;
inline constexpr double kUtteranceRms = 0.1;

// Mixes two seeds into one; keeps per-stream RNGs independent.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// `count` profiles with log-spaced fundamentals across [90, 280] Hz and
// randomized formants and spectral tilt.
inline std::vector<SpeakerProfile> make_profile_pool(std::size_t count = 24,
                                                     std::uint64_t seed = 0) {
  std::mt19937_64 rng(mix_seed(seed, 0x5eed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SpeakerProfile> pool(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto &p = pool[i];
    const double frac = count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.5;
    p.f0_hz = std::clamp(95.0 * std::pow(270.0 / 95.0, frac) * (0.97 + 0.06 * u(rng)), 90.0, 280.0);
    p.formants[0] = {300.0 + 600.0 * u(rng), 60.0 + 60.0 * u(rng)};
    p.formants[1] = {1000.0 + 1300.0 * u(rng), 80.0 + 80.0 * u(rng)};
    p.formants[2] = {2500.0 + 1000.0 * u(rng), 100.0 + 100.0 * u(rng)};
    p.harmonic_tilt_db_per_octave = -3.0 - 6.0 * u(rng);
    p.seed = mix_seed(seed, i + 1);
  }
  return pool;
}

namespace detail {

inline double formant_envelope(const SpeakerProfile &p, double f) {
  static constexpr std::array<double, 3> kGains = {1.0, 0.6, 0.35};
  double e = 0.01;
  for (std::size_t i = 0; i < p.formants.size(); ++i) {
    const double x = (f - p.formants[i].center_hz) / (0.5 * p.formants[i].bandwidth_hz);
    e += kGains[i] / (1.0 + x * x);
  }
  return e;
}

}  // namespace detail

// Harmonic source at f0 with +/-3% jitter, shaped by the profile's formant
// envelope, amplitude-modulated at a 3-5 Hz syllabic rate with dips between
// syllables. Output RMS is kUtteranceRms; deterministic per (profile, seed).
inline AudioBuffer synth_utterance(const SpeakerProfile &profile, double duration_s,
                                   std::uint64_t seed,
                                   int sample_rate_hz = kCanonicalSampleRate) {
  if (!(duration_s >= kMinUtteranceSeconds)) {
    throw Error(ErrorCode::kTooShort, "utterance must be at least 0.5 s");
  }
  profile.validate();
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  const double sr = sample_rate_hz;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  std::mt19937_64 rng(mix_seed(profile.seed, seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);

  constexpr std::size_t kTable = 4096;
  const double band_limit = std::min(4000.0, 0.45 * sr);
  const auto harmonics = static_cast<int>(band_limit / (profile.f0_hz * 1.03));
  std::vector<double> table(kTable + 1, 0.0);
  {
    std::mt19937_64 phase_rng(profile.seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    for (int k = 1; k <= harmonics; ++k) {
      const double f = k * profile.f0_hz;
      const double amp = std::pow(10.0, profile.harmonic_tilt_db_per_octave * std::log2(k) / 20.0) *
                         detail::formant_envelope(profile, f);
      const double ph = phase(phase_rng);
      for (std::size_t j = 0; j < kTable; ++j) {
        table[j] += amp * std::sin(kTwoPi * k * static_cast<double>(j) / kTable + ph);
      }
    }
    table[kTable] = table[0];
  }

  const double jitter_a = 0.5 + u(rng), jitter_b = 2.0 + 2.0 * u(rng);
  const double jitter_pa = kTwoPi * u(rng), jitter_pb = kTwoPi * u(rng);
  const double syllable_rate = 3.0 + 2.0 * u(rng);
  constexpr double kDipFloor = 0.15;
  const double ramp = 0.01 * sr;

  std::vector<double> y(n);
  double phase = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double jitter = 0.6 * std::sin(kTwoPi * jitter_a * t + jitter_pa) +
                          0.4 * std::sin(kTwoPi * jitter_b * t + jitter_pb);
    const double f0 = profile.f0_hz * (1.0 + 0.03 * jitter);
    phase += f0 / sr;
    phase -= std::floor(phase);
    const double pos = phase * kTable;
    const auto idx = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(idx);
    const double src = table[idx] + frac * (table[idx + 1] - table[idx]);

    const double s = std::sin(std::numbers::pi * syllable_rate * t + 0.5 * std::numbers::pi);
    double env = kDipFloor + (1.0 - kDipFloor) * s * s;
    const double from_edge = std::min(static_cast<double>(i), static_cast<double>(n - 1 - i));
    if (from_edge < ramp) env *= 0.5 - 0.5 * std::cos(std::numbers::pi * from_edge / ramp);
    y[i] = src * env;
  }

  double ms = 0.0;
  for (double v : y) ms += v * v;
  ms /= static_cast<double>(n);
  const double gain = ms > 0.0 ? kUtteranceRms / std::sqrt(ms) : 0.0;
  AudioBuffer out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<float>(y[i] * gain);
  return out;
}

}  // namespace diarkit
