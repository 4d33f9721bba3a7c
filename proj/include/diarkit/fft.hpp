// diarkit/fft.hpp
//
// Thin thread-safe wrapper over FFTW's real transforms plus the spectral
// helpers shared by the DSP modules (windows, peak-frequency estimation).

#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "diarkit/error.hpp"

namespace diarkit {

namespace detail {

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are created once per size under this lock and never destroyed.
struct FftPlanCache {
  std::mutex mutex;
  std::map<std::size_t, std::pair<fftw_plan, fftw_plan>> plans;

  std::pair<fftw_plan, fftw_plan> get(std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = plans.find(n);
    if (it != plans.end()) return it->second;

    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    auto *cout = reinterpret_cast<fftw_complex *>(out.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), cout, flags);
    fftw_plan inv = fftw_plan_dft_c2r_1d(static_cast<int>(n), cout, in.data(),
                                         flags | FFTW_DESTROY_INPUT);
    auto entry = std::make_pair(fwd, inv);
    plans.emplace(n, entry);
    return entry;
  }
};

inline FftPlanCache &plan_cache() {
  static FftPlanCache cache;
  return cache;
}

}  // namespace detail

// Forward real DFT, unnormalized. Returns n/2 + 1 bins.
inline std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(ErrorCode::kEmptyBuffer, "rfft of empty input");
  auto plans = detail::plan_cache().get(n);
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(plans.first, in.data(),
                       reinterpret_cast<fftw_complex *>(out.data()));
  return out;
}

// Inverse of rfft, normalized so irfft(rfft(x), n) == x.
inline std::vector<double> irfft(std::span<const std::complex<double>> spec,
                                 std::size_t n) {
  if (spec.size() != n / 2 + 1) {
    throw Error(ErrorCode::kLengthMismatch, "irfft spectrum size does not match n");
  }
  auto plans = detail::plan_cache().get(n);
  std::vector<std::complex<double>> in(spec.begin(), spec.end());
  std::vector<double> out(n);
  fftw_execute_dft_c2r(plans.second, reinterpret_cast<fftw_complex *>(in.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double &v : out) v *= scale;
  return out;
}

// Periodic Hann window (sums to a constant at 50% overlap).
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

inline std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
  }
  return w;
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Frequency (Hz) of the largest magnitude bin of the Hann-windowed signal,
// refined by parabolic interpolation on log magnitudes. The DC bin is ignored.
inline double dominant_frequency(std::span<const double> x, int sample_rate_hz) {
  if (x.size() < 4) throw Error(ErrorCode::kTooShort, "need at least 4 samples");
  const std::size_t n = next_pow2(x.size()) * 4;
  std::vector<double> padded(n, 0.0);
  const auto w = hann_window(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) padded[i] = x[i] * w[i];
  const auto spec = rfft(padded);

  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    const double m = std::abs(spec[k]);
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  double offset = 0.0;
  if (best > 1 && best + 1 < spec.size()) {
    const double a = std::log(std::abs(spec[best - 1]) + 1e-300);
    const double b = std::log(best_mag + 1e-300);
    const double c = std::log(std::abs(spec[best + 1]) + 1e-300);
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) offset = 0.5 * (a - c) / denom;
  }
  return (static_cast<double>(best) + offset) * sample_rate_hz / static_cast<double>(n);
}

}  // namespace diarkit
