// diarkit/audio_io.hpp
//
// Audio buffers, PCM WAV read/write, RTTM annotations and band-limited
// resampling.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "diarkit/error.hpp"

namespace diarkit {

inline constexpr int kCanonicalSampleRate = 16000;

struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate_hz = kCanonicalSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  bool operator==(const AudioBuffer &) const = default;
};

// One speaker's contiguous speech interval.
struct Turn {
  std::string file_id;
  std::string speaker_id;
  double onset_s = 0.0;
  double duration_s = 0.0;

  double offset_s() const { return onset_s + duration_s; }
  bool operator==(const Turn &) const = default;
};

inline std::vector<double> to_double(std::span<const float> x) {
  return std::vector<double>(x.begin(), x.end());
}

inline std::vector<float> to_float(std::span<const double> x) {
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(x[i]);
  return out;
}

// ---------------------------------------------------------------------------
// WAV

enum class SampleFormat { kPcm16, kFloat32 };

struct WavFile {
  AudioBuffer audio;
  SampleFormat format = SampleFormat::kPcm16;
};

namespace detail {

inline std::uint16_t read_u16(const unsigned char *p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u16(std::vector<unsigned char> &out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32(std::vector<unsigned char> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_tag(std::vector<unsigned char> &out, const char *tag) {
  out.insert(out.end(), tag, tag + 4);
}

inline std::vector<unsigned char> read_all_bytes(const std::filesystem::path &path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::kNotFound, "no such file: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open: " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

inline void write_all_bytes(const std::filesystem::path &path,
                            std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace detail

inline WavFile decode_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kCorruptHeader, "not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format_tag = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const unsigned char *data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    const std::size_t size = detail::read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw Error(ErrorCode::kCorruptHeader, "chunk extends past end of file");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorCode::kCorruptHeader, "fmt chunk too small");
      const unsigned char *f = bytes.data() + body;
      format_tag = detail::read_u16(f);
      channels = detail::read_u16(f + 2);
      rate = detail::read_u32(f + 4);
      block_align = detail::read_u16(f + 12);
      bits = detail::read_u16(f + 14);
      if (format_tag == 0xFFFE) {
        if (size < 40) throw Error(ErrorCode::kCorruptHeader, "short extensible fmt chunk");
        format_tag = detail::read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt || data == nullptr) {
    throw Error(ErrorCode::kCorruptHeader, "missing fmt or data chunk");
  }
  if (channels != 1) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "only mono is supported, got " + std::to_string(channels) + " channels");
  }
  if (rate == 0) throw Error(ErrorCode::kCorruptHeader, "sample rate is zero");

  WavFile wav;
  wav.audio.sample_rate_hz = static_cast<int>(rate);
  if (format_tag == 1 && bits == 16) {
    if (block_align != 2) throw Error(ErrorCode::kCorruptHeader, "bad block align");
    wav.format = SampleFormat::kPcm16;
    const std::size_t n = data_size / 2;
    wav.audio.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::int16_t>(detail::read_u16(data + 2 * i));
      wav.audio.samples[i] = static_cast<float>(v / 32768.0);
    }
  } else if (format_tag == 3 && bits == 32) {
    if (block_align != 4) throw Error(ErrorCode::kCorruptHeader, "bad block align");
    wav.format = SampleFormat::kFloat32;
    const std::size_t n = data_size / 4;
    wav.audio.samples.resize(n);
    std::memcpy(wav.audio.samples.data(), data, n * 4);
  } else {
    throw Error(ErrorCode::kUnsupportedFormat,
                "unsupported codec (format " + std::to_string(format_tag) + ", " +
                    std::to_string(bits) + " bits)");
  }
  return wav;
}

inline std::vector<unsigned char> encode_wav(const AudioBuffer &buf, SampleFormat format) {
  if (buf.empty()) throw Error(ErrorCode::kEmptyBuffer, "cannot encode an empty buffer");
  const std::uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(buf.size() * block);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  detail::put_tag(out, "RIFF");
  detail::put_u32(out, 36 + data_size);
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, format == SampleFormat::kPcm16 ? 1 : 3);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz));
  detail::put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz) * block);
  detail::put_u16(out, block);
  detail::put_u16(out, bits);
  detail::put_tag(out, "data");
  detail::put_u32(out, data_size);

  if (format == SampleFormat::kPcm16) {
    for (float s : buf.samples) {
      double q = std::nearbyint(static_cast<double>(s) * 32768.0);
      q = std::clamp(q, -32768.0, 32767.0);
      detail::put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  } else {
    const std::size_t at = out.size();
    out.resize(at + data_size);
    std::memcpy(out.data() + at, buf.samples.data(), data_size);
  }
  return out;
}

inline WavFile read_wav_file(const std::filesystem::path &path) {
  const auto bytes = detail::read_all_bytes(path);
  return decode_wav(bytes);
}

// Decodes a mono PCM16 or float32 WAV file. PCM16 samples are s / 32768.
inline AudioBuffer read_wav(const std::filesystem::path &path) {
  return read_wav_file(path).audio;
}

// PCM16 quantization rounds to nearest and clamps at full scale.
inline void write_wav(const std::filesystem::path &path, const AudioBuffer &buf,
                      SampleFormat format = SampleFormat::kPcm16) {
  const auto bytes = encode_wav(buf, format);
  detail::write_all_bytes(path, bytes);
}

// ---------------------------------------------------------------------------
// RTTM
//
// SPEAKER <file> 1 <onset> <duration> <NA> <NA> <speaker> <NA> <NA>

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

inline bool parse_real(std::string_view text, double &value) {
  std::string s(text);
  char *end = nullptr;
  errno = 0;
  value = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno == 0 && std::isfinite(value);
}

}  // namespace detail

inline std::vector<Turn> parse_rttm(std::string_view text) {
  std::vector<Turn> turns;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;

    const auto fields = detail::split_fields(line);
    if (fields.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() < 9 || fields[0] != "SPEAKER") {
      throw Error(ErrorCode::kMalformedLine, where, line_no);
    }
    Turn t;
    t.file_id = std::string(fields[1]);
    t.speaker_id = std::string(fields[7]);
    if (!detail::parse_real(fields[3], t.onset_s) ||
        !detail::parse_real(fields[4], t.duration_s)) {
      throw Error(ErrorCode::kNonNumericTime, where, line_no);
    }
    if (t.onset_s < 0.0) throw Error(ErrorCode::kMalformedLine, where + ": negative onset", line_no);
    if (t.duration_s <= 0.0) throw Error(ErrorCode::kNonPositiveDuration, where, line_no);
    turns.push_back(std::move(t));
    if (end == text.size()) break;
  }
  return turns;
}

inline std::string emit_rttm(std::span<const Turn> turns) {
  std::string out;
  std::array<char, 64> num{};
  for (const auto &t : turns) {
    out += "SPEAKER ";
    out += t.file_id;
    out += " 1 ";
    std::snprintf(num.data(), num.size(), "%.3f %.3f", t.onset_s, t.duration_s);
    out += num.data();
    out += " <NA> <NA> ";
    out += t.speaker_id;
    out += " <NA> <NA>\n";
  }
  return out;
}

inline std::vector<Turn> read_rttm(const std::filesystem::path &path) {
  const auto bytes = detail::read_all_bytes(path);
  return parse_rttm(std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()));
}

inline void write_rttm(const std::filesystem::path &path, std::span<const Turn> turns) {
  const std::string text = emit_rttm(turns);
  detail::write_all_bytes(
      path, std::span(reinterpret_cast<const unsigned char *>(text.data()), text.size()));
}

// ---------------------------------------------------------------------------
// Resampling
//
// Kaiser-windowed sinc with 16 zero crossings per side, tabulated.

namespace detail {

inline constexpr int kSincZeroCrossings = 16;
inline constexpr int kSincTableResolution = 512;
inline constexpr double kKaiserBeta = 8.6;

inline const std::vector<double> &sinc_table() {
  static const std::vector<double> table = [] {
    const int n = kSincZeroCrossings * kSincTableResolution;
    std::vector<double> t(n + 2, 0.0);
    const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
    for (int i = 0; i <= n; ++i) {
      const double u = static_cast<double>(i) / kSincTableResolution;
      const double sinc = i == 0 ? 1.0 : std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
      const double r = u / kSincZeroCrossings;
      const double kaiser =
          std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
      t[i] = sinc * kaiser;
    }
    return t;
  }();
  return table;
}

inline double sinc_kernel(double u) {
  u = std::abs(u);
  const double pos = u * kSincTableResolution;
  const auto i = static_cast<std::size_t>(pos);
  const auto &t = sinc_table();
  if (i + 1 >= t.size() - 1) return 0.0;
  const double frac = pos - static_cast<double>(i);
  return t[i] + frac * (t[i + 1] - t[i]);
}

}  // namespace detail

// Resamples `x` so that output sample n sits at input position n / ratio.
// Output length is `out_len`; samples outside the input are treated as zero.
inline std::vector<double> resample_by_ratio(std::span<const double> x, double ratio,
                                             std::size_t out_len) {
  std::vector<double> y(out_len, 0.0);
  if (x.empty()) return y;
  const double cutoff = std::min(1.0, ratio);
  const double half_width = detail::kSincZeroCrossings / cutoff;
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  for (std::size_t n = 0; n < out_len; ++n) {
    const double p = static_cast<double>(n) / ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(p - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n_in - 1, static_cast<std::ptrdiff_t>(std::floor(p + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      acc += x[static_cast<std::size_t>(k)] * detail::sinc_kernel(cutoff * (p - static_cast<double>(k)));
    }
    y[n] = cutoff * acc;
  }
  return y;
}

// Output length is round(len * target / source).
inline AudioBuffer resample(const AudioBuffer &buf, int target_rate_hz) {
  if (target_rate_hz <= 0) throw Error(ErrorCode::kInvalidArgument, "target rate must be positive");
  if (target_rate_hz == buf.sample_rate_hz) return buf;
  const double ratio = static_cast<double>(target_rate_hz) / buf.sample_rate_hz;
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(buf.size()) * ratio));
  const auto x = to_double(buf.samples);
  AudioBuffer out;
  out.sample_rate_hz = target_rate_hz;
  out.samples = to_float(resample_by_ratio(x, ratio, out_len));
  return out;
}

}  // namespace diarkit
