// diarkit/corpus.hpp
//
// Synthetic multi-speaker corpus: scheduled turns with pauses and partial
// overlap, rendered from the voice synthesizer, laid out in speaker-count
// folders with a train/val/test split.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "diarkit/audio_io.hpp"
#include "diarkit/error.hpp"
#include "diarkit/parallel.hpp"
#include "diarkit/synth.hpp"

namespace diarkit {

inline constexpr std::size_t kProfilePoolSize = 24;
inline constexpr std::size_t kMaxSpeakers = 4;
inline constexpr double kBackgroundRms = 1e-3;
inline constexpr double kDefaultOverlapFraction = 0.1;

struct MixtureParams {
  double min_turn_s = 2.0;
  double max_turn_s = 5.0;
  double min_pause_s = 0.4;
  double max_pause_s = 1.0;
  double overlap_fraction = kDefaultOverlapFraction;
  double lead_in_s = 0.2;
  double background_rms = kBackgroundRms;
};

struct Mixture {
  AudioBuffer audio;
  std::vector<Turn> turns;
};

inline std::string speaker_name(std::size_t pool_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%02zu", pool_index);
  return buf;
}

namespace detail {

inline double to_grid(double t) { return std::round(t * 100.0) / 100.0; }

}  // namespace detail

// Renders `speakers` (indices into `pool`) into one file. Speakers take turns
// (never the same speaker twice in a row) separated by pauses; whenever the
// overlapped time falls behind overlap_fraction of the speech so far, the
// next turn starts before the current one ends. Turn times sit on a 10 ms
// grid. An empty speaker list yields background noise only.
inline Mixture render_mixture(const std::vector<SpeakerProfile> &pool, const std::vector<std::size_t> &speakers,
                              double duration_s, std::uint64_t seed, const std::string &file_id,
                              const MixtureParams &params = {}) {
  if (speakers.size() > kMaxSpeakers) throw Error(ErrorCode::kBadSpeakerCount, "at most 4 speakers per file");
  if (!(params.overlap_fraction >= 0.0 && params.overlap_fraction <= 0.3)) {
    throw Error(ErrorCode::kInvalidArgument, "overlap_fraction must be in [0, 0.3]");
  }
  if (!speakers.empty() && duration_s < 4.0) throw Error(ErrorCode::kTooShort, "mixtures need >= 4 s");
  if (!(duration_s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "duration must be positive");
  for (std::size_t s : speakers) {
    if (s >= pool.size()) throw Error(ErrorCode::kIndexOutOfRange, "speaker index outside the pool");
  }

  std::mt19937_64 rng(mix_seed(seed, 0x7a11));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kCanonicalSampleRate));
  Mixture mix;
  mix.audio.sample_rate_hz = kCanonicalSampleRate;
  std::vector<double> y(n, 0.0);

  if (!speakers.empty()) {
    const double end_limit = duration_s - 0.2;
    const auto ns = static_cast<double>(speakers.size());
    const double hi = std::min(params.max_turn_s,
                               std::max(kMinUtteranceSeconds + 0.1, (end_limit - params.lead_in_s) / ns - params.min_pause_s));
    const double lo = std::min(params.min_turn_s, hi);
    std::vector<std::size_t> order(speakers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    double cursor = params.lead_in_s;  // earliest start of the next turn
    double last_end = params.lead_in_s;
    double speech = 0.0, overlapped = 0.0;
    std::size_t current = speakers.size();
    for (std::size_t k = 0;; ++k) {
      std::size_t who;
      if (k < order.size()) {
        who = order[k];
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, speakers.size() - 2);
        who = pick(rng);
        if (who >= current) ++who;
      }
      if (speakers.size() == 1) who = 0;
      double len = detail::to_grid(lo + (hi - lo) * u(rng));
      double start = detail::to_grid(cursor);
      if (k > 0) {
        const double prev_len = mix.turns.back().duration_s;
        if (overlapped < params.overlap_fraction * speech && speakers.size() > 1) {
          const double ov = detail::to_grid(std::min(0.5 * std::min(prev_len, len), 0.3 + 0.7 * u(rng)));
          start = detail::to_grid(last_end - ov);
        } else {
          start = detail::to_grid(last_end + params.min_pause_s + (params.max_pause_s - params.min_pause_s) * u(rng));
        }
      }
      if (start + len > end_limit) {
        len = detail::to_grid(std::floor((end_limit - start) * 100.0) / 100.0);
        if (len < kMinUtteranceSeconds) {
          if (k < order.size()) throw Error(ErrorCode::kTooShort, "file too short for its speakers");
          break;
        }
      }
      if (k > 0) {
        overlapped += std::max(0.0, last_end - start);
      }
      mix.turns.push_back({file_id, speaker_name(speakers[who]), start, len});
      speech += len;
      const auto voice = synth_utterance(pool[speakers[who]], len, mix_seed(seed, k + 1));
      const auto at = static_cast<std::size_t>(std::llround(start * kCanonicalSampleRate));
      for (std::size_t i = 0; i < voice.size() && at + i < n; ++i) y[at + i] += voice.samples[i];
      last_end = std::max(last_end, start + len);
      cursor = last_end;
      current = who;
    }
  }

  std::mt19937_64 noise_rng(mix_seed(seed, 0x401e5));
  std::normal_distribution<double> gauss(0.0, params.background_rms);
  for (double &v : y) v += gauss(noise_rng);
  mix.audio.samples = to_float(y);
  return mix;
}

// Stand-alone mixture with speakers drawn from a seeded 24-profile pool.
inline Mixture generate_mixture(std::size_t n_speakers, double duration_s, double overlap_fraction,
                                std::uint64_t seed, const std::string &file_id = "mix") {
  if (n_speakers > kMaxSpeakers) throw Error(ErrorCode::kBadSpeakerCount, "n_speakers must be 0..4");
  const auto pool = make_profile_pool(kProfilePoolSize, seed);
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(mix_seed(seed, 0x9a1));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n_speakers);
  MixtureParams p;
  p.overlap_fraction = overlap_fraction;
  return render_mixture(pool, idx, duration_s, seed, file_id, p);
}

enum class Split { kTrain, kVal, kTest };

inline const char *to_string(Split s) {
  return s == Split::kTrain ? "train" : s == Split::kVal ? "val" : "test";
}

inline Split parse_split(const std::string &s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw Error(ErrorCode::kInvalidArgument, "unknown split: " + s);
}

struct ManifestEntry {
  std::string path;  // relative to the corpus root
  std::string rttm_path;
  std::string file_id;
  std::size_t folder = 0;
  double duration_s = 0.0;
  std::vector<std::string> speakers;
  Split split = Split::kTrain;
  std::uint64_t seed = 0;
  std::vector<std::size_t> speaker_indices;
};

struct CorpusManifest {
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry *> select(std::size_t folder, std::optional<Split> split = {}) const {
    std::vector<const ManifestEntry *> out;
    for (const auto &e : entries) {
      if (e.folder == folder && (!split || e.split == *split)) out.push_back(&e);
    }
    return out;
  }
};

using FolderLayout = std::map<std::size_t, std::size_t>;

inline FolderLayout default_layout() { return {{0, 60}, {1, 58}, {2, 51}, {3, 50}, {4, 50}}; }

struct SplitFractions {
  double train = 0.7;
  double val = 0.2;
  double test = 0.1;

  void validate() const {
    if (train < 0.0 || val < 0.0 || test < 0.0 || std::abs(train + val + test - 1.0) > 1e-9) {
      throw Error(ErrorCode::kBadSplit, "split fractions must be non-negative and sum to 1");
    }
  }
};

// Largest-remainder apportionment of n items; ties go to the earlier split.
inline std::array<std::size_t, 3> split_counts(std::size_t n, const SplitFractions &f) {
  f.validate();
  const std::array<double, 3> quota = {f.train * static_cast<double>(n), f.val * static_cast<double>(n),
                                       f.test * static_cast<double>(n)};
  std::array<std::size_t, 3> counts{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    counts[i] = static_cast<std::size_t>(std::floor(quota[i] + 1e-9));
    assigned += counts[i];
  }
  std::array<std::size_t, 3> rank = {0, 1, 2};
  // Remainders within 1e-9 count as tied so rounding noise cannot reorder them.
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return quota[a] - static_cast<double>(counts[a]) > quota[b] - static_cast<double>(counts[b]) + 1e-9;
  });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[rank[k % 3]];
  return counts;
}

// Parses "0:60,1:58,...".
inline FolderLayout parse_layout(const std::string &text) {
  FolderLayout layout;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t colon = item.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
      std::size_t used = 0;
      const auto folder = std::stoul(item.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument("folder");
      const std::string count_text = item.substr(colon + 1);
      const auto count = std::stoul(count_text, &used);
      if (used != count_text.size()) throw std::invalid_argument("count");
      if (folder > kMaxSpeakers) throw Error(ErrorCode::kBadSpeakerCount, "folder index must be 0..4");
      layout[folder] = count;
    } catch (const std::logic_error &) {
      throw Error(ErrorCode::kInvalidArgument, "bad layout item: " + item);
    }
    pos = comma + 1;
  }
  if (layout.empty()) throw Error(ErrorCode::kInvalidArgument, "empty layout");
  return layout;
}

struct CorpusParams {
  FolderLayout layout = default_layout();
  SplitFractions split;
  std::uint64_t seed = 0;
  double min_duration_s = 15.0;
  double max_duration_s = 45.0;
  MixtureParams mixture;
};

// Assigns every file its folder, duration, speakers and split without
// rendering any audio.
inline CorpusManifest plan_dataset(const CorpusParams &p) {
  p.split.validate();
  if (!(p.min_duration_s >= 4.0 && p.max_duration_s >= p.min_duration_s)) {
    throw Error(ErrorCode::kInvalidArgument, "file durations must satisfy 4 <= min <= max");
  }
  CorpusManifest m;
  m.seed = p.seed;
  for (const auto &[folder, count] : p.layout) {
    if (folder > kMaxSpeakers) throw Error(ErrorCode::kBadSpeakerCount, "folder index must be 0..4");
    const auto counts = split_counts(count, p.split);
    std::vector<Split> splits;
    for (std::size_t s = 0; s < 3; ++s) splits.insert(splits.end(), counts[s], static_cast<Split>(s));
    std::mt19937_64 rng(mix_seed(p.seed, 0xf0 + folder));
    std::shuffle(splits.begin(), splits.end(), rng);
    std::uniform_real_distribution<double> dur(p.min_duration_s, p.max_duration_s);
    for (std::size_t i = 0; i < count; ++i) {
      ManifestEntry e;
      char name[32];
      std::snprintf(name, sizeof name, "f%zu_%03zu", folder, i);
      e.file_id = name;
      e.folder = folder;
      e.path = std::to_string(folder) + "/" + e.file_id + ".wav";
      e.rttm_path = std::to_string(folder) + "/" + e.file_id + ".rttm";
      e.duration_s = detail::to_grid(dur(rng));
      e.split = splits[i];
      e.seed = mix_seed(p.seed, folder * 100000 + i);
      std::vector<std::size_t> idx(kProfilePoolSize);
      for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(folder);
      std::sort(idx.begin(), idx.end());
      e.speaker_indices = idx;
      for (std::size_t s : idx) e.speakers.push_back(speaker_name(s));
      m.entries.push_back(std::move(e));
    }
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const ManifestEntry &a, const ManifestEntry &b) { return a.path < b.path; });
  return m;
}

inline Mixture render_entry(const ManifestEntry &e, const std::vector<SpeakerProfile> &pool,
                            const MixtureParams &params = {}) {
  return render_mixture(pool, e.speaker_indices, e.duration_s, e.seed, e.file_id, params);
}

inline nlohmann::json manifest_to_json(const CorpusManifest &m) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["sample_rate_hz"] = kCanonicalSampleRate;
  auto arr = nlohmann::json::array();
  for (const auto &e : m.entries) {
    arr.push_back({{"path", e.path},
                   {"rttm", e.rttm_path},
                   {"file_id", e.file_id},
                   {"folder", e.folder},
                   {"duration_s", e.duration_s},
                   {"speakers", e.speakers},
                   {"split", to_string(e.split)}});
  }
  j["entries"] = std::move(arr);
  return j;
}

inline CorpusManifest manifest_from_json(const nlohmann::json &j) {
  CorpusManifest m;
  try {
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto &item : j.at("entries")) {
      ManifestEntry e;
      e.path = item.at("path").get<std::string>();
      e.rttm_path = item.value("rttm", std::string{});
      e.file_id = item.value("file_id", std::filesystem::path(e.path).stem().string());
      e.folder = item.value("folder", std::size_t{0});
      e.duration_s = item.value("duration_s", 0.0);
      e.speakers = item.value("speakers", std::vector<std::string>{});
      e.split = parse_split(item.value("split", std::string{"test"}));
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception &ex) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed manifest: ") + ex.what());
  }
  return m;
}

inline CorpusManifest read_manifest(const std::filesystem::path &path) {
  const auto bytes = detail::read_all_bytes(path);
  try {
    return manifest_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::parse_error &ex) {
    throw Error(ErrorCode::kInvalidArgument, std::string("manifest is not JSON: ") + ex.what());
  }
}

// Writes out_dir/<folder>/<file>.wav and .rttm plus out_dir/manifest.json.
inline CorpusManifest generate_dataset(const CorpusParams &p, const std::filesystem::path &out_dir,
                                       std::size_t jobs = 1) {
  CorpusManifest m = plan_dataset(p);
  const auto pool = make_profile_pool(kProfilePoolSize, p.seed);
  std::error_code ec;
  for (const auto &[folder, count] : p.layout) {
    std::filesystem::create_directories(out_dir / std::to_string(folder), ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + (out_dir / std::to_string(folder)).string());
  }
  parallel_for(m.entries.size(), jobs, [&](std::size_t i) {
    const auto &e = m.entries[i];
    const auto mix = render_entry(e, pool, p.mixture);
    write_wav(out_dir / e.path, mix.audio);
    write_rttm(out_dir / e.rttm_path, mix.turns);
  });
  const std::string text = manifest_to_json(m).dump(2) + "\n";
  detail::write_all_bytes(out_dir / "manifest.json",
                          std::vector<unsigned char>(text.begin(), text.end()));
  return m;
}

}  // namespace diarkit
