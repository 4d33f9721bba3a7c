#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace diarkit;

namespace fs = std::filesystem;

TEST(Corpus, SplitCountsSumAndStayNearQuota) {
  oracle::Gen g(31);
  for (int c = 0; c < 500; ++c) {
    const std::size_t n = g.index(0, 300);
    const double a = g.uniform(0, 1), b = g.uniform(0, 1 - a);
    const SplitFractions f{a, b, 1.0 - a - b};
    const auto k = split_counts(n, f);
    ASSERT_EQ(k[0] + k[1] + k[2], n);
    ASSERT_LE(std::abs(static_cast<double>(k[0]) - a * n), 1.0);
    ASSERT_LE(std::abs(static_cast<double>(k[1]) - b * n), 1.0);
  }
  EXPECT_EQ(split_counts(60, {}), (std::array<std::size_t, 3>{42, 12, 6}));
  EXPECT_EQ(split_counts(58, {}), (std::array<std::size_t, 3>{41, 11, 6}));
  EXPECT_THROW(split_counts(10, SplitFractions{0.5, 0.5, 0.5}), Error);
}

TEST(Corpus, LayoutParsing) {
  EXPECT_EQ(parse_layout("0:60,1:58,2:51,3:50,4:50"), default_layout());
  EXPECT_THROW(parse_layout("0:1,9:2"), Error);
  EXPECT_THROW(parse_layout("0-1"), Error);
  EXPECT_THROW(parse_layout(""), Error);
}

TEST(Corpus, PlanMatchesLayoutAndSpeakerCounts) {
  CorpusParams p;
  const auto m = plan_dataset(p);
  ASSERT_EQ(m.entries.size(), 269u);
  for (const auto &[folder, count] : default_layout()) {
    const auto files = m.select(folder);
    ASSERT_EQ(files.size(), count);
    for (const auto *e : files) {
      EXPECT_EQ(e->speakers.size(), folder);
      EXPECT_GE(e->duration_s, p.min_duration_s);
      EXPECT_LE(e->duration_s, p.max_duration_s);
      std::set<std::string> uniq(e->speakers.begin(), e->speakers.end());
      EXPECT_EQ(uniq.size(), folder);
    }
  }
  const auto again = plan_dataset(p);
  EXPECT_EQ(manifest_to_json(m), manifest_to_json(again));
  p.seed = 1;
  EXPECT_NE(manifest_to_json(m), manifest_to_json(plan_dataset(p)));
}

TEST(Corpus, MixtureTurnsAreOnGridAndRespectOverlapBudget) {
  const auto pool = make_profile_pool(24, 0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto mix = render_mixture(pool, {1, 5, 9}, 30.0, seed, "f");
    EXPECT_NEAR(mix.audio.duration_s(), 30.0, 1e-3);
    double speech = 0.0;
    for (const auto &t : mix.turns) {
      EXPECT_NEAR(t.onset_s * 100.0, std::round(t.onset_s * 100.0), 1e-6);
      EXPECT_LE(t.offset_s(), 30.0 + 1e-9);
      speech += t.duration_s;
    }
    // Overlap time: reference speech counted with multiplicity minus its union.
    std::vector<std::pair<double, double>> spans;
    for (const auto &t : mix.turns) spans.push_back({t.onset_s, t.offset_s()});
    std::sort(spans.begin(), spans.end());
    double uni = 0.0, end = -1.0;
    for (auto [a, b] : spans) {
      if (a > end) {
        uni += b - a;
        end = b;
      } else if (b > end) {
        uni += b - end;
        end = b;
      }
    }
    EXPECT_LE((speech - uni) / speech, 0.3);
  }
  EXPECT_THROW(render_mixture(pool, {1, 2, 3, 4, 5}, 30.0, 0, "f"), Error);
  EXPECT_THROW(render_mixture(pool, {1}, 2.0, 0, "f"), Error);
  const auto empty = render_mixture(pool, {}, 10.0, 0, "f");
  EXPECT_TRUE(empty.turns.empty());
  EXPECT_NEAR(rms(empty.audio.samples), kBackgroundRms, 2e-4);
}

TEST(Corpus, GenerationIsByteIdenticalAndManifestRoundTrips) {
  CorpusParams p;
  p.layout = {{0, 1}, {1, 2}, {2, 2}};
  p.min_duration_s = 6.0;
  p.max_duration_s = 8.0;
  const auto a = oracle::scratch_dir("corpus_a"), b = oracle::scratch_dir("corpus_b");
  const auto ma = generate_dataset(p, a, 2);
  generate_dataset(p, b, 1);
  for (const auto &e : ma.entries) {
    for (const auto &rel : {e.path, e.rttm_path}) {
      std::ifstream fa(a / rel, std::ios::binary), fb(b / rel, std::ios::binary);
      const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
      ASSERT_TRUE(fs::exists(a / rel)) << rel;
      ASSERT_EQ(sa, sb) << rel;
    }
    EXPECT_EQ(read_rttm(a / e.rttm_path).size(), render_entry(e, make_profile_pool(24, p.seed)).turns.size());
  }
  const auto back = read_manifest(a / "manifest.json");
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(ma));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Config, RoundTripAndStrictKeys) {
  PipelineConfig c;
  c.denoise = true;
  c.stop = StopRule::with_k(3);
  c.train.schedule = LrSchedule::kCosine;
  c.denoise_params.smooth_bins = 4;
  const auto j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)), j);
  EXPECT_THROW(config_from_json(nlohmann::json{{"vad", {{"bogus", 1}}}}), Error);
  EXPECT_THROW(config_from_json(nlohmann::json{{"cluster", {{"k", 2}, {"threshold", 0.5}}}}), Error);
  EXPECT_THROW(config_from_json(nlohmann::json{{"train", {{"dual_loss_lambda", 3}}}}), Error);
  EXPECT_THROW(config_from_json(nlohmann::json{{"vad", {{"frame_ms", "ten"}}}}), Error);
}

TEST(Parallel, RethrowsFirstFailureByIndex) {
  std::vector<int> hits(20, 0);
  try {
    parallel_for(20, 4, [&](std::size_t i) {
      hits[i] = 1;
      if (i == 7 || i == 13) throw Error(ErrorCode::kIoError, std::to_string(i));
    });
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
  }
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 20);
}

namespace {

Mixture small_mixture(std::size_t n_speakers, std::uint64_t seed) {
  return generate_mixture(n_speakers, 20.0, 0.0, seed, "m");
}

}  // namespace

TEST(Pipeline, OracleEmbeddingsGiveNearZeroDer) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto mix = small_mixture(3, seed);
    PipelineConfig cfg;
    cfg.stop = StopRule::at_threshold(0.5);
    const auto regions = turns_to_regions(mix.turns);
    const auto segs = segment_regions_in_order(regions, cfg.segment, "m");
    std::map<std::string, std::size_t> ids;
    for (const auto &t : mix.turns) ids.emplace(t.speaker_id, ids.size());
    std::map<std::size_t, Embedding> table;
    const auto owners = majority_reference_speakers(segs, mix.turns);
    for (const auto &s : segs) {
      std::vector<double> v(ids.size(), 0.0);
      v[ids.at(owners[s.index])] = 1.0;
      table[s.index] = {v, s.index};
    }
    const ExternalEmbeddings ext(table, ids.size());
    const auto r = diarize(mix.audio, cfg, "m", {regions, &ext});
    EXPECT_LT(compute_der(mix.turns, r.turns).der, 0.01);
  }
}

TEST(Pipeline, MfccKnownKSeparatesSpeakers) {
  const auto mix = small_mixture(2, 4);
  PipelineConfig cfg;
  cfg.stop = StopRule::with_k(2);
  const auto r = diarize(mix.audio, cfg, "m");
  EXPECT_EQ(r.clusters.num_clusters(), 2);
  EXPECT_LT(compute_der(mix.turns, r.turns).der, 0.2);
  EXPECT_GE(segment_purity(r, mix.turns).value(), 0.85);
}

TEST(Pipeline, SilenceYieldsNoTurns) {
  AudioBuffer silent{std::vector<float>(16000 * 5, 0.f)};
  const auto r = diarize(silent, PipelineConfig{}, "s");
  EXPECT_TRUE(r.segments.empty());
  EXPECT_TRUE(r.turns.empty());
  EXPECT_THROW(diarize(AudioBuffer{}, PipelineConfig{}, "s"), Error);
}

TEST(Pipeline, ResamplesNonCanonicalInput) {
  const auto mix = small_mixture(2, 6);
  const auto at8k = resample(mix.audio, 8000);
  PipelineConfig cfg;
  cfg.stop = StopRule::with_k(2);
  const auto r = diarize(at8k, cfg, "m");
  EXPECT_EQ(r.audio.sample_rate_hz, kCanonicalSampleRate);
  EXPECT_LT(compute_der(mix.turns, r.turns).der, 0.3);
}
