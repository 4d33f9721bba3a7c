#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace diarkit;

namespace fs = std::filesystem;

namespace {

template <typename Fn>
std::optional<ErrorCode> error_of(Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  return std::nullopt;
}

AudioBuffer white(double seconds, double rms_level, std::uint64_t seed) {
  oracle::Gen g(seed);
  AudioBuffer b;
  b.samples.resize(static_cast<std::size_t>(seconds * kCanonicalSampleRate));
  for (auto &s : b.samples) s = static_cast<float>(rms_level * g.normal());
  return b;
}

}  // namespace

// ------------------------------------------------------------------ WAV

TEST(Wav, RoundTripsBothFormats) {
  const auto t = oracle::tone(300.0, 0.25, 0.4);
  for (auto fmt : {SampleFormat::kPcm16, SampleFormat::kFloat32}) {
    const auto w = decode_wav(encode_wav(t, fmt));
    EXPECT_EQ(w.format, fmt);
    ASSERT_EQ(w.audio.size(), t.size());
    EXPECT_EQ(w.audio.sample_rate_hz, t.sample_rate_hz);
    const double tol = fmt == SampleFormat::kPcm16 ? 1.0 / 32768.0 : 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) ASSERT_NEAR(w.audio.samples[i], t.samples[i], tol);
  }
}

TEST(Wav, Pcm16IsBitExactOnRequantization) {
  const auto once = decode_wav(encode_wav(oracle::tone(440.0, 0.1), SampleFormat::kPcm16)).audio;
  const auto twice = decode_wav(encode_wav(once, SampleFormat::kPcm16)).audio;
  EXPECT_EQ(once, twice);
}

TEST(Wav, ReportsMalformedFiles) {
  auto bytes = encode_wav(oracle::tone(440.0, 0.1), SampleFormat::kPcm16);
  EXPECT_EQ(error_of([&] { decode_wav(std::span(bytes).first(10)); }), ErrorCode::kCorruptHeader);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 100);
  EXPECT_EQ(error_of([&] { decode_wav(truncated); }), ErrorCode::kCorruptHeader);
  auto stereo = bytes;
  stereo[22] = 2;
  EXPECT_EQ(error_of([&] { decode_wav(stereo); }), ErrorCode::kUnsupportedFormat);
  auto alaw = bytes;
  alaw[20] = 6;
  EXPECT_EQ(error_of([&] { decode_wav(alaw); }), ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(error_of([&] { read_wav("/nonexistent/x.wav"); }), ErrorCode::kNotFound);
  EXPECT_EQ(error_of([&] { encode_wav(AudioBuffer{}, SampleFormat::kPcm16); }), ErrorCode::kEmptyBuffer);
}

TEST(Wav, FileRoundTrip) {
  const auto dir = oracle::scratch_dir("wav");
  const auto t = oracle::tone(200.0, 0.2);
  write_wav(dir / "a.wav", t, SampleFormat::kFloat32);
  EXPECT_EQ(read_wav(dir / "a.wav"), t);
  fs::remove_all(dir);
}

// ------------------------------------------------------------------ RTTM

TEST(Rttm, ParseEmitRoundTrip) {
  const std::vector<Turn> turns = {{"file1", "A", 0.5, 1.25}, {"file1", "B", 2.0, 0.75}};
  EXPECT_EQ(parse_rttm(emit_rttm(turns)), turns);
}

TEST(Rttm, ErrorsCarryLineNumbers) {
  const std::string good = "SPEAKER f 1 0.0 1.0 <NA> <NA> A <NA> <NA>\n";
  auto line_of = [](const std::string &text) {
    try {
      parse_rttm(text);
    } catch (const Error &e) {
      return std::pair{e.code(), e.line()};
    }
    return std::pair{ErrorCode::kInvalidArgument, -1};
  };
  EXPECT_EQ(line_of(good + "SPEAKER f 1 x 1.0 <NA> <NA> A <NA> <NA>\n"),
            std::pair(ErrorCode::kNonNumericTime, 2));
  EXPECT_EQ(line_of(good + good + "SPEAKER f 1 0 0 <NA> <NA> A <NA> <NA>\n"),
            std::pair(ErrorCode::kNonPositiveDuration, 3));
  EXPECT_EQ(line_of("SPEAKER f 1 0 1\n"), std::pair(ErrorCode::kMalformedLine, 1));
  EXPECT_TRUE(parse_rttm("\n\n").empty());
}

// ------------------------------------------------------------------ resampling / DSP

TEST(Resample, PreservesToneFrequencyAndLength) {
  AudioBuffer t = oracle::tone(440.0, 1.0, 0.5, 44100);
  const auto r = resample(t, 16000);
  EXPECT_EQ(r.size(), 16000u);
  EXPECT_NEAR(oracle::peak_hz(r), 440.0, 440.0 * 0.01);
  EXPECT_EQ(resample(r, 16000), r);
}

TEST(Dsp, RmsNormalizeHitsTarget) {
  const auto r = rms_normalize(oracle::tone(100.0, 0.5, 0.01));
  EXPECT_NEAR(rms(r.audio.samples), kDefaultTargetRms, 1e-6);
  EXPECT_FALSE(r.clipped);
  EXPECT_EQ(error_of([] { rms_normalize(AudioBuffer{{0.f, 0.f}}); }), ErrorCode::kSilentInput);
}

TEST(Dsp, SnrDefinition) {
  const auto s = oracle::tone(100.0, 0.5, 1.0);
  auto n = s;
  for (auto &v : n.samples) v *= 0.1f;
  EXPECT_NEAR(snr_db(s, n), 20.0, 1e-6);
  AudioBuffer silent{std::vector<float>(s.size(), 0.f)};
  EXPECT_TRUE(std::isinf(snr_db(s, silent)));
  EXPECT_EQ(error_of([&] { estimate_snr_db(s, oracle::tone(100.0, 0.4)); }), ErrorCode::kLengthMismatch);
}

TEST(Denoise, UnitGainReconstructsAndNeverAddsEnergy) {
  const auto t = oracle::tone(500.0, 1.0, 0.3);
  DenoiseParams p;
  p.attenuation_db = 1e-9;  // effectively unity gain everywhere
  const auto same = spectral_gate_denoise(t, p);
  ASSERT_EQ(same.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) ASSERT_NEAR(same.samples[i], t.samples[i], 1e-5);
  const auto noisy = add_noise(t, 0.5, NoiseKind::kWhite, 1);
  const auto out = spectral_gate_denoise(noisy);
  EXPECT_LE(mean_square(out.samples), mean_square(noisy.samples) * (1.0 + 1e-9));
}

TEST(Denoise, ImprovesSnrOfNoisyConversation) {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto clean = generate_mixture(2, 20.0, 0.1, seed, "m").audio;
    const auto noisy = add_noise(clean, 0.237, NoiseKind::kWhite, seed + 10);
    const double before = estimate_snr_db(noisy, clean);
    const double gain = estimate_snr_db(spectral_gate_denoise(noisy), clean) - before;
    EXPECT_NEAR(before, 12.5, 0.1);
    EXPECT_GT(gain, 1.0);
    total += gain;
  }
  EXPECT_GE(total / 3.0, 3.0);
}

// ------------------------------------------------------------------ augmentation

TEST(Augment, PitchShiftMovesPeakBySemitones) {
  const auto t = oracle::tone(440.0, 1.0);
  const auto up = pitch_shift(t, 5.0);
  EXPECT_EQ(up.size(), t.size());
  EXPECT_NEAR(oracle::peak_hz(up), 587.33, 587.33 * 0.01);
  EXPECT_NEAR(oracle::peak_hz(pitch_shift(t, -5.0)), 329.63, 329.63 * 0.01);
  EXPECT_EQ(pitch_shift(t, 0.0), t);
}

TEST(Augment, SpeedChangeScalesDurationAndPitch) {
  const auto t = oracle::tone(440.0, 1.0);
  const auto fast = speed_change(t, 1.1);
  EXPECT_NEAR(fast.duration_s() / t.duration_s(), 1.0 / 1.1, 0.01 / 1.1);
  EXPECT_NEAR(oracle::peak_hz(fast), 484.0, 4.84);
  const std::vector<Turn> turns = {{"f", "A", 1.1, 2.2}};
  const auto scaled = rescale_turns(turns, 1.1);
  EXPECT_NEAR(scaled[0].onset_s, 1.0, 1e-12);
  EXPECT_NEAR(scaled[0].duration_s, 2.0, 1e-12);
}

TEST(Augment, NoiseIntensitySetsSnr) {
  const auto t = oracle::tone(440.0, 1.0);
  for (auto kind : {NoiseKind::kWhite, NoiseKind::kBabble}) {
    const auto n = add_noise(t, 0.05, kind, 3);
    EXPECT_NEAR(estimate_snr_db(n, t), 26.02, 0.05);
  }
  EXPECT_EQ(add_noise(t, 0.0, NoiseKind::kWhite, 1), t);
  EXPECT_EQ(add_noise(t, 0.05, NoiseKind::kWhite, 9), add_noise(t, 0.05, NoiseKind::kWhite, 9));
}

TEST(Augment, SpecLimits) {
  AugmentSpec s;
  s.pitch_semitones = 6.0;
  EXPECT_THROW(s.validate(), Error);
  s.allow_out_of_range = true;
  EXPECT_NO_THROW(s.validate());
  s = {};
  s.speed_factor = 1.2;
  EXPECT_THROW(s.validate(), Error);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = sample_augment_spec(seed);
    EXPECT_NO_THROW(r.validate());
  }
}

// ------------------------------------------------------------------ VAD / segmentation

TEST(Vad, SilenceHasNoSpeech) {
  AudioBuffer silent{std::vector<float>(16000 * 3, 0.f)};
  EXPECT_TRUE(energy_vad(silent).empty());
}

TEST(Vad, WhiteNoiseIsMostlyRejected) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto n = white(10.0, 0.1, seed);  // -20 dBFS
    double speech = 0.0;
    for (const auto &r : energy_vad(n)) speech += r.duration_s();
    EXPECT_LE(speech, 0.05 * n.duration_s());
  }
}

TEST(Vad, FindsBurstsInQuietBackground) {
  const auto pool = make_profile_pool(24, 0);
  AudioBuffer b = white(6.0, 1e-3, 1);
  const auto voice = synth_utterance(pool[0], 2.0, 5);
  for (std::size_t i = 0; i < voice.size(); ++i) b.samples[32000 + i] += voice.samples[i];
  const auto regions = energy_vad(b);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_NEAR(regions[0].onset_s, 2.0, 0.1);
  EXPECT_NEAR(regions[0].offset_s, 4.0, 0.3);
}

TEST(Vad, ScaleInvariant) {
  const auto pool = make_profile_pool(24, 0);
  AudioBuffer b = white(5.0, 1e-3, 2);
  const auto voice = synth_utterance(pool[4], 1.5, 6);
  for (std::size_t i = 0; i < voice.size(); ++i) b.samples[16000 + i] += voice.samples[i];
  auto loud = b;
  for (auto &v : loud.samples) v *= 4.0f;
  EXPECT_EQ(energy_vad(b), energy_vad(loud));
}

TEST(Segment, WindowsStayInsideRegionsAndCoverThem) {
  oracle::Gen g(23);
  for (int c = 0; c < 200; ++c) {
    std::vector<SpeechRegion> regions;
    double t = 0.0;
    for (std::size_t i = g.index(1, 5); i > 0; --i) {
      t += g.uniform(0.1, 2.0);
      const double d = g.uniform(0.2, 6.0);
      regions.push_back({t, t + d});
      t += d;
    }
    const SegmentParams p;
    const auto segs = uniform_segment(regions, p, "f");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      ASSERT_EQ(segs[i].index, i);
      ASSERT_LE(segs[i].duration_s(), p.window_s + 1e-9);
      ASSERT_GE(segs[i].duration_s(), p.min_tail_s - 1e-9);
      bool inside = false;
      for (const auto &r : regions) inside |= segs[i].onset_s >= r.onset_s - 1e-9 && segs[i].offset_s <= r.offset_s + 1e-9;
      ASSERT_TRUE(inside);
    }
    for (const auto &r : regions) {
      if (r.duration_s() < p.min_tail_s) continue;
      double reach = r.onset_s;
      for (const auto &s : segs) {
        if (s.onset_s >= r.onset_s - 1e-9 && s.offset_s <= r.offset_s + 1e-9 && s.onset_s <= reach + 1e-9) {
          reach = std::max(reach, s.offset_s);
        }
      }
      ASSERT_NEAR(reach, r.offset_s, 1e-9);
    }
  }
}

// ------------------------------------------------------------------ embeddings

TEST(Mfcc, ShapesAndDeterminism) {
  const auto pool = make_profile_pool(24, 0);
  const auto voice = synth_utterance(pool[1], 2.0, 3);
  const Segment s{"f", 0.0, 1.5, 0};
  const MfccConfig cfg;
  const auto f = mfcc_features(voice, s, cfg);
  EXPECT_EQ(f.cols, 39u);
  EXPECT_NEAR(static_cast<double>(f.rows), 148.0, 2.0);
  const MfccEmbedder e(cfg);
  const auto a = e.embed(voice, s), b = e.embed(voice, s);
  EXPECT_EQ(a.dim(), cfg.embedding_dim());
  EXPECT_EQ(a.vector, b.vector);
  EXPECT_EQ(error_of([&] { mfcc_features(voice, Segment{"f", 1.0, 3.0, 0}, cfg); }),
            ErrorCode::kSegmentOutOfRange);
}

TEST(Mfcc, MelScaleRoundTrip) {
  for (double hz : {0.0, 100.0, 1000.0, 7999.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
}

TEST(Mfcc, SameSpeakerCloserThanDifferentSpeakers) {
  const auto pool = make_profile_pool(24, 0);
  const MfccEmbedder e;
  const Segment s{"f", 0.0, 1.5, 0};
  const auto a1 = e.embed(synth_utterance(pool[2], 1.5, 1), s);
  const auto a2 = e.embed(synth_utterance(pool[2], 1.5, 2), s);
  const auto b1 = e.embed(synth_utterance(pool[17], 1.5, 1), s);
  EXPECT_LT(cosine_distance(a1, a2), cosine_distance(a1, b1));
}

TEST(EmbeddingFile, RoundTripAndErrors) {
  EmbeddingMatrix m{2, 3, {1, 2, 3, 4, 5, 6}};
  const auto bytes = encode_embedding_matrix(m);
  EXPECT_EQ(bytes.size(), 8u + 24u);
  EXPECT_EQ(decode_embedding_matrix(bytes).values, m.values);
  EXPECT_EQ(error_of([&] { decode_embedding_matrix(std::span(bytes).first(20)); }), ErrorCode::kTruncatedFile);
  EXPECT_EQ(error_of([&] { decode_embedding_matrix(std::span(bytes).first(4)); }), ErrorCode::kCorruptHeader);

  const auto dir = oracle::scratch_dir("emb");
  write_embedding_matrix(dir / "e.bin", m);
  EXPECT_EQ(error_of([&] { load_external_embeddings(dir / "e.bin", 4); }), ErrorCode::kDimMismatch);
  const auto ext = ExternalEmbeddings::load(dir / "e.bin", 3);
  EXPECT_EQ(ext.embed({}, Segment{"f", 0, 1, 1}).vector, (std::vector<double>{4, 5, 6}));
  EXPECT_EQ(error_of([&] { ext.embed({}, Segment{"f", 0, 1, 2}); }), ErrorCode::kIndexOutOfRange);
  fs::remove_all(dir);
}

// ------------------------------------------------------------------ synthesis

TEST(Synth, ProfilesAreValidAndDeterministic) {
  const auto a = make_profile_pool(24, 5), b = make_profile_pool(24, 5);
  ASSERT_EQ(a.size(), 24u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NO_THROW(a[i].validate());
    EXPECT_EQ(a[i].f0_hz, b[i].f0_hz);
  }
  const auto u = synth_utterance(a[0], 1.0, 7);
  EXPECT_EQ(u, synth_utterance(a[0], 1.0, 7));
  EXPECT_NEAR(rms(u.samples), kUtteranceRms, 1e-3);
  EXPECT_EQ(error_of([&] { synth_utterance(a[0], 0.2, 1); }), ErrorCode::kTooShort);
}
