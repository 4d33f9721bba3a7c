// diarkit/pipeline.hpp
//
// End-to-end diarization of one file: optional denoise, VAD, windowing,
// embedding, clustering and turn assembly.

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/augment.hpp"
#include "diarkit/cluster.hpp"
#include "diarkit/dsp.hpp"
#include "diarkit/embed.hpp"
#include "diarkit/error.hpp"
#include "diarkit/metrics.hpp"
#include "diarkit/train.hpp"
#include "diarkit/vad.hpp"

namespace diarkit {

struct PipelineConfig {
  VadParams vad;
  SegmentParams segment;
  MfccConfig mfcc;
  bool cepstral_mean_norm = true;
  bool denoise = false;
  DenoiseParams denoise_params;
  StopRule stop = StopRule::at_threshold(0.5);
  double merge_gap_s = kDefaultTurnMergeGap;
  double collar_s = kDefaultCollar;
  AugmentSpec augment = AugmentSpec::identity();
  TrainConfig train;

  void validate() const {
    vad.validate();
    segment.validate();
    mfcc.validate();
    denoise_params.validate();
    augment.validate();
    train.validate();
    if (stop.kind == StopRule::Kind::kThreshold && !(stop.threshold >= 0.0 && stop.threshold <= 2.0)) {
      throw Error(ErrorCode::kInvalidArgument, "cluster threshold must be in [0, 2]");
    }
    if (stop.kind == StopRule::Kind::kClusterCount && stop.k == 0) {
      throw Error(ErrorCode::kInvalidArgument, "cluster k must be positive");
    }
    if (!(merge_gap_s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "merge_gap_s must be >= 0");
    if (!(collar_s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "collar_s must be >= 0");
  }
};

struct DiarizationResult {
  AudioBuffer audio;  // after resampling and denoising
  std::vector<SpeechRegion> regions;
  std::vector<Segment> segments;
  std::vector<Embedding> embeddings;
  ClusterResult clusters;
  std::vector<Turn> turns;
};

// Windows each region separately, keeping region order; indices follow that
// order. Used when regions come from outside (e.g. reference turns), since
// such regions may overlap.
inline std::vector<Segment> segment_regions_in_order(std::span<const SpeechRegion> regions,
                                                     const SegmentParams &params, const std::string &file_id) {
  std::vector<Segment> out;
  for (const auto &r : regions) {
    const SpeechRegion one[] = {r};
    for (auto s : uniform_segment(one, params, file_id)) {
      s.index = out.size();
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::vector<SpeechRegion> turns_to_regions(std::span<const Turn> turns) {
  std::vector<SpeechRegion> out;
  for (const auto &t : turns) out.push_back({t.onset_s, t.offset_s()});
  return out;
}

struct DiarizeOptions {
  // Replaces VAD; every region is windowed on its own.
  std::optional<std::vector<SpeechRegion>> regions;
  // Replaces the MFCC embedder.
  const EmbeddingProvider *embedder = nullptr;
};

inline DiarizationResult diarize(const AudioBuffer &input, const PipelineConfig &cfg, const std::string &file_id,
                                 const DiarizeOptions &opts = {}) {
  cfg.validate();
  if (input.empty()) throw Error(ErrorCode::kEmptyBuffer, "empty input audio");
  DiarizationResult r;
  r.audio = resample(input, kCanonicalSampleRate);
  if (cfg.denoise) r.audio = spectral_gate_denoise(r.audio, cfg.denoise_params);

  if (opts.regions) {
    r.regions = *opts.regions;
    r.segments = segment_regions_in_order(r.regions, cfg.segment, file_id);
  } else {
    r.regions = energy_vad(r.audio, cfg.vad);
    r.segments = uniform_segment(r.regions, cfg.segment, file_id);
  }
  if (r.segments.empty()) return r;

  std::optional<MfccEmbedder> mfcc;
  const EmbeddingProvider *embedder = opts.embedder;
  if (!embedder) {
    mfcc = cfg.cepstral_mean_norm ? MfccEmbedder::for_run(r.audio, r.segments, cfg.mfcc) : MfccEmbedder(cfg.mfcc);
    embedder = &*mfcc;
  }
  r.embeddings.reserve(r.segments.size());
  for (const auto &s : r.segments) r.embeddings.push_back(embedder->embed(r.audio, s));

  StopRule stop = cfg.stop;
  if (stop.kind == StopRule::Kind::kClusterCount) stop.k = std::min(stop.k, r.segments.size());
  r.clusters = agglomerative_cluster(r.embeddings, stop);
  r.turns = labels_to_turns(r.segments, r.clusters.labels, file_id, cfg.merge_gap_s);
  return r;
}

// Reference speaker with the most overlap inside each segment ("" if none).
inline std::vector<std::string> majority_reference_speakers(std::span<const Segment> segments,
                                                            std::span<const Turn> reference) {
  std::vector<std::string> out;
  out.reserve(segments.size());
  for (const auto &s : segments) {
    std::map<std::string, double> overlap;
    for (const auto &t : reference) {
      const double ov = std::min(s.offset_s, t.offset_s()) - std::max(s.onset_s, t.onset_s);
      if (ov > 0.0) overlap[t.speaker_id] += ov;
    }
    std::string best;
    double best_ov = 0.0;
    for (const auto &[spk, ov] : overlap) {
      if (ov > best_ov) {
        best_ov = ov;
        best = spk;
      }
    }
    out.push_back(best);
  }
  return out;
}

// Count-based purity over segments that contain reference speech; nullopt
// when none do.
inline std::optional<double> segment_purity(const DiarizationResult &r, std::span<const Turn> reference) {
  const auto speakers = majority_reference_speakers(r.segments, reference);
  std::vector<std::string> ref;
  std::vector<int> labels;
  for (std::size_t i = 0; i < speakers.size(); ++i) {
    if (speakers[i].empty()) continue;
    ref.push_back(speakers[i]);
    labels.push_back(r.clusters.labels[i]);
  }
  if (ref.empty()) return std::nullopt;
  return cluster_purity(ref, labels);
}

}  // namespace diarkit
