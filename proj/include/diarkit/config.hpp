// diarkit/config.hpp
//
// PipelineConfig <-> JSON. Every field is optional; absent fields keep their
// defaults and unknown keys are rejected.

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>

#include "json.hpp"

#include "diarkit/audio_io.hpp"
#include "diarkit/error.hpp"
#include "diarkit/pipeline.hpp"

namespace diarkit {

namespace detail {

inline void check_keys(const nlohmann::json &obj, const std::string &where,
                       std::initializer_list<const char *> allowed) {
  if (!obj.is_object()) throw Error(ErrorCode::kInvalidArgument, "config: '" + where + "' must be an object");
  for (const auto &item : obj.items()) {
    bool ok = false;
    for (const char *k : allowed) ok |= item.key() == k;
    if (!ok) throw Error(ErrorCode::kInvalidArgument, "config: unknown key '" + where + "." + item.key() + "'");
  }
}

template <typename T>
void read_field(const nlohmann::json &obj, const char *key, T &out, const std::string &where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception &) {
    throw Error(ErrorCode::kInvalidArgument, "config: bad value for '" + where + "." + key + "'");
  }
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json &j) {
  using detail::check_keys;
  using detail::read_field;
  PipelineConfig c;
  check_keys(j, "config", {"vad", "segment", "embed", "denoise", "cluster", "scoring", "augment", "train"});
  if (j.contains("vad")) {
    const auto &v = j["vad"];
    check_keys(v, "vad", {"frame_ms", "hop_ms", "threshold_db", "hangover_ms", "min_region_ms",
                          "floor_percentile", "stationary_flatness"});
    read_field(v, "frame_ms", c.vad.frame_ms, "vad");
    read_field(v, "hop_ms", c.vad.hop_ms, "vad");
    read_field(v, "threshold_db", c.vad.threshold_db, "vad");
    read_field(v, "hangover_ms", c.vad.hangover_ms, "vad");
    read_field(v, "min_region_ms", c.vad.min_region_ms, "vad");
    read_field(v, "floor_percentile", c.vad.floor_percentile, "vad");
    read_field(v, "stationary_flatness", c.vad.stationary_flatness, "vad");
  }
  if (j.contains("segment")) {
    const auto &v = j["segment"];
    check_keys(v, "segment", {"window_s", "hop_s", "min_tail_s"});
    read_field(v, "window_s", c.segment.window_s, "segment");
    read_field(v, "hop_s", c.segment.hop_s, "segment");
    read_field(v, "min_tail_s", c.segment.min_tail_s, "segment");
  }
  if (j.contains("embed")) {
    const auto &v = j["embed"];
    check_keys(v, "embed", {"n_mels", "n_coeffs", "frame_ms", "hop_ms", "n_fft", "low_hz", "high_hz",
                            "pooled_dims", "cepstral_mean_norm"});
    read_field(v, "n_mels", c.mfcc.n_mels, "embed");
    read_field(v, "n_coeffs", c.mfcc.n_coeffs, "embed");
    read_field(v, "frame_ms", c.mfcc.frame_ms, "embed");
    read_field(v, "hop_ms", c.mfcc.hop_ms, "embed");
    read_field(v, "n_fft", c.mfcc.n_fft, "embed");
    read_field(v, "low_hz", c.mfcc.low_hz, "embed");
    read_field(v, "high_hz", c.mfcc.high_hz, "embed");
    read_field(v, "pooled_dims", c.mfcc.pooled_dims, "embed");
    read_field(v, "cepstral_mean_norm", c.cepstral_mean_norm, "embed");
  }
  if (j.contains("denoise")) {
    const auto &v = j["denoise"];
    check_keys(v, "denoise", {"enabled", "frame_len", "hop", "noise_percentile", "gate_threshold_db",
                              "attenuation_db", "smooth_frames", "smooth_bins"});
    read_field(v, "enabled", c.denoise, "denoise");
    read_field(v, "frame_len", c.denoise_params.frame_len, "denoise");
    read_field(v, "hop", c.denoise_params.hop, "denoise");
    read_field(v, "noise_percentile", c.denoise_params.noise_percentile, "denoise");
    read_field(v, "gate_threshold_db", c.denoise_params.gate_threshold_db, "denoise");
    read_field(v, "attenuation_db", c.denoise_params.attenuation_db, "denoise");
    read_field(v, "smooth_frames", c.denoise_params.smooth_frames, "denoise");
    read_field(v, "smooth_bins", c.denoise_params.smooth_bins, "denoise");
  }
  if (j.contains("cluster")) {
    const auto &v = j["cluster"];
    check_keys(v, "cluster", {"threshold", "k", "merge_gap_s"});
    if (v.contains("threshold") && v.contains("k")) {
      throw Error(ErrorCode::kInvalidArgument, "config: cluster.threshold and cluster.k are exclusive");
    }
    if (v.contains("k")) {
      std::size_t k = 0;
      read_field(v, "k", k, "cluster");
      c.stop = StopRule::with_k(k);
    } else {
      read_field(v, "threshold", c.stop.threshold, "cluster");
    }
    read_field(v, "merge_gap_s", c.merge_gap_s, "cluster");
  }
  if (j.contains("scoring")) {
    const auto &v = j["scoring"];
    check_keys(v, "scoring", {"collar_s"});
    read_field(v, "collar_s", c.collar_s, "scoring");
  }
  if (j.contains("augment")) {
    const auto &v = j["augment"];
    check_keys(v, "augment", {"noise_intensity", "noise_kind", "pitch_semitones", "speed_factor", "seed"});
    read_field(v, "noise_intensity", c.augment.noise_intensity, "augment");
    if (v.contains("noise_kind")) {
      std::string kind;
      read_field(v, "noise_kind", kind, "augment");
      c.augment.noise_kind = parse_noise_kind(kind);
    }
    read_field(v, "pitch_semitones", c.augment.pitch_semitones, "augment");
    read_field(v, "speed_factor", c.augment.speed_factor, "augment");
    read_field(v, "seed", c.augment.rng_seed, "augment");
  }
  if (j.contains("train")) {
    const auto &v = j["train"];
    check_keys(v, "train", {"learning_rate", "batch_size", "max_epochs", "weight_decay", "early_stop_patience",
                            "dual_loss_lambda", "seed", "schedule", "validation_fraction"});
    read_field(v, "learning_rate", c.train.learning_rate, "train");
    read_field(v, "batch_size", c.train.batch_size, "train");
    read_field(v, "max_epochs", c.train.max_epochs, "train");
    read_field(v, "weight_decay", c.train.weight_decay, "train");
    read_field(v, "early_stop_patience", c.train.early_stop_patience, "train");
    read_field(v, "dual_loss_lambda", c.train.dual_loss_lambda, "train");
    read_field(v, "seed", c.train.rng_seed, "train");
    read_field(v, "validation_fraction", c.train.validation_fraction, "train");
    if (v.contains("schedule")) {
      std::string s;
      read_field(v, "schedule", s, "train");
      if (s == "constant") {
        c.train.schedule = LrSchedule::kConstant;
      } else if (s == "cosine") {
        c.train.schedule = LrSchedule::kCosine;
      } else {
        throw Error(ErrorCode::kInvalidArgument, "config: train.schedule must be constant or cosine");
      }
    }
  }
  c.validate();
  return c;
}

inline nlohmann::json config_to_json(const PipelineConfig &c) {
  nlohmann::json j;
  j["vad"] = {{"frame_ms", c.vad.frame_ms},
              {"hop_ms", c.vad.hop_ms},
              {"threshold_db", c.vad.threshold_db},
              {"hangover_ms", c.vad.hangover_ms},
              {"min_region_ms", c.vad.min_region_ms},
              {"floor_percentile", c.vad.floor_percentile},
              {"stationary_flatness", c.vad.stationary_flatness}};
  j["segment"] = {{"window_s", c.segment.window_s}, {"hop_s", c.segment.hop_s}, {"min_tail_s", c.segment.min_tail_s}};
  j["embed"] = {{"n_mels", c.mfcc.n_mels},       {"n_coeffs", c.mfcc.n_coeffs},
                {"frame_ms", c.mfcc.frame_ms},   {"hop_ms", c.mfcc.hop_ms},
                {"n_fft", c.mfcc.n_fft},         {"low_hz", c.mfcc.low_hz},
                {"high_hz", c.mfcc.high_hz},     {"pooled_dims", c.mfcc.pooled_dims},
                {"cepstral_mean_norm", c.cepstral_mean_norm}};
  j["denoise"] = {{"enabled", c.denoise},
                  {"frame_len", c.denoise_params.frame_len},
                  {"hop", c.denoise_params.hop},
                  {"noise_percentile", c.denoise_params.noise_percentile},
                  {"gate_threshold_db", c.denoise_params.gate_threshold_db},
                  {"attenuation_db", c.denoise_params.attenuation_db},
                  {"smooth_frames", c.denoise_params.smooth_frames},
                  {"smooth_bins", c.denoise_params.smooth_bins}};
  if (c.stop.kind == StopRule::Kind::kClusterCount) {
    j["cluster"] = {{"k", c.stop.k}, {"merge_gap_s", c.merge_gap_s}};
  } else {
    j["cluster"] = {{"threshold", c.stop.threshold}, {"merge_gap_s", c.merge_gap_s}};
  }
  j["scoring"] = {{"collar_s", c.collar_s}};
  j["augment"] = {{"noise_intensity", c.augment.noise_intensity},
                  {"noise_kind", to_string(c.augment.noise_kind)},
                  {"pitch_semitones", c.augment.pitch_semitones},
                  {"speed_factor", c.augment.speed_factor},
                  {"seed", c.augment.rng_seed}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"batch_size", c.train.batch_size},
                {"max_epochs", c.train.max_epochs},
                {"weight_decay", c.train.weight_decay},
                {"early_stop_patience", c.train.early_stop_patience},
                {"dual_loss_lambda", c.train.dual_loss_lambda},
                {"seed", c.train.rng_seed},
                {"schedule", c.train.schedule == LrSchedule::kCosine ? "cosine" : "constant"},
                {"validation_fraction", c.train.validation_fraction}};
  return j;
}

inline PipelineConfig read_config(const std::filesystem::path &path) {
  const auto bytes = detail::read_all_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error &ex) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config is not valid JSON: ") + ex.what());
  }
  return config_from_json(j);
}

}  // namespace diarkit
