// diarkit command-line front end.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "diarkit/diarkit.hpp"

namespace fs = std::filesystem;
using namespace diarkit;

namespace {

enum Exit { kOk = 0, kUsage = 1, kIo = 2, kPairing = 3, kNumeric = 4 };

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kUnsupportedFormat:
    case ErrorCode::kCorruptHeader:
    case ErrorCode::kTruncatedFile:
    case ErrorCode::kIoError:
    case ErrorCode::kMalformedLine:
    case ErrorCode::kNonNumericTime:
    case ErrorCode::kNonPositiveDuration:
      return kIo;
    case ErrorCode::kMixedFiles:
    case ErrorCode::kUnpairedFile:
      return kPairing;
    default:
      return kNumeric;
  }
}

void log_line(const std::string &msg) { std::cerr << "diarkit: " << msg << "\n"; }

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --seed wins, then DIARKIT_SEED, then 0.
std::uint64_t resolve_seed(const CLI::Option *flag, std::uint64_t flag_value) {
  if (flag && flag->count() > 0) return flag_value;
  if (const char *env = std::getenv("DIARKIT_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::logic_error &) {
    }
    throw Error(ErrorCode::kInvalidArgument, std::string("DIARKIT_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

PipelineConfig load_config(const std::string &path) { return path.empty() ? PipelineConfig{} : read_config(path); }

void write_text(const fs::path &path, const std::string &text) {
  detail::write_all_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

bool is_manifest(const fs::path &p) { return p.extension() == ".json"; }

// ---------------------------------------------------------------- corpus

struct CorpusArgs {
  std::string out;
  std::uint64_t seed = 0;
  std::string layout;
  std::string split;
  double overlap = kDefaultOverlapFraction;
  double min_duration = 15.0;
  double max_duration = 45.0;
  const CLI::Option *seed_opt = nullptr;
};

SplitFractions parse_split_fractions(const std::string &text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error &) {
      throw Error(ErrorCode::kBadSplit, "bad split value: " + item);
    }
  }
  if (v.size() != 3) throw Error(ErrorCode::kBadSplit, "split needs three comma-separated fractions");
  SplitFractions f{v[0], v[1], v[2]};
  f.validate();
  return f;
}

int run_corpus(const CorpusArgs &a, std::size_t jobs) {
  CorpusParams p;
  p.seed = resolve_seed(a.seed_opt, a.seed);
  if (!a.layout.empty()) p.layout = parse_layout(a.layout);
  if (!a.split.empty()) p.split = parse_split_fractions(a.split);
  p.mixture.overlap_fraction = a.overlap;
  p.min_duration_s = a.min_duration;
  p.max_duration_s = a.max_duration;
  const auto m = generate_dataset(p, a.out, jobs);
  log_line("generated " + std::to_string(m.entries.size()) + " files");
  std::cout << (fs::path(a.out) / "manifest.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- diarize

struct DiarizeArgs {
  std::string input;
  std::string config;
  std::string out_rttm;
  std::string export_embeddings;
  std::string embeddings;
  std::string segments;
  std::size_t k = 0;
  double threshold = -1.0;
  bool denoise = false;
};

PipelineConfig diarize_config(const DiarizeArgs &a) {
  PipelineConfig cfg = load_config(a.config);
  if (a.k > 0 && a.threshold >= 0.0) throw Error(ErrorCode::kInvalidArgument, "--k and --threshold are exclusive");
  if (a.k > 0) cfg.stop = StopRule::with_k(a.k);
  if (a.threshold >= 0.0) cfg.stop = StopRule::at_threshold(a.threshold);
  if (a.denoise) cfg.denoise = true;
  cfg.validate();
  return cfg;
}

DiarizationResult diarize_file(const fs::path &wav, const std::string &file_id, const PipelineConfig &cfg,
                               const DiarizeArgs &a) {
  const AudioBuffer audio = read_wav(wav);
  DiarizeOptions opts;
  std::optional<ExternalEmbeddings> external;
  if (!a.segments.empty()) opts.regions = turns_to_regions(read_rttm(a.segments));
  if (!a.embeddings.empty()) {
    external = ExternalEmbeddings::load(a.embeddings);
    opts.embedder = &*external;
  }
  return diarize(audio, cfg, file_id, opts);
}

int run_diarize(const DiarizeArgs &a, std::size_t jobs) {
  const PipelineConfig cfg = diarize_config(a);
  const fs::path input(a.input);
  if (!is_manifest(input)) {
    const auto r = diarize_file(input, input.stem().string(), cfg, a);
    const std::string text = emit_rttm(r.turns);
    if (a.out_rttm.empty()) {
      std::cout << text;
    } else {
      write_text(a.out_rttm, text);
    }
    if (!a.export_embeddings.empty()) write_embedding_matrix(a.export_embeddings, to_matrix(r.embeddings));
    log_line(input.stem().string() + ": " + std::to_string(r.segments.size()) + " segments, " +
             std::to_string(r.clusters.num_clusters()) + " speakers");
    return kOk;
  }

  if (!a.embeddings.empty() || !a.segments.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "--embeddings/--segments apply to a single WAV input");
  }
  if (a.out_rttm.empty()) throw Error(ErrorCode::kInvalidArgument, "manifest input needs --out-rttm DIR");
  const auto manifest = read_manifest(input);
  const fs::path base = input.parent_path();
  std::error_code ec;
  fs::create_directories(a.out_rttm, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + a.out_rttm);
  if (!a.export_embeddings.empty()) {
    fs::create_directories(a.export_embeddings, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + a.export_embeddings);
  }

  const auto &entries = manifest.entries;
  std::vector<std::string> failures(entries.size());
  std::vector<int> codes(entries.size(), kOk);
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto &e = entries[i];
    try {
      const auto r = diarize_file(base / e.path, e.file_id, cfg, a);
      write_text(fs::path(a.out_rttm) / (e.file_id + ".rttm"), emit_rttm(r.turns));
      if (!a.export_embeddings.empty()) {
        write_embedding_matrix(fs::path(a.export_embeddings) / (e.file_id + ".emb"), to_matrix(r.embeddings));
      }
    } catch (const Error &err) {
      failures[i] = err.what();
      codes[i] = exit_code_for(err.code());
    }
  });
  int code = kOk;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (codes[i] == kOk) continue;
    ++failed;
    log_line(entries[i].file_id + ": " + failures[i]);
    if (code == kOk) code = codes[i];
  }
  log_line("diarized " + std::to_string(entries.size() - failed) + "/" + std::to_string(entries.size()) + " files");
  return code;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string ref;
  std::string hyp;
  double collar = kDefaultCollar;
  std::string json;
};

int run_evaluate(const EvaluateArgs &a) {
  const Evaluation ev = cmd_evaluate(a.ref, a.hyp, a.collar);
  for (const auto &w : ev.warnings) log_line("warning: " + w);
  auto files = nlohmann::json::array();
  for (const auto &f : ev.files) {
    std::cout << f.file_id << "  DER " << fmt("%.1f%%", 100.0 * f.report.der.der) << "  JER "
              << fmt("%.1f%%", 100.0 * f.report.jer) << "\n";
    auto j = to_json(f.report);
    j["file_id"] = f.file_id;
    files.push_back(std::move(j));
  }
  std::cout << "DER: " << fmt("%.1f%%", 100.0 * ev.total.der.der) << "\n"
            << "JER: " << fmt("%.1f%%", 100.0 * ev.total.jer) << "\n"
            << "Cluster purity: " << fmt("%.1f%%", 100.0 * ev.total.cluster_purity) << "\n";
  if (!a.json.empty()) {
    auto j = to_json(ev.total);
    j["files"] = std::move(files);
    write_text(a.json, j.dump(2) + "\n");
  }
  return kOk;
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string input;
  std::string out;
  std::string rttm;
  std::string out_rttm;
  std::string config;
  std::optional<double> intensity;
  std::optional<double> semitones;
  std::optional<double> speed;
  std::optional<std::string> noise;
  std::uint64_t seed = 0;
  bool allow_out_of_range = false;
  const CLI::Option *seed_opt = nullptr;
};

int run_augment(const AugmentArgs &a) {
  AugmentSpec spec = load_config(a.config).augment;
  if (a.intensity) spec.noise_intensity = *a.intensity;
  if (a.semitones) spec.pitch_semitones = *a.semitones;
  if (a.speed) spec.speed_factor = *a.speed;
  if (a.noise) spec.noise_kind = parse_noise_kind(*a.noise);
  if (a.seed_opt->count() > 0 || std::getenv("DIARKIT_SEED")) spec.rng_seed = resolve_seed(a.seed_opt, a.seed);
  spec.allow_out_of_range = a.allow_out_of_range;
  spec.validate();
  if (!a.out_rttm.empty() && a.rttm.empty()) throw Error(ErrorCode::kInvalidArgument, "--out-rttm needs --rttm");

  const WavFile in = read_wav_file(a.input);
  AudioBuffer shaped = speed_change(in.audio, spec.speed_factor);
  shaped = pitch_shift(shaped, spec.pitch_semitones);
  const AudioBuffer out = add_noise(shaped, spec.noise_intensity, spec.noise_kind, spec.rng_seed);
  write_wav(a.out, out, in.format);

  std::string msg = "augment: speed=" + fmt("%.3f", spec.speed_factor) +
                    " semitones=" + fmt("%.2f", spec.pitch_semitones) +
                    " intensity=" + fmt("%.4f", spec.noise_intensity);
  if (spec.noise_intensity > 0.0) msg += " snr_db=" + fmt("%.2f", estimate_snr_db(out, shaped));
  log_line(msg);

  if (!a.rttm.empty()) {
    const auto turns = rescale_turns(read_rttm(a.rttm), spec.speed_factor);
    const fs::path dest = a.out_rttm.empty() ? fs::path(a.out).replace_extension(".rttm") : fs::path(a.out_rttm);
    write_rttm(dest, turns);
  }
  return kOk;
}

// ---------------------------------------------------------------- snr

struct SnrArgs {
  std::string signal;
  std::string noise;
  std::string clean;
  std::string json;
};

int run_snr(const SnrArgs &a) {
  if (a.noise.empty() == a.clean.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give exactly one of --noise or --clean");
  }
  const AudioBuffer sig = read_wav(a.signal);
  const double db = a.noise.empty() ? estimate_snr_db(sig, read_wav(a.clean)) : snr_db(sig, read_wav(a.noise));
  std::cout << "SNR: " << (std::isinf(db) ? std::string("inf") : fmt("%.2f", db)) << " dB\n";
  if (!a.json.empty()) {
    nlohmann::json j = {{"snr_db", detail::optional_number(db)}};
    write_text(a.json, j.dump(2) + "\n");
  }
  return kOk;
}

// ---------------------------------------------------------------- train-toy

struct TrainArgs {
  std::string manifest;
  std::string demo;
  std::string config;
  std::string out_history;
  std::string out_model;
  std::size_t max_files = 8;
  std::size_t chunk_frames = 50;
  std::optional<double> lr;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> patience;
  std::uint64_t seed = 0;
  const CLI::Option *seed_opt = nullptr;
};

struct ToyData {
  FeatureMatrix features;
  std::vector<std::size_t> labels;
  std::vector<LabeledChunk> chunks;
};

// Two Gaussian blobs in 2-D, one frame per chunk. "degenerate" flips the
// labels of the validation chunks so validation loss rises from epoch 1.
ToyData demo_data(const std::string &kind, const TrainConfig &cfg) {
  if (kind != "separable" && kind != "degenerate") {
    throw Error(ErrorCode::kInvalidArgument, "--demo must be separable or degenerate");
  }
  constexpr std::size_t kN = 400;
  ToyData d;
  d.features = FeatureMatrix(kN, 2);
  d.labels.resize(kN);
  std::mt19937_64 rng(mix_seed(cfg.rng_seed, 0xd3));
  std::normal_distribution<double> g(0.0, 0.5);
  for (std::size_t i = 0; i < kN; ++i) {
    const std::size_t c = i % 2;
    const double center = c == 0 ? -2.0 : 2.0;
    d.features.at(i, 0) = center + g(rng);
    d.features.at(i, 1) = center + g(rng);
    d.labels[i] = c;
  }
  if (kind == "degenerate") {
    const auto split = split_train_validation(kN, cfg.validation_fraction, cfg.rng_seed);
    for (std::size_t i : split.validation) d.labels[i] = 1 - d.labels[i];
  }
  for (std::size_t i = 0; i < kN; ++i) d.chunks.push_back({i, i + 1, {d.labels[i]}});
  return d;
}

// Static cepstra of speaker-labelled frames (exactly one active reference
// speaker), z-scored per dimension and cut into chunks.
ToyData corpus_data(const TrainArgs &a, const MfccConfig &mfcc) {
  const auto manifest = read_manifest(a.manifest);
  const fs::path base = fs::path(a.manifest).parent_path();
  std::set<std::string> names;
  std::vector<const ManifestEntry *> picked;
  for (const auto &e : manifest.entries) {
    if (e.folder == 0 || picked.size() >= a.max_files) continue;
    picked.push_back(&e);
  }
  if (picked.empty()) throw Error(ErrorCode::kEmptyData, "manifest has no files with speakers");

  struct Frames {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> speakers;
  };
  std::vector<Frames> per_file(picked.size());
  for (std::size_t f = 0; f < picked.size(); ++f) {
    const auto audio = read_wav(base / picked[f]->path);
    const auto turns = read_rttm(base / picked[f]->rttm_path);
    const auto cep = static_cepstra(audio, 0.0, audio.duration_s(), mfcc);
    for (std::size_t r = 0; r < cep.rows; ++r) {
      const double center = (static_cast<double>(r) * mfcc.hop_ms + 0.5 * mfcc.frame_ms) / 1000.0;
      std::string who;
      int active = 0;
      for (const auto &t : turns) {
        if (t.onset_s <= center && center < t.offset_s()) {
          ++active;
          who = t.speaker_id;
        }
      }
      if (active != 1) continue;
      per_file[f].rows.emplace_back(cep.row(r).begin(), cep.row(r).end());
      per_file[f].speakers.push_back(who);
      names.insert(who);
    }
  }
  const std::vector<std::string> classes(names.begin(), names.end());
  ToyData d;
  std::size_t total = 0;
  for (const auto &pf : per_file) total += pf.rows.size();
  if (total == 0) throw Error(ErrorCode::kEmptyData, "no single-speaker frames");
  d.features = FeatureMatrix(total, mfcc.n_coeffs);
  std::size_t row = 0;
  for (const auto &pf : per_file) {
    const std::size_t first = row;
    for (std::size_t i = 0; i < pf.rows.size(); ++i, ++row) {
      std::copy(pf.rows[i].begin(), pf.rows[i].end(), d.features.row(row).begin());
      d.labels.push_back(static_cast<std::size_t>(
          std::lower_bound(classes.begin(), classes.end(), pf.speakers[i]) - classes.begin()));
    }
    for (std::size_t b = first; b < row; b += a.chunk_frames) {
      const std::size_t e = std::min(row, b + a.chunk_frames);
      d.chunks.push_back({b, e, run_length_labels(std::span(d.labels).subspan(b, e - b))});
    }
  }
  for (std::size_t c = 0; c < d.features.cols; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < total; ++r) mean += d.features.at(r, c);
    mean /= static_cast<double>(total);
    for (std::size_t r = 0; r < total; ++r) sq += (d.features.at(r, c) - mean) * (d.features.at(r, c) - mean);
    const double sd = std::sqrt(sq / static_cast<double>(total));
    for (std::size_t r = 0; r < total; ++r) d.features.at(r, c) = sd > 0.0 ? (d.features.at(r, c) - mean) / sd : 0.0;
  }
  return d;
}

int run_train(const TrainArgs &a) {
  if (a.manifest.empty() == a.demo.empty()) throw Error(ErrorCode::kInvalidArgument, "give --manifest or --demo");
  const PipelineConfig pc = load_config(a.config);
  TrainConfig cfg = pc.train;
  if (a.seed_opt->count() > 0 || std::getenv("DIARKIT_SEED")) cfg.rng_seed = resolve_seed(a.seed_opt, a.seed);
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.epochs) cfg.max_epochs = *a.epochs;
  if (a.patience) cfg.early_stop_patience = *a.patience;
  cfg.validate();
  if (a.chunk_frames == 0) throw Error(ErrorCode::kInvalidArgument, "--chunk-frames must be positive");

  ToyData data = a.demo.empty() ? corpus_data(a, pc.mfcc) : demo_data(a.demo, cfg);
  const auto result = train_toy(data.features, data.labels, data.chunks, cfg);

  std::size_t correct = 0, seen = 0;
  for (std::size_t ci : result.split.train) {
    for (std::size_t r = data.chunks[ci].begin; r < data.chunks[ci].end; ++r, ++seen) {
      correct += result.model.predict(data.features.row(r)) == data.labels[r] ? 1 : 0;
    }
  }
  const double accuracy = seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0;
  const std::size_t last = result.history.back().epoch;
  const bool early = last < cfg.max_epochs;
  nlohmann::json j = {{"epochs", history_to_json(result.history)},
                      {"stopped_epoch", last},
                      {"early_stopped", early},
                      {"train_accuracy", accuracy}};
  for (const auto &r : result.history) {
    log_line("epoch " + std::to_string(r.epoch) + " train_loss=" + fmt("%.6f", r.train_loss) +
             " val_loss=" + fmt("%.6f", r.val_loss));
  }
  log_line(std::string(early ? "early stop" : "finished") + " after epoch " + std::to_string(last) +
           ", train accuracy " + fmt("%.4f", accuracy));
  if (!a.out_history.empty()) {
    write_text(a.out_history, j.dump(2) + "\n");
  } else {
    std::cout << j.dump(2) << "\n";
  }
  if (!a.out_model.empty()) write_embedding_matrix(a.out_model, to_matrix(result.model));
  return kOk;
}

// ---------------------------------------------------------------- export-embeddings

struct ExportArgs {
  std::string input;
  std::string config;
  std::string out;
  std::string segments_json;
};

int run_export(const ExportArgs &a) {
  const PipelineConfig cfg = load_config(a.config);
  const auto r = diarize(read_wav(a.input), cfg, fs::path(a.input).stem().string());
  write_embedding_matrix(a.out, to_matrix(r.embeddings));
  if (!a.segments_json.empty()) {
    auto arr = nlohmann::json::array();
    for (const auto &s : r.segments) {
      arr.push_back({{"index", s.index}, {"onset_s", s.onset_s}, {"offset_s", s.offset_s}});
    }
    write_text(a.segments_json, arr.dump(2) + "\n");
  }
  log_line("exported " + std::to_string(r.embeddings.size()) + " embeddings of dim " +
           std::to_string(r.embeddings.empty() ? cfg.mfcc.embedding_dim() : r.embeddings.front().dim()));
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"diarkit: speaker diarization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t jobs = 1;
  app.add_option("-j,--jobs", jobs, "Parallel workers for batch commands")->check(CLI::PositiveNumber);

  CorpusArgs corpus;
  auto *c = app.add_subcommand("corpus", "Generate the synthetic corpus");
  c->add_option("--out", corpus.out, "Output directory")->required();
  corpus.seed_opt = c->add_option("--seed", corpus.seed, "Corpus seed");
  c->add_option("--layout", corpus.layout, "Folder counts, e.g. 0:60,1:58,2:51,3:50,4:50");
  c->add_option("--split", corpus.split, "Train,val,test fractions, e.g. 0.7,0.2,0.1");
  c->add_option("--overlap", corpus.overlap, "Overlapped fraction of speech");
  c->add_option("--min-duration", corpus.min_duration, "Shortest file in seconds");
  c->add_option("--max-duration", corpus.max_duration, "Longest file in seconds");

  DiarizeArgs dia;
  auto *d = app.add_subcommand("diarize", "Diarize a WAV file or every file of a manifest");
  d->add_option("input", dia.input, "WAV file or manifest.json")->required();
  d->add_option("--config", dia.config, "Pipeline config JSON");
  d->add_option("--out-rttm", dia.out_rttm, "RTTM file (WAV input) or directory (manifest input)");
  d->add_option("--export-embeddings", dia.export_embeddings, "Embedding-matrix file or directory");
  d->add_option("--embeddings", dia.embeddings, "Use these embeddings instead of MFCC");
  d->add_option("--segments", dia.segments, "RTTM whose turns replace VAD regions");
  d->add_option("--k", dia.k, "Known speaker count");
  d->add_option("--threshold", dia.threshold, "Cluster distance threshold");
  d->add_flag("--denoise", dia.denoise, "Spectral-gate the input first");

  EvaluateArgs ev;
  auto *e = app.add_subcommand("evaluate", "Score hypothesis RTTM against reference RTTM");
  e->add_option("--ref", ev.ref, "Reference RTTM file or directory")->required();
  e->add_option("--hyp", ev.hyp, "Hypothesis RTTM file or directory")->required();
  e->add_option("--collar", ev.collar, "No-score collar in seconds")->check(CLI::NonNegativeNumber);
  e->add_option("--json", ev.json, "Write the metric report here");

  AugmentArgs aug;
  auto *g = app.add_subcommand("augment", "Speed, pitch and noise augmentation");
  g->add_option("input", aug.input, "Input WAV")->required();
  g->add_option("--out", aug.out, "Output WAV")->required();
  g->add_option("--rttm", aug.rttm, "Reference RTTM to rescale");
  g->add_option("--out-rttm", aug.out_rttm, "Rescaled RTTM (default: next to --out)");
  g->add_option("--config", aug.config, "Pipeline config JSON (augment section)");
  g->add_option("--intensity", aug.intensity, "Noise RMS relative to signal RMS");
  g->add_option("--semitones", aug.semitones, "Pitch shift");
  g->add_option("--speed", aug.speed, "Playback speed factor");
  g->add_option("--noise", aug.noise, "white or babble");
  aug.seed_opt = g->add_option("--seed", aug.seed, "Noise seed");
  g->add_flag("--allow-out-of-range", aug.allow_out_of_range, "Permit |semitones| > 5 and speed outside [0.9, 1.1]");

  SnrArgs snr;
  auto *s = app.add_subcommand("snr", "Measure SNR");
  s->add_option("--signal", snr.signal, "Signal (or noisy) WAV")->required();
  s->add_option("--noise", snr.noise, "Noise WAV");
  s->add_option("--clean", snr.clean, "Clean reference; SNR of signal against it");
  s->add_option("--json", snr.json, "Write {\"snr_db\": ...} here");

  TrainArgs tr;
  auto *t = app.add_subcommand("train-toy", "Train the toy dual-loss classifier");
  t->add_option("--manifest", tr.manifest, "Corpus manifest");
  t->add_option("--demo", tr.demo, "separable or degenerate built-in data");
  t->add_option("--config", tr.config, "Pipeline config JSON (train section)");
  t->add_option("--out-history", tr.out_history, "History JSON (default: stdout)");
  t->add_option("--out-model", tr.out_model, "Model as an embedding-matrix file");
  t->add_option("--max-files", tr.max_files, "Corpus files to use");
  t->add_option("--chunk-frames", tr.chunk_frames, "Frames per CTC chunk");
  t->add_option("--lr", tr.lr, "Learning rate override");
  t->add_option("--epochs", tr.epochs, "Max epochs override");
  t->add_option("--patience", tr.patience, "Early-stop patience override");
  tr.seed_opt = t->add_option("--seed", tr.seed, "Training seed");

  ExportArgs ex;
  auto *x = app.add_subcommand("export-embeddings", "Write per-segment MFCC embeddings");
  x->add_option("input", ex.input, "Input WAV")->required();
  x->add_option("--config", ex.config, "Pipeline config JSON");
  x->add_option("--out", ex.out, "Embedding-matrix file")->required();
  x->add_option("--segments-json", ex.segments_json, "Also write the segment list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (c->parsed()) return run_corpus(corpus, jobs);
    if (d->parsed()) return run_diarize(dia, jobs);
    if (e->parsed()) return run_evaluate(ev);
    if (g->parsed()) return run_augment(aug);
    if (s->parsed()) return run_snr(snr);
    if (t->parsed()) return run_train(tr);
    if (x->parsed()) return run_export(ex);
  } catch (const Error &err) {
    log_line(std::string("error: ") + err.what());
    return exit_code_for(err.code());
  } catch (const std::exception &err) {
    log_line(std::string("error: ") + err.what());
    return kNumeric;
  }
  return kUsage;
}
