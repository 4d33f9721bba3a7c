// diarkit/evaluate.hpp
//
// Scores a set of hypothesis RTTM files against reference RTTM files,
// pairing them by file_id.

#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/error.hpp"
#include "diarkit/metrics.hpp"
#include "diarkit/pipeline.hpp"

namespace diarkit {

using TurnsByFile = std::map<std::string, std::vector<Turn>>;

// Reads one RTTM file or every *.rttm in a directory. An empty file still
// registers its stem as a file_id so a silent reference pairs with an empty
// hypothesis.
inline TurnsByFile load_turns_by_file(const std::filesystem::path &p) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(p)) {
    for (const auto &ent : fs::directory_iterator(p)) {
      if (ent.path().extension() == ".rttm") files.push_back(ent.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(p);
  }
  TurnsByFile out;
  for (const auto &f : files) {
    const auto turns = read_rttm(f);
    if (turns.empty()) out[f.stem().string()];
    for (const auto &t : turns) out[t.file_id].push_back(t);
  }
  return out;
}

struct FileScore {
  std::string file_id;
  MetricReport report;
};

struct Evaluation {
  MetricReport total;  // DER pooled over time, JER averaged over files, purity pooled over turns
  std::vector<FileScore> files;
  std::vector<std::string> warnings;
};

namespace detail {

// Hypothesis turns as duration-weighted items, each assigned the reference
// speaker it overlaps most. Cluster and speaker names are file-qualified.
struct PurityItems {
  std::vector<std::string> speakers, clusters;
  std::vector<double> weights;

  void add(const std::string &file_id, const std::vector<Turn> &ref, const std::vector<Turn> &hyp) {
    std::vector<Segment> segs;
    for (const auto &t : hyp) segs.push_back({file_id, t.onset_s, t.offset_s(), segs.size()});
    const auto major = majority_reference_speakers(segs, ref);
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      if (major[i].empty()) continue;
      speakers.push_back(file_id + "/" + major[i]);
      clusters.push_back(file_id + "/" + hyp[i].speaker_id);
      weights.push_back(hyp[i].duration_s);
    }
  }

  double purity() const {
    if (speakers.empty()) return 0.0;
    return cluster_purity<std::string, std::string>(speakers, clusters, weights);
  }
};

}  // namespace detail

inline Evaluation evaluate_turns(const TurnsByFile &ref, const TurnsByFile &hyp, double collar = kDefaultCollar) {
  for (const auto &[id, turns] : ref) {
    if (!hyp.contains(id)) throw Error(ErrorCode::kUnpairedFile, "no hypothesis for file_id " + id);
  }
  Evaluation ev;
  for (const auto &[id, turns] : hyp) {
    if (!ref.contains(id)) ev.warnings.push_back("hypothesis " + id + " has no reference; ignored");
  }
  std::vector<DerReport> ders;
  double jer_sum = 0.0;
  detail::PurityItems pooled;
  for (const auto &[id, r] : ref) {
    if (r.empty()) {
      ev.warnings.push_back("reference " + id + " has no speech; skipped");
      continue;
    }
    const auto &h = hyp.at(id);
    FileScore fs{id, {}};
    fs.report.der = compute_der(r, h, collar);
    fs.report.jer = compute_jer(r, h);
    detail::PurityItems items;
    items.add(id, r, h);
    fs.report.cluster_purity = items.purity();
    pooled.add(id, r, h);
    ders.push_back(fs.report.der);
    jer_sum += fs.report.jer;
    ev.files.push_back(std::move(fs));
  }
  if (ders.empty()) throw Error(ErrorCode::kEmptyReference, "no reference speech in any file");
  ev.total.der = aggregate_der(ders);
  ev.total.jer = jer_sum / static_cast<double>(ders.size());
  ev.total.cluster_purity = pooled.purity();
  return ev;
}

inline Evaluation cmd_evaluate(const std::filesystem::path &ref, const std::filesystem::path &hyp,
                               double collar = kDefaultCollar) {
  return evaluate_turns(load_turns_by_file(ref), load_turns_by_file(hyp), collar);
}

}  // namespace diarkit
