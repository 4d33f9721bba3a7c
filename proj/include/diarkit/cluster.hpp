// diarkit/cluster.hpp
//
// Average-linkage agglomerative clustering over cosine distance, and the
// conversion of clustered windows into hypothesis turns.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/embed.hpp"
#include "diarkit/error.hpp"
#include "diarkit/vad.hpp"

namespace diarkit {

inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimMismatch, "cosine_distance dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "cosine_distance of a zero vector");
  return std::clamp(1.0 - dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 2.0);
}

inline double cosine_distance(const Embedding &a, const Embedding &b) {
  return cosine_distance(a.vector, b.vector);
}

// Stop when the closest pair is farther than `threshold`, or when `k`
// clusters remain.
struct StopRule {
  enum class Kind { kThreshold, kClusterCount };
  Kind kind = Kind::kThreshold;
  double threshold = 0.5;
  std::size_t k = 1;

  static StopRule at_threshold(double t) { return {Kind::kThreshold, t, 1}; }
  static StopRule with_k(std::size_t k) { return {Kind::kClusterCount, 0.0, k}; }
};

struct Merge {
  // Clusters are named by their smallest member index; cluster_a < cluster_b.
  std::size_t cluster_a = 0;
  std::size_t cluster_b = 0;
  double distance = 0.0;
};

struct ClusterResult {
  std::vector<int> labels;
  std::vector<Merge> merge_trace;

  int num_clusters() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  }
};

// Starts from singletons and repeatedly merges the pair with the smallest
// mean pairwise cosine distance. Ties go to the lexicographically smallest
// (cluster_a, cluster_b). Labels are dense and numbered by smallest member.
inline ClusterResult agglomerative_cluster(std::span<const Embedding> embs, const StopRule &stop) {
  const std::size_t n = embs.size();
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "nothing to cluster");
  if (stop.kind == StopRule::Kind::kClusterCount) {
    if (stop.k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
    if (stop.k > n) throw Error(ErrorCode::kKTooLarge, "k exceeds the number of embeddings");
  }

  // sum[a][b]: total pairwise distance between the clusters held in slots a, b.
  std::vector<std::vector<double>> sum(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum[i][j] = sum[j][i] = cosine_distance(embs[i], embs[j]);
    }
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) owner[i] = i;
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;

  ClusterResult result;
  while (active.size() > 1) {
    if (stop.kind == StopRule::Kind::kClusterCount && active.size() <= stop.k) break;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_a = 0, best_b = 0;
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const std::size_t a = active[x], b = active[y];
        const double d = sum[a][b] / static_cast<double>(size[a] * size[b]);
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (stop.kind == StopRule::Kind::kThreshold && best > stop.threshold) break;

    for (std::size_t c : active) {
      if (c == best_a || c == best_b) continue;
      sum[best_a][c] += sum[best_b][c];
      sum[c][best_a] = sum[best_a][c];
    }
    size[best_a] += size[best_b];
    for (std::size_t i = 0; i < n; ++i) {
      if (owner[i] == best_b) owner[i] = best_a;
    }
    active.erase(std::find(active.begin(), active.end(), best_b));
    result.merge_trace.push_back({best_a, best_b, best});
  }

  std::map<std::size_t, int> dense;
  for (std::size_t slot : active) dense.emplace(slot, static_cast<int>(dense.size()));
  result.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.labels[i] = dense.at(owner[i]);
  return result;
}

inline constexpr double kDefaultTurnMergeGap = 0.25;

// Same-label windows that overlap or sit within `merge_gap` seconds of each
// other become one turn; speaker ids are "spk<label>".
inline std::vector<Turn> labels_to_turns(std::span<const Segment> segments, std::span<const int> labels,
                                         const std::string &file_id,
                                         double merge_gap = kDefaultTurnMergeGap) {
  if (segments.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one label per segment required");
  }
  std::map<int, std::vector<std::pair<double, double>>> by_label;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    by_label[labels[i]].emplace_back(segments[i].onset_s, segments[i].offset_s);
  }
  std::vector<Turn> turns;
  for (auto &[label, spans] : by_label) {
    std::sort(spans.begin(), spans.end());
    double on = spans.front().first, off = spans.front().second;
    const std::string speaker = "spk" + std::to_string(label);
    for (std::size_t i = 1; i <= spans.size(); ++i) {
      if (i < spans.size() && spans[i].first <= off + merge_gap) {
        off = std::max(off, spans[i].second);
        continue;
      }
      turns.push_back({file_id, speaker, on, off - on});
      if (i < spans.size()) {
        on = spans[i].first;
        off = spans[i].second;
      }
    }
  }
  std::sort(turns.begin(), turns.end(), [](const Turn &a, const Turn &b) {
    return a.onset_s != b.onset_s ? a.onset_s < b.onset_s : a.speaker_id < b.speaker_id;
  });
  return turns;
}

}  // namespace diarkit
