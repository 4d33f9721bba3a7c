// diarkit/metrics.hpp
//
// Diarization and verification scores: DER, JER, cluster purity, EER and
// relative improvement.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diarkit/audio_io.hpp"
#include "diarkit/error.hpp"
#include "diarkit/hungarian.hpp"

namespace diarkit {

struct DerReport {
  double missed_s = 0.0;
  double false_alarm_s = 0.0;
  double confusion_s = 0.0;
  double total_ref_speech_s = 0.0;
  double der = 0.0;
  // Reference speaker -> hypothesis speaker, for pairs that overlap at all.
  std::map<std::string, std::string> mapping;
};

inline constexpr double kDefaultCollar = 0.0;

namespace detail {

using Interval = std::pair<double, double>;

inline std::string common_file_id(std::span<const Turn> ref, std::span<const Turn> hyp) {
  std::string id;
  bool seen = false;
  for (auto list : {ref, hyp}) {
    for (const auto &t : list) {
      if (!seen) {
        id = t.file_id;
        seen = true;
      } else if (t.file_id != id) {
        throw Error(ErrorCode::kMixedFiles, "turns from more than one file: " + id + ", " + t.file_id);
      }
    }
  }
  return id;
}

// Speaker names in first-seen order and, per speaker, the turn list.
struct SpeakerIndex {
  std::vector<std::string> names;
  std::vector<std::vector<Interval>> spans;
};

inline SpeakerIndex index_speakers(std::span<const Turn> turns) {
  SpeakerIndex idx;
  std::map<std::string, std::size_t> pos;
  for (const auto &t : turns) {
    auto [it, fresh] = pos.emplace(t.speaker_id, idx.names.size());
    if (fresh) {
      idx.names.push_back(t.speaker_id);
      idx.spans.emplace_back();
    }
    idx.spans[it->second].emplace_back(t.onset_s, t.offset_s());
  }
  return idx;
}

inline bool covers(const std::vector<Interval> &spans, double mid) {
  for (const auto &[a, b] : spans) {
    if (a <= mid && mid < b) return true;
  }
  return false;
}

inline std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end());
  std::vector<Interval> out;
  for (const auto &iv : v) {
    if (!out.empty() && iv.first <= out.back().second) {
      out.back().second = std::max(out.back().second, iv.second);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

inline double total_length(const std::vector<Interval> &merged) {
  double s = 0.0;
  for (const auto &[a, b] : merged) s += b - a;
  return s;
}

inline double intersection_length(const std::vector<Interval> &a, const std::vector<Interval> &b) {
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double lo = std::max(a[i].first, b[j].first);
    const double hi = std::min(a[i].second, b[j].second);
    if (hi > lo) s += hi - lo;
    (a[i].second < b[j].second) ? ++i : ++j;
  }
  return s;
}

// Homogeneous scored intervals: for each, its duration and which reference
// and hypothesis speakers are active.
struct Timeline {
  std::vector<double> duration;
  std::vector<std::vector<char>> ref_active;
  std::vector<std::vector<char>> hyp_active;
};

inline Timeline build_timeline(const SpeakerIndex &ref, const SpeakerIndex &hyp, double collar) {
  std::set<double> cuts;
  std::vector<Interval> no_score;
  for (const auto &spans : ref.spans) {
    for (const auto &[a, b] : spans) {
      cuts.insert(a);
      cuts.insert(b);
      if (collar > 0.0) {
        for (double t : {a, b}) {
          no_score.emplace_back(t - collar, t + collar);
          cuts.insert(t - collar);
          cuts.insert(t + collar);
        }
      }
    }
  }
  for (const auto &spans : hyp.spans) {
    for (const auto &[a, b] : spans) {
      cuts.insert(a);
      cuts.insert(b);
    }
  }
  Timeline tl;
  const std::vector<double> edges(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double d = edges[i + 1] - edges[i];
    if (d <= 0.0) continue;
    const double mid = 0.5 * (edges[i] + edges[i + 1]);
    if (covers(no_score, mid)) continue;
    std::vector<char> r(ref.names.size()), h(hyp.names.size());
    bool any = false;
    for (std::size_t k = 0; k < r.size(); ++k) any |= (r[k] = covers(ref.spans[k], mid));
    for (std::size_t k = 0; k < h.size(); ++k) any |= (h[k] = covers(hyp.spans[k], mid));
    if (!any) continue;
    tl.duration.push_back(d);
    tl.ref_active.push_back(std::move(r));
    tl.hyp_active.push_back(std::move(h));
  }
  return tl;
}

}  // namespace detail

// Full timeline scoring with overlap. The speaker mapping maximizes total
// co-active time, which is exactly the mapping that minimizes the error.
inline DerReport compute_der(std::span<const Turn> ref, std::span<const Turn> hyp,
                             double collar_s = kDefaultCollar) {
  if (!(collar_s >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "collar must be >= 0");
  detail::common_file_id(ref, hyp);
  const auto ri = detail::index_speakers(ref);
  const auto hi = detail::index_speakers(hyp);
  const auto tl = detail::build_timeline(ri, hi, collar_s);

  DerReport rep;
  for (std::size_t i = 0; i < tl.duration.size(); ++i) {
    rep.total_ref_speech_s +=
        tl.duration[i] * static_cast<double>(std::count(tl.ref_active[i].begin(), tl.ref_active[i].end(), 1));
  }
  if (!(rep.total_ref_speech_s > 0.0)) throw Error(ErrorCode::kEmptyReference, "no scored reference speech");

  std::vector<int> ref_to_hyp(ri.names.size(), -1);
  if (!hi.names.empty()) {
    CostMatrix cost(ri.names.size(), std::vector<double>(hi.names.size(), 0.0));
    for (std::size_t i = 0; i < tl.duration.size(); ++i) {
      for (std::size_t r = 0; r < ri.names.size(); ++r) {
        if (!tl.ref_active[i][r]) continue;
        for (std::size_t h = 0; h < hi.names.size(); ++h) {
          if (tl.hyp_active[i][h]) cost[r][h] -= tl.duration[i];
        }
      }
    }
    const auto assignment = hungarian_assign(cost);
    for (std::size_t r = 0; r < ri.names.size(); ++r) {
      const int h = assignment.row_to_col[r];
      if (h >= 0 && cost[r][static_cast<std::size_t>(h)] < 0.0) {
        ref_to_hyp[r] = h;
        rep.mapping[ri.names[r]] = hi.names[static_cast<std::size_t>(h)];
      }
    }
  }

  for (std::size_t i = 0; i < tl.duration.size(); ++i) {
    const auto &ra = tl.ref_active[i];
    const auto &ha = tl.hyp_active[i];
    const auto n_ref = static_cast<double>(std::count(ra.begin(), ra.end(), 1));
    const auto n_hyp = static_cast<double>(std::count(ha.begin(), ha.end(), 1));
    double n_correct = 0.0;
    for (std::size_t r = 0; r < ra.size(); ++r) {
      if (ra[r] && ref_to_hyp[r] >= 0 && ha[static_cast<std::size_t>(ref_to_hyp[r])]) n_correct += 1.0;
    }
    const double d = tl.duration[i];
    rep.missed_s += d * std::max(0.0, n_ref - n_hyp);
    rep.false_alarm_s += d * std::max(0.0, n_hyp - n_ref);
    rep.confusion_s += d * (std::min(n_ref, n_hyp) - n_correct);
  }
  rep.der = (rep.missed_s + rep.false_alarm_s + rep.confusion_s) / rep.total_ref_speech_s;
  return rep;
}

// Sums components over files (mappings are per file and are dropped).
inline DerReport aggregate_der(std::span<const DerReport> reports) {
  DerReport total;
  for (const auto &r : reports) {
    total.missed_s += r.missed_s;
    total.false_alarm_s += r.false_alarm_s;
    total.confusion_s += r.confusion_s;
    total.total_ref_speech_s += r.total_ref_speech_s;
  }
  if (!(total.total_ref_speech_s > 0.0)) throw Error(ErrorCode::kEmptyReference, "no reference speech");
  total.der = (total.missed_s + total.false_alarm_s + total.confusion_s) / total.total_ref_speech_s;
  return total;
}

// Mean over reference speakers of 1 - |r and h| / |r or h|, where h is the
// speaker mapped to r by compute_der; unmapped speakers score 1.
inline double compute_jer(std::span<const Turn> ref, std::span<const Turn> hyp) {
  const DerReport der = compute_der(ref, hyp);
  const auto ri = detail::index_speakers(ref);
  const auto hi = detail::index_speakers(hyp);
  std::map<std::string, std::size_t> hyp_pos;
  for (std::size_t h = 0; h < hi.names.size(); ++h) hyp_pos[hi.names[h]] = h;

  double sum = 0.0;
  for (std::size_t r = 0; r < ri.names.size(); ++r) {
    const auto it = der.mapping.find(ri.names[r]);
    if (it == der.mapping.end()) {
      sum += 1.0;
      continue;
    }
    const auto a = detail::merge_intervals(ri.spans[r]);
    const auto b = detail::merge_intervals(hi.spans[hyp_pos.at(it->second)]);
    const double inter = detail::intersection_length(a, b);
    const double uni = detail::total_length(a) + detail::total_length(b) - inter;
    sum += uni > 0.0 ? 1.0 - inter / uni : 1.0;
  }
  return sum / static_cast<double>(ri.names.size());
}

// Fraction of weight belonging to the majority reference speaker of each
// cluster. Without weights every segment counts once.
template <typename Speaker, typename Label>
double cluster_purity(std::span<const Speaker> ref_speaker, std::span<const Label> cluster_labels,
                      std::span<const double> weights = {}) {
  if (ref_speaker.size() != cluster_labels.size() ||
      (!weights.empty() && weights.size() != ref_speaker.size())) {
    throw Error(ErrorCode::kLengthMismatch, "cluster_purity inputs differ in length");
  }
  if (ref_speaker.empty()) throw Error(ErrorCode::kEmptyInput, "cluster_purity of nothing");
  std::map<Label, std::map<Speaker, double>> mass;
  for (std::size_t i = 0; i < ref_speaker.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative purity weight");
    mass[cluster_labels[i]][ref_speaker[i]] += w;
  }
  // Both sums run over the same grouping so a pure clustering scores exactly 1.
  double majority = 0.0, total = 0.0;
  for (const auto &[label, per_speaker] : mass) {
    double best = 0.0, cluster_total = 0.0;
    for (const auto &[spk, w] : per_speaker) {
      best = std::max(best, w);
      cluster_total += w;
    }
    majority += best;
    total += cluster_total;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kEmptyInput, "zero total purity weight");
  return majority / total;
}

inline double cluster_purity(const std::vector<std::string> &ref_speaker, const std::vector<int> &labels,
                             const std::vector<double> &weights = {}) {
  return cluster_purity<std::string, int>(ref_speaker, labels, weights);
}

// Operating points are taken at -inf, every distinct score and +inf
// (accept iff score >= t). The EER is where the FAR/FRR polyline crosses
// FAR == FRR, interpolated linearly between neighbouring points.
inline double compute_eer(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw Error(ErrorCode::kEmptyScores, "EER needs both score sets");
  for (auto list : {genuine, impostor}) {
    for (double s : list) {
      if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "non-finite score");
    }
  }
  std::vector<double> g(genuine.begin(), genuine.end()), im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds;
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  std::set<double> distinct(g.begin(), g.end());
  distinct.insert(im.begin(), im.end());
  thresholds.insert(thresholds.end(), distinct.begin(), distinct.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const auto ng = static_cast<double>(g.size()), ni = static_cast<double>(im.size());
  auto point = [&](double t) {
    // Rejected = strictly below t.
    const auto g_rej = static_cast<double>(std::lower_bound(g.begin(), g.end(), t) - g.begin());
    const auto i_rej = static_cast<double>(std::lower_bound(im.begin(), im.end(), t) - im.begin());
    const double far = t == std::numeric_limits<double>::infinity() ? 0.0 : (ni - i_rej) / ni;
    const double frr = t == std::numeric_limits<double>::infinity() ? 1.0 : g_rej / ng;
    return std::pair{far, frr};
  };

  auto [far_prev, frr_prev] = point(thresholds.front());
  for (std::size_t k = 1; k < thresholds.size(); ++k) {
    const auto [far, frr] = point(thresholds[k]);
    if (frr >= far) {
      const double d0 = far_prev - frr_prev, d1 = far - frr;
      const double alpha = d0 - d1 > 0.0 ? d0 / (d0 - d1) : 0.0;
      return far_prev + alpha * (far - far_prev);
    }
    far_prev = far;
    frr_prev = frr;
  }
  return 0.5;  // unreachable: the +inf point always has FRR 1 >= FAR 0
}

// Relative reduction of an error metric: (baseline - value) / baseline.
inline double relative_improvement(double baseline, double value) {
  if (baseline == 0.0) throw Error(ErrorCode::kZeroBaseline, "relative improvement over a zero baseline");
  if (!(baseline > 0.0) || !(value >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "relative improvement needs baseline > 0, value >= 0");
  }
  return (baseline - value) / baseline;
}

struct MetricReport {
  DerReport der;
  double jer = 0.0;
  double cluster_purity = 0.0;
  std::optional<double> snr_db;
  std::optional<double> eer;
  std::optional<double> relative_improvement;
};

}  // namespace diarkit
