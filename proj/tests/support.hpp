// Independent reference implementations and random-case generators shared by
// the unit tests and the acceptance runner. Everything here is deliberately
// naive: exhaustive enumeration or direct sweeps.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "diarkit/diarkit.hpp"

namespace oracle {

using diarkit::Turn;

// Hand-rolled case generator on top of a seeded engine.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi_inclusive) {
    return std::uniform_int_distribution<std::size_t>(lo, hi_inclusive)(rng_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64 &engine() { return rng_; }

  // Up to `max_turns` turns over up to `max_speakers` speakers, times in
  // [0, horizon). `grid` > 0 snaps times to that step.
  std::vector<Turn> turns(std::size_t max_speakers, std::size_t max_turns, double horizon,
                          const std::string &prefix, double grid = 0.0, const std::string &file = "f") {
    const std::size_t n_spk = index(1, max_speakers);
    const std::size_t n = index(1, max_turns);
    std::vector<Turn> out;
    for (std::size_t i = 0; i < n; ++i) {
      double on = uniform(0.0, horizon * 0.9);
      double dur = uniform(0.05, horizon * 0.25);
      if (grid > 0.0) {
        on = std::round(on / grid) * grid;
        dur = std::max(grid, std::round(dur / grid) * grid);
      }
      out.push_back({file, prefix + std::to_string(index(0, n_spk - 1)), on, dur});
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

// ------------------------------------------------------------------ DER

// Elementary-interval scorer minimizing the error over every partial
// one-to-one speaker mapping.
struct BruteDer {
  double missed = 0.0, false_alarm = 0.0, confusion = 0.0, total = 0.0, der = 0.0;
};

inline BruteDer brute_force_der(const std::vector<Turn> &ref, const std::vector<Turn> &hyp) {
  std::vector<std::string> rs, hs;
  for (const auto &t : ref) rs.push_back(t.speaker_id);
  for (const auto &t : hyp) hs.push_back(t.speaker_id);
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
  std::sort(hs.begin(), hs.end());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());

  std::vector<double> cuts;
  for (const auto *v : {&ref, &hyp}) {
    for (const auto &t : *v) {
      cuts.push_back(t.onset_s);
      cuts.push_back(t.offset_s());
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  struct Piece {
    double d;
    std::vector<char> r, h;
  };
  std::vector<Piece> pieces;
  auto active = [](const std::vector<Turn> &ts, const std::vector<std::string> &names, double mid) {
    std::vector<char> a(names.size(), 0);
    for (const auto &t : ts) {
      if (t.onset_s <= mid && mid < t.offset_s()) {
        a[std::lower_bound(names.begin(), names.end(), t.speaker_id) - names.begin()] = 1;
      }
    }
    return a;
  };
  BruteDer out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double d = cuts[i + 1] - cuts[i];
    if (d <= 0.0) continue;
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    Piece p{d, active(ref, rs, mid), active(hyp, hs, mid)};
    const double nr = std::accumulate(p.r.begin(), p.r.end(), 0.0);
    const double nh = std::accumulate(p.h.begin(), p.h.end(), 0.0);
    out.total += d * nr;
    out.missed += d * std::max(0.0, nr - nh);
    out.false_alarm += d * std::max(0.0, nh - nr);
    pieces.push_back(std::move(p));
  }

  // map[r] = hyp index or -1; enumerate all partial injections.
  double best_conf = std::numeric_limits<double>::infinity();
  std::vector<int> map(rs.size(), -1);
  std::vector<char> used(hs.size(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t r) {
    if (r == rs.size()) {
      double conf = 0.0;
      for (const auto &p : pieces) {
        double nr = 0, nh = 0, correct = 0;
        for (std::size_t a = 0; a < rs.size(); ++a) {
          nr += p.r[a];
          if (p.r[a] && map[a] >= 0 && p.h[static_cast<std::size_t>(map[a])]) correct += 1;
        }
        for (char c : p.h) nh += c;
        conf += p.d * (std::min(nr, nh) - correct);
      }
      best_conf = std::min(best_conf, conf);
      return;
    }
    map[r] = -1;
    rec(r + 1);
    for (std::size_t h = 0; h < hs.size(); ++h) {
      if (used[h]) continue;
      used[h] = 1;
      map[r] = static_cast<int>(h);
      rec(r + 1);
      used[h] = 0;
      map[r] = -1;
    }
  };
  rec(0);
  out.confusion = best_conf;
  out.der = (out.missed + out.false_alarm + out.confusion) / out.total;
  return out;
}

// ------------------------------------------------------------------ assignment

// Minimum over all injections of the smaller side into the larger.
inline double brute_force_assignment(const diarkit::CostMatrix &c) {
  const std::size_t rows = c.size(), cols = c.front().size();
  const bool transpose = rows > cols;
  const std::size_t small = transpose ? cols : rows, large = transpose ? rows : cols;
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < small; ++i) s += transpose ? c[perm[i]][i] : c[i][perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// ------------------------------------------------------------------ CTC

// -log of the summed probability of every length-T path over V symbols that
// collapses (merge repeats, drop blank 0) to `labels`.
inline double brute_force_ctc(const diarkit::FeatureMatrix &lp, const std::vector<std::size_t> &labels) {
  const std::size_t T = lp.rows, V = lp.cols;
  std::vector<std::size_t> path(T, 0);
  double total = 0.0;
  bool any = false;
  double max_score = -std::numeric_limits<double>::infinity();
  std::vector<double> scores;
  while (true) {
    std::vector<std::size_t> collapsed;
    std::size_t prev = V;  // sentinel
    for (std::size_t t = 0; t < T; ++t) {
      if (path[t] != prev && path[t] != 0) collapsed.push_back(path[t]);
      prev = path[t];
    }
    if (collapsed == labels) {
      double s = 0.0;
      for (std::size_t t = 0; t < T; ++t) s += lp.at(t, path[t]);
      scores.push_back(s);
      max_score = std::max(max_score, s);
      any = true;
    }
    std::size_t t = 0;
    while (t < T && ++path[t] == V) path[t++] = 0;
    if (t == T) break;
  }
  if (!any) return std::numeric_limits<double>::infinity();
  for (double s : scores) total += std::exp(s - max_score);
  return -(max_score + std::log(total));
}

// ------------------------------------------------------------------ clustering

// Average-linkage agglomeration recomputing every inter-cluster mean distance
// from scratch at each step. Returns dense labels numbered by smallest member
// and the merge distances.
struct BruteCluster {
  std::vector<int> labels;
  std::vector<double> merge_distances;
};

inline BruteCluster brute_force_average_linkage(const std::vector<std::vector<double>> &x,
                                                const diarkit::StopRule &stop) {
  auto cosd = [](const std::vector<double> &a, const std::vector<double> &b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    return 1.0 - ab / std::sqrt(aa * bb);
  };
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < x.size(); ++i) clusters.push_back({i});
  BruteCluster out;
  while (clusters.size() > 1) {
    if (stop.kind == diarkit::StopRule::Kind::kClusterCount && clusters.size() <= stop.k) break;
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double s = 0.0;
        for (std::size_t i : clusters[a]) {
          for (std::size_t j : clusters[b]) s += cosd(x[i], x[j]);
        }
        s /= static_cast<double>(clusters[a].size() * clusters[b].size());
        if (s < best) {
          best = s;
          ba = a;
          bb = b;
        }
      }
    }
    if (stop.kind == diarkit::StopRule::Kind::kThreshold && best > stop.threshold) break;
    out.merge_distances.push_back(best);
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  for (auto &c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end());
  out.labels.assign(x.size(), -1);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t i : clusters[c]) out.labels[i] = static_cast<int>(c);
  }
  return out;
}

// ------------------------------------------------------------------ EER

// Sweeps thresholds densely (every score plus a fine grid), traces the
// (FAR, FRR) polyline and intersects it with FAR == FRR.
inline double dense_sweep_eer(const std::vector<double> &genuine, const std::vector<double> &impostor,
                              std::size_t grid = 20000) {
  std::vector<double> ts(genuine);
  ts.insert(ts.end(), impostor.begin(), impostor.end());
  const double lo = *std::min_element(ts.begin(), ts.end()) - 1.0;
  const double hi = *std::max_element(ts.begin(), ts.end()) + 1.0;
  for (std::size_t i = 0; i <= grid; ++i) ts.push_back(lo + (hi - lo) * static_cast<double>(i) / grid);
  std::sort(ts.begin(), ts.end());
  auto rates = [&](double t) {
    double fa = 0, fr = 0;
    for (double s : impostor) fa += s >= t;
    for (double s : genuine) fr += s < t;
    return std::pair{fa / impostor.size(), fr / genuine.size()};
  };
  auto prev = rates(-std::numeric_limits<double>::infinity());
  for (double t : ts) {
    const auto cur = rates(t);
    const double d0 = prev.second - prev.first, d1 = cur.second - cur.first;
    if (d1 >= 0.0 && d0 < 0.0) {
      const double u = -d0 / (d1 - d0);
      return prev.first + u * (cur.first - prev.first);
    }
    prev = cur;
  }
  return 0.5;
}

// ------------------------------------------------------------------ signals

inline diarkit::AudioBuffer tone(double hz, double seconds, double amplitude = 0.5,
                                 int rate = diarkit::kCanonicalSampleRate) {
  diarkit::AudioBuffer b;
  b.sample_rate_hz = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  b.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.samples[i] = static_cast<float>(amplitude * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate));
  }
  return b;
}

inline double peak_hz(const diarkit::AudioBuffer &b) {
  return diarkit::dominant_frequency(diarkit::to_double(b.samples), b.sample_rate_hz);
}

// Unique scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name) {
  auto p = std::filesystem::temp_directory_path() / ("diarkit_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
