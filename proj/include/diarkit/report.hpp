// diarkit/report.hpp
//
// JSON form of MetricReport. Values are fractions; absent values are null.

#pragma once

#include <cmath>
#include <optional>

#include "json.hpp"

#include "diarkit/metrics.hpp"

namespace diarkit {

namespace detail {

inline nlohmann::json optional_number(const std::optional<double> &v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

}  // namespace detail

inline nlohmann::json to_json(const DerReport &d) {
  nlohmann::json j = {{"missed_s", d.missed_s},
                      {"false_alarm_s", d.false_alarm_s},
                      {"confusion_s", d.confusion_s},
                      {"total_ref_speech_s", d.total_ref_speech_s},
                      {"der", d.der}};
  if (!d.mapping.empty()) j["mapping"] = d.mapping;
  return j;
}

inline nlohmann::json to_json(const MetricReport &r) {
  return {{"der", to_json(r.der)},
          {"jer", r.jer},
          {"cluster_purity", r.cluster_purity},
          {"snr_db", detail::optional_number(r.snr_db)},
          {"eer", detail::optional_number(r.eer)},
          {"relative_improvement", detail::optional_number(r.relative_improvement)}};
}

}  // namespace diarkit
