#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diar/annotation.hpp"
#include "diar/io.hpp"

namespace diar {

// Strict diarization error components in speaker-milliseconds. No collar;
// overlapped speech is scored, so scored_speech = sum_i dur(R_i) within the
// evaluation regions.
struct DerBreakdown {
  Millis missed = 0;
  Millis false_alarm = 0;
  Millis confusion = 0;
  Millis correct = 0;
  Millis scored_speech = 0;
  double der = 0.0;  // percent

  // Optimal one-to-one ref -> hyp speaker mapping (pairs with no
  // co-occurring time omitted).
  std::map<std::string, std::string> speaker_map;

  void add(const DerBreakdown& other);  // pooled accumulation
  void finalize();                      // recomputes der from components
};

// Exact interval-sweep scoring. The speaker mapping maximizes the total
// correctly attributed time via optimal assignment on the ref/hyp
// co-occurrence duration matrix. The hypothesis may be multi-label.
// Errors when the reference has no scored speech.
DerBreakdown der(const Annotation& ref, const Annotation& hyp,
                 const std::optional<IntervalList>& uem = std::nullopt);

// Frame-level VAD accuracy: percent of frames with equal labels. Errors on
// length or frame_step mismatch.
double vad_accuracy(const VadLabels& ref, const VadLabels& hyp);

// Min-cost assignment on a square integer cost matrix; returns row -> col.
// Exact (integer arithmetic throughout).
std::vector<int> solve_assignment_min_cost(
    const std::vector<std::vector<std::int64_t>>& cost);

// Max-sum one-to-one matching on a (possibly rectangular) non-negative
// value matrix; returns row -> col, -1 for unmatched rows.
std::vector<int> solve_assignment_max_value(
    const std::vector<std::vector<std::int64_t>>& value);

}  // namespace diar
