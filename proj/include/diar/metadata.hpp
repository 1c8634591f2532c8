#pragma once

#include <map>
#include <string>
#include <vector>

#include "diar/annotation.hpp"

namespace diar {

// Per-recording corpus statistics.
struct RecordingStats {
  std::string recording_id;
  std::string domain;
  int n_speakers = 0;
  Millis duration = 0;
  double speech_pct = 0.0;   // 100 * dur(union R_i) / D
  double overlap_err = 0.0;  // 100 * (sum dur(R_i) - dur(union)) / sum dur(R_i)
};

// 100 * dur(R_1 u ... u R_N) / D. Errors on zero total duration.
double speech_percentage(const Annotation& ann);

// 100 * (sum_i dur(R_i) - dur(union)) / sum_i dur(R_i). Errors when the
// annotation has no speech.
double overlapped_error(const Annotation& ann);

RecordingStats recording_stats(const Annotation& ann, const std::string& domain);

enum class Aggregation {
  kPooled,        // ratio of summed numerators over summed denominators
  kMeanOfRatios,  // unweighted mean of per-recording percentages
};

// One table row: a domain aggregate.
struct DomainRow {
  std::string domain;
  int n_audios = 0;
  int min_speakers = 0;
  int max_speakers = 0;
  Millis mean_duration = 0;
  double speech_pct = 0.0;
  double overlap_err = 0.0;
};

struct DomainReport {
  std::vector<DomainRow> rows;  // sorted by descending overlap error
  DomainRow all;                // pooled over every recording
};

// Aggregates per-domain statistics. Every recording id must appear in
// domain_map; a missing entry is an error.
DomainReport domain_report(const std::map<std::string, Annotation>& annotations,
                           const std::map<std::string, std::string>& domain_map,
                           Aggregation agg = Aggregation::kPooled);

std::string render_domain_report_tsv(const DomainReport& report);
std::string render_domain_report_text(const DomainReport& report);

}  // namespace diar
