#include "diar/metadata.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace diar {

double speech_percentage(const Annotation& ann) {
  if (ann.total_duration() <= 0)
    throw ValidationError("speech_percentage: zero total duration for " +
                          ann.recording_id());
  Millis speech = total_length(ann.speech_union());
  return 100.0 * static_cast<double>(speech) /
         static_cast<double>(ann.total_duration());
}

double overlapped_error(const Annotation& ann) {
  Millis speaker_time = ann.total_speaker_time();
  if (speaker_time <= 0)
    throw ValidationError("overlapped_error: no speech in " + ann.recording_id());
  Millis speech = total_length(ann.speech_union());
  return 100.0 * static_cast<double>(speaker_time - speech) /
         static_cast<double>(speaker_time);
}

RecordingStats recording_stats(const Annotation& ann, const std::string& domain) {
  RecordingStats s;
  s.recording_id = ann.recording_id();
  s.domain = domain;
  s.n_speakers = static_cast<int>(ann.speakers().size());
  s.duration = ann.total_duration();
  s.speech_pct = ann.total_duration() > 0 ? speech_percentage(ann) : 0.0;
  s.overlap_err = ann.empty() ? 0.0 : overlapped_error(ann);
  return s;
}

namespace {

struct DomainAccum {
  int n_audios = 0;
  int min_speakers = 0;
  int max_speakers = 0;
  Millis duration_sum = 0;
  Millis speech_sum = 0;        // sum of dur(union)
  Millis speaker_time_sum = 0;  // sum of sum_i dur(R_i)
  double speech_pct_sum = 0.0;  // for mean-of-ratios
  double overlap_err_sum = 0.0;

  void add(const Annotation& ann) {
    int n_spk = static_cast<int>(ann.speakers().size());
    if (n_audios == 0) {
      min_speakers = max_speakers = n_spk;
    } else {
      min_speakers = std::min(min_speakers, n_spk);
      max_speakers = std::max(max_speakers, n_spk);
    }
    ++n_audios;
    duration_sum += ann.total_duration();
    speech_sum += total_length(ann.speech_union());
    speaker_time_sum += ann.total_speaker_time();
    if (ann.total_duration() > 0) speech_pct_sum += speech_percentage(ann);
    if (!ann.empty()) overlap_err_sum += overlapped_error(ann);
  }

  DomainRow row(const std::string& name, Aggregation agg) const {
    DomainRow r;
    r.domain = name;
    r.n_audios = n_audios;
    r.min_speakers = min_speakers;
    r.max_speakers = max_speakers;
    r.mean_duration = n_audios ? duration_sum / n_audios : 0;
    if (agg == Aggregation::kPooled) {
      r.speech_pct = duration_sum > 0
                         ? 100.0 * static_cast<double>(speech_sum) /
                               static_cast<double>(duration_sum)
                         : 0.0;
      r.overlap_err = speaker_time_sum > 0
                          ? 100.0 *
                                static_cast<double>(speaker_time_sum - speech_sum) /
                                static_cast<double>(speaker_time_sum)
                          : 0.0;
    } else {
      r.speech_pct = n_audios ? speech_pct_sum / n_audios : 0.0;
      r.overlap_err = n_audios ? overlap_err_sum / n_audios : 0.0;
    }
    return r;
  }
};

std::string format_duration(Millis ms) {
  long long total_s = ms / 1000;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lldmin %llds", total_s / 60, total_s % 60);
  return buf;
}

std::string format_speaker_range(const DomainRow& r) {
  if (r.min_speakers == r.max_speakers) return std::to_string(r.min_speakers);
  return std::to_string(r.min_speakers) + "~" + std::to_string(r.max_speakers);
}

}  // namespace

DomainReport domain_report(const std::map<std::string, Annotation>& annotations,
                           const std::map<std::string, std::string>& domain_map,
                           Aggregation agg) {
  std::map<std::string, DomainAccum> per_domain;
  DomainAccum all;
  for (const auto& [rec, ann] : annotations) {
    auto it = domain_map.find(rec);
    if (it == domain_map.end())
      throw ValidationError("recording '" + rec + "' has no domain mapping");
    per_domain[it->second].add(ann);
    all.add(ann);
  }
  DomainReport report;
  for (const auto& [name, accum] : per_domain)
    report.rows.push_back(accum.row(name, agg));
  std::sort(report.rows.begin(), report.rows.end(),
            [](const DomainRow& a, const DomainRow& b) {
              if (a.overlap_err != b.overlap_err) return a.overlap_err > b.overlap_err;
              return a.domain < b.domain;
            });
  report.all = all.row("ALL", agg);
  return report;
}

std::string render_domain_report_tsv(const DomainReport& report) {
  std::ostringstream out;
  out << "domain\tn_audios\tn_speakers\taverage_duration\tspeech_percentage\t"
         "overlapped_error\n";
  auto emit = [&](const DomainRow& r) {
    char buf[64];
    out << r.domain << '\t' << r.n_audios << '\t' << format_speaker_range(r) << '\t'
        << format_duration(r.mean_duration) << '\t';
    std::snprintf(buf, sizeof(buf), "%.2f\t%.2f", r.speech_pct, r.overlap_err);
    out << buf << "\n";
  };
  for (const DomainRow& r : report.rows) emit(r);
  emit(report.all);
  return out.str();
}

std::string render_domain_report_text(const DomainReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-20s %9s %11s %18s %11s %11s\n", "domain",
                "n_audios", "n_speakers", "average duration", "speech(%)",
                "overlap(%)");
  out << buf;
  auto emit = [&](const DomainRow& r) {
    std::snprintf(buf, sizeof(buf), "%-20s %9d %11s %18s %11.2f %11.2f\n",
                  r.domain.c_str(), r.n_audios, format_speaker_range(r).c_str(),
                  format_duration(r.mean_duration).c_str(), r.speech_pct,
                  r.overlap_err);
    out << buf;
  };
  for (const DomainRow& r : report.rows) emit(r);
  emit(report.all);
  return out.str();
}

}  // namespace diar
