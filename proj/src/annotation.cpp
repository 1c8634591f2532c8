#include "diar/annotation.hpp"

#include <algorithm>
#include <set>

namespace diar {

Annotation Annotation::from_turns(std::string recording_id,
                                  std::vector<SpeakerTurn> turns,
                                  std::optional<Millis> total_duration) {
  for (const SpeakerTurn& t : turns) {
    if (t.duration <= 0)
      throw ValidationError("turn duration must be positive (speaker '" +
                            t.speaker_id + "' in " + recording_id + ")");
    if (t.onset < 0)
      throw ValidationError("turn onset must be non-negative (speaker '" +
                            t.speaker_id + "' in " + recording_id + ")");
  }

  // Merge overlapping/abutting turns per speaker.
  std::sort(turns.begin(), turns.end(), [](const SpeakerTurn& a, const SpeakerTurn& b) {
    if (a.speaker_id != b.speaker_id) return a.speaker_id < b.speaker_id;
    return a.onset < b.onset;
  });
  std::vector<SpeakerTurn> merged;
  for (SpeakerTurn& t : turns) {
    if (!merged.empty() && merged.back().speaker_id == t.speaker_id &&
        t.onset <= merged.back().end()) {
      Millis new_end = std::max(merged.back().end(), t.end());
      merged.back().duration = new_end - merged.back().onset;
    } else {
      t.recording_id = recording_id;
      merged.push_back(std::move(t));
    }
  }

  std::sort(merged.begin(), merged.end(), [](const SpeakerTurn& a, const SpeakerTurn& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    return a.speaker_id < b.speaker_id;
  });

  Millis max_end = 0;
  for (const SpeakerTurn& t : merged) max_end = std::max(max_end, t.end());

  Annotation ann;
  ann.recording_id_ = std::move(recording_id);
  ann.turns_ = std::move(merged);
  if (total_duration) {
    if (*total_duration < max_end)
      throw ValidationError("turn extends past total_duration in " + ann.recording_id_);
    ann.total_duration_ = *total_duration;
  } else {
    ann.total_duration_ = max_end;
  }
  return ann;
}

std::vector<std::string> Annotation::speakers() const {
  std::set<std::string> ids;
  for (const SpeakerTurn& t : turns_) ids.insert(t.speaker_id);
  return {ids.begin(), ids.end()};
}

IntervalList Annotation::speaker_regions(const std::string& speaker_id) const {
  IntervalList xs;
  for (const SpeakerTurn& t : turns_)
    if (t.speaker_id == speaker_id) xs.push_back({t.onset, t.end()});
  // Already disjoint per speaker; sort by onset.
  std::sort(xs.begin(), xs.end());
  return xs;
}

IntervalList Annotation::speech_union() const { return timeline_union(turns_); }

Millis Annotation::total_speaker_time() const {
  Millis total = 0;
  for (const SpeakerTurn& t : turns_) total += t.duration;
  return total;
}

void Annotation::extend_total_duration(Millis d) {
  total_duration_ = std::max(total_duration_, d);
}

IntervalList timeline_union(const std::vector<SpeakerTurn>& turns) {
  IntervalList xs;
  xs.reserve(turns.size());
  for (const SpeakerTurn& t : turns) xs.push_back({t.onset, t.end()});
  return interval_union(std::move(xs));
}

void EmbeddingSet::validate() const {
  if (segments.empty()) throw ValidationError("empty embedding set");
  if (vectors.rows() != static_cast<Eigen::Index>(segments.size()))
    throw ValidationError("embedding count does not match segment count");
  if (vectors.cols() < 1) throw ValidationError("embedding dimension must be positive");
  if (!vectors.allFinite())
    throw ValidationError("embedding set contains NaN/Inf values");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].end <= segments[i].start)
      throw ValidationError("segment with non-positive length in embedding set");
    if (i > 0 && segments[i].start < segments[i - 1].start)
      throw ValidationError("embedding entries not sorted by segment start");
  }
}

void ScoreMatrix::validate() const {
  if (values.rows() != values.cols())
    throw ValidationError("score matrix is not square");
  if (values.rows() < 1) throw ValidationError("score matrix is empty");
  if (!values.allFinite())
    throw ValidationError("score matrix contains NaN/Inf values");
}

bool ScoreMatrix::is_symmetric() const {
  return values == values.transpose();
}

}  // namespace diar
