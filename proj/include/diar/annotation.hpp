#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diar/intervals.hpp"

namespace diar {

// One contiguous stretch of speech by one speaker.
struct SpeakerTurn {
  std::string recording_id;
  int channel = 1;
  Millis onset = 0;
  Millis duration = 0;
  std::string speaker_id;

  Millis end() const { return onset + duration; }

  friend bool operator==(const SpeakerTurn&, const SpeakerTurn&) = default;
};

// Timestamped speaker activity for one recording, in canonical form:
// turns sorted by (onset, speaker_id), and each speaker's turns disjoint
// (overlapping or abutting same-speaker turns are merged on construction).
// Turns of different speakers may overlap.
class Annotation {
 public:
  Annotation() = default;

  // Validates and canonicalizes. If total_duration is absent it becomes the
  // max turn end; if present, every turn must end at or before it.
  static Annotation from_turns(std::string recording_id,
                               std::vector<SpeakerTurn> turns,
                               std::optional<Millis> total_duration = std::nullopt);

  const std::string& recording_id() const { return recording_id_; }
  Millis total_duration() const { return total_duration_; }
  const std::vector<SpeakerTurn>& turns() const { return turns_; }
  bool empty() const { return turns_.empty(); }

  // Sorted unique speaker ids.
  std::vector<std::string> speakers() const;

  // Disjoint sorted regions of one speaker (R_i).
  IntervalList speaker_regions(const std::string& speaker_id) const;

  // dur(R_1 u ... u R_N) support: union over all speakers.
  IntervalList speech_union() const;

  // sum_i dur(R_i), i.e. speaker-time (overlap counted per speaker).
  Millis total_speaker_time() const;

  // Grows total_duration; never shrinks below the last turn end.
  void extend_total_duration(Millis d);

  friend bool operator==(const Annotation&, const Annotation&) = default;

 private:
  std::string recording_id_;
  Millis total_duration_ = 0;
  std::vector<SpeakerTurn> turns_;
};

// Disjoint sorted union of the turns' extents, across speakers.
IntervalList timeline_union(const std::vector<SpeakerTurn>& turns);

// Unit of uniform segmentation. Half-open [start, end).
struct Segment {
  Millis start = 0;
  Millis end = 0;
  std::optional<std::string> label;

  Millis length() const { return end - start; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

// Fixed-dimension vectors, one per uniform segment, sorted by segment start.
struct EmbeddingSet {
  std::string recording_id;
  std::vector<Segment> segments;
  Eigen::MatrixXd vectors;  // n x dim

  int size() const { return static_cast<int>(segments.size()); }
  int dim() const { return static_cast<int>(vectors.cols()); }

  // Checks dimension agreement, finiteness, and sort order.
  void validate() const;
};

// n x n similarity matrix S.
struct ScoreMatrix {
  Eigen::MatrixXd values;

  int size() const { return static_cast<int>(values.rows()); }

  // All entries finite and the matrix square.
  void validate() const;
  bool is_symmetric() const;
};

}  // namespace diar
