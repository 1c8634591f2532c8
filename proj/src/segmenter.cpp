#include "diar/segmenter.hpp"

#include <algorithm>

namespace diar {

void SegmenterConfig::validate() const {
  if (step <= 0 || step > window)
    throw ValidationError("segmenter requires 0 < step <= window");
  if (central_fraction <= 0.0 || central_fraction > 1.0)
    throw ValidationError("central_fraction must be in (0, 1]");
}

std::vector<Segment> uniform_segment(const IntervalList& speech_regions,
                                     const SegmenterConfig& cfg) {
  cfg.validate();
  std::vector<Segment> out;
  for (const Interval& region : speech_regions) {
    if (region.empty()) continue;
    if (region.length() < cfg.window) {
      out.push_back({region.start, region.end, std::nullopt});
      continue;
    }
    Millis start = region.start;
    Millis last_end = region.start;
    while (start + cfg.window <= region.end) {
      out.push_back({start, start + cfg.window, std::nullopt});
      last_end = start + cfg.window;
      start += cfg.step;
    }
    // Tail not on the step grid: one extra window ending exactly at the
    // region end, so the region stays fully covered.
    if (last_end < region.end)
      out.push_back({region.end - cfg.window, region.end, std::nullopt});
  }
  return out;
}

std::optional<std::string> assign_reference_label(const Segment& seg,
                                                  const Annotation& ref,
                                                  const SegmenterConfig& cfg) {
  cfg.validate();
  Millis len = seg.end - seg.start;
  Millis margin = static_cast<Millis>(
      static_cast<double>(len) * (1.0 - cfg.central_fraction) / 2.0 + 0.5);
  IntervalList center{{seg.start + margin, seg.end - margin}};
  if (center[0].empty()) center[0] = {seg.start, seg.end};

  std::optional<std::string> best;
  Millis best_overlap = 0;
  for (const std::string& spk : ref.speakers()) {
    Millis overlap = interval_intersection_length(ref.speaker_regions(spk), center);
    if (overlap > best_overlap) {
      best_overlap = overlap;
      best = spk;
    }
    // Ties keep the earlier (lexicographically smaller) speaker because
    // speakers() is sorted.
  }
  return best;
}

Annotation segments_to_annotation(const std::string& recording_id,
                                  const std::vector<Segment>& segments,
                                  std::optional<Millis> total_duration) {
  std::vector<Segment> segs;
  for (const Segment& s : segments)
    if (s.label && !s.label->empty()) segs.push_back(s);
  std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });

  // Claim boundaries between consecutive overlapping segments sit at the
  // midpoint of the overlap.
  std::vector<SpeakerTurn> turns;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    Millis start = segs[i].start;
    Millis end = segs[i].end;
    if (i > 0 && segs[i - 1].end > start)
      start = std::max(start, (segs[i - 1].end + segs[i].start) / 2);
    if (i + 1 < segs.size() && segs[i + 1].start < end)
      end = std::min(end, (segs[i].end + segs[i + 1].start) / 2);
    if (end <= start) continue;
    SpeakerTurn t;
    t.recording_id = recording_id;
    t.onset = start;
    t.duration = end - start;
    t.speaker_id = *segs[i].label;
    turns.push_back(std::move(t));
  }
  return Annotation::from_turns(recording_id, std::move(turns), total_duration);
}

}  // namespace diar
