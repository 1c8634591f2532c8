#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diar/annotation.hpp"

namespace diar {

// Sliding-window segmentation parameters. The 1.5 s window with 0.75 s step
// and the central half used for ground-truth labeling are the defaults.
struct SegmenterConfig {
  Millis window = 1500;
  Millis step = 750;
  double central_fraction = 0.5;

  void validate() const;
};

// Tiles each speech region with overlapping windows. Regions shorter than
// the window yield one truncated segment; a region tail not reached by the
// uniform grid gets one extra segment [end-window, end) so every point of
// every region is covered. Segments never cross region boundaries.
std::vector<Segment> uniform_segment(const IntervalList& speech_regions,
                                     const SegmenterConfig& cfg);

// Ground-truth speaker of a segment: the one talking most in the central
// region (central_fraction of the segment, centered). Ties break to the
// lexicographically smaller speaker id; returns nullopt when nobody
// overlaps the center.
std::optional<std::string> assign_reference_label(const Segment& seg,
                                                  const Annotation& ref,
                                                  const SegmenterConfig& cfg);

// Converts labeled, possibly overlapping segments to an annotation.
// Overlap between consecutive segments is split at the midpoint, which for
// uniform windows assigns each instant to the nearest segment center.
// Unlabeled segments contribute nothing.
Annotation segments_to_annotation(const std::string& recording_id,
                                  const std::vector<Segment>& segments,
                                  std::optional<Millis> total_duration = std::nullopt);

}  // namespace diar
