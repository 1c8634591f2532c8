#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diar/annotation.hpp"
#include "diar/io.hpp"
#include "diar/segmenter.hpp"

namespace diar {

// Desk-scale corpus generation targets. Speech percentage and overlap error
// are hit by exact millisecond budgeting, not rejection sampling.
struct CorpusProfile {
  int n_recordings = 8;
  double min_duration_s = 60.0;
  double max_duration_s = 180.0;
  int min_speakers = 2;
  int max_speakers = 4;
  double target_speech_pct = 76.0;   // R%
  double target_overlap_pct = 10.8;  // O%
  int embedding_dim = 16;
  double between_spread = 3.0;  // speaker-mean scatter
  double within_spread = 0.5;   // per-sample noise
  std::uint64_t rng_seed = 1;

  Millis frame_step = 10;
  Millis frame_length = 25;
  SegmenterConfig segmenter;

  void validate() const;
};

struct SynthRecording {
  Annotation reference;
  EmbeddingSet embeddings;
  FrameFeatures features;
  VadLabels vad;
  IntervalList overlap_regions;  // where >= 2 speakers are active

  // Generator bookkeeping, independent of the metadata module.
  Millis planned_speech_union = 0;   // dur(union R_i)
  Millis planned_speaker_time = 0;   // sum_i dur(R_i)
};

struct SynthCorpus {
  std::vector<SynthRecording> recordings;
};

// Deterministic for a given profile seed. Measured speech percentage and
// overlapped error land within a millisecond-rounding sliver of the targets.
SynthCorpus generate_corpus(const CorpusProfile& profile);

CorpusProfile profile_from_json_file(const std::string& path);

}  // namespace diar
