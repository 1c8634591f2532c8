#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diar/clustering.hpp"
#include "diar/metadata.hpp"
#include "diar/metrics.hpp"
#include "diar/reseg.hpp"
#include "diar/scoring.hpp"
#include "diar/segmenter.hpp"

namespace diar {

// One manifest row: named artifact paths for a recording. Empty string
// means "not provided".
struct RecordingEntry {
  std::string recording_id;
  std::string domain = "default";
  std::string embeddings;
  std::string features;
  std::string speech_regions;  // triples file (VAD output or oracle regions)
  std::string overlaps;        // overlap-region triples
  std::string reference;       // reference RTTM
  std::string hypothesis;      // precomputed hypothesis RTTM
  std::string scores;          // precomputed score matrix
  std::string segments;        // precomputed segment list
  std::vector<std::string> external_scores;  // fused into the score stage
};

struct PipelineStages {
  bool segment = true;
  bool score = true;
  bool cluster = true;
  bool resegment = true;
  bool overlap = false;
  bool der = true;
};

struct PipelineConfig {
  PipelineStages stages;
  SegmenterConfig segmenter;

  std::string score_backend = "cosine";  // cosine | plda
  std::string plda_model_path;
  std::string whitener_path;
  bool length_normalize = true;

  std::string cluster_backend = "spectral";  // ahc | spectral
  double ahc_threshold = 0.0;
  SpectralConfig spectral;

  std::string reseg_method = "gmm";  // gmm | vb | none
  GmmResegConfig gmm;
  VbConfig vb;
  std::string ubm_path;
  std::string tmat_path;

  Millis overlap_frame_step = 10;
  std::string uem_path;

  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int jobs = 1;

  std::vector<RecordingEntry> manifest;

  // FNV-1a over the canonical serialization of the semantically meaningful
  // fields (stages, stage parameters, seed, manifest entries). output_dir
  // and jobs do not participate.
  std::uint64_t config_hash() const;
};

PipelineConfig config_from_json_file(const std::string& path);

struct StageTiming {
  std::string stage;
  double wall_ms = 0.0;
};

struct RecordingResult {
  std::string recording_id;
  std::vector<StageTiming> timings;
  std::optional<DerBreakdown> der;
  std::string final_rttm_path;
};

struct PipelineResult {
  std::uint64_t config_hash = 0;
  std::vector<RecordingResult> recordings;
  std::optional<DerBreakdown> pooled_der;
  std::optional<DomainReport> metadata;
};

// Validates every enabled stage's inputs up front (naming the recording and
// stage on failure), then runs recordings through the enabled stages with a
// bounded worker pool, writing per-stage artifacts and a JSON report under
// output_dir. Rerunning with identical config and inputs produces
// byte-identical RTTM artifacts.
PipelineResult run_pipeline(const PipelineConfig& cfg);

void write_report_json(const PipelineResult& result, const PipelineConfig& cfg,
                       const std::string& path);

}  // namespace diar
