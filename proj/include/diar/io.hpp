#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "diar/annotation.hpp"

namespace diar {

// Frame-synchronous acoustic features for one recording.
struct FrameFeatures {
  std::string recording_id;
  Millis frame_step = 10;    // hop, default 10 ms
  Millis frame_length = 25;  // window, default 25 ms
  Eigen::MatrixXd frames;    // T x dim

  int num_frames() const { return static_cast<int>(frames.rows()); }
  int dim() const { return static_cast<int>(frames.cols()); }
  void validate() const;
};

// Frame-level speech/nonspeech decisions (1 = speech).
struct VadLabels {
  std::string recording_id;
  Millis frame_step = 10;
  std::vector<int> labels;

  void validate() const;
};

// ---------------------------------------------------------------------------
// RTTM: `SPEAKER <file> <chan> <onset> <dur> <NA> <NA> <speaker> <NA> <NA>`.
// Non-SPEAKER rows are skipped. Returns one canonical Annotation per
// recording (same-speaker turns merged, total_duration = max turn end).
// ---------------------------------------------------------------------------
std::map<std::string, Annotation> parse_rttm(std::istream& in);
std::map<std::string, Annotation> parse_rttm_file(const std::string& path);

void emit_rttm(const Annotation& ann, std::ostream& out);
void emit_rttm(const std::map<std::string, Annotation>& anns, std::ostream& out);
std::string rttm_to_string(const Annotation& ann);

// UEM scored regions: `<file> <chan> <onset> <offset>`.
std::map<std::string, IntervalList> parse_uem(std::istream& in);
std::map<std::string, IntervalList> parse_uem_file(const std::string& path);
void emit_uem(const std::map<std::string, IntervalList>& regions, std::ostream& out);

// Interval triples `<file> <onset> <dur>`: one format serving VAD speech
// regions, overlap regions, and generic speech-region inputs. Regions are
// merged to a disjoint sorted list per recording.
std::map<std::string, IntervalList> parse_region_triples(std::istream& in);
std::map<std::string, IntervalList> parse_region_triples_file(const std::string& path);
void emit_region_triples(const std::string& recording_id, const IntervalList& xs,
                         std::ostream& out);

// Segment lists `<file> <start> <end>` (output of the segment stage).
std::map<std::string, std::vector<Segment>> parse_segments(std::istream& in);
std::map<std::string, std::vector<Segment>> parse_segments_file(const std::string& path);
void emit_segments(const std::string& recording_id, const std::vector<Segment>& segs,
                   std::ostream& out);

// ---------------------------------------------------------------------------
// Embeddings. Text: header `n d`, then n rows `start end v1 .. vd`.
// Binary: magic "DKEB", u32 n, u32 d, then n*(2+d) little-endian f64
// (start, end, values...). parse_embeddings_file sniffs the magic.
// ---------------------------------------------------------------------------
EmbeddingSet parse_embeddings(std::istream& in, const std::string& recording_id);
EmbeddingSet parse_embeddings_file(const std::string& path,
                                   const std::string& recording_id = "");
void emit_embeddings(const EmbeddingSet& set, std::ostream& out);
void emit_embeddings_binary(const EmbeddingSet& set, std::ostream& out);

// Score matrix: header `n`, then n rows of n values.
ScoreMatrix parse_score_matrix(std::istream& in);
ScoreMatrix parse_score_matrix_file(const std::string& path);
void emit_score_matrix(const ScoreMatrix& m, std::ostream& out);

// Frame features. Text: header `T d frame_step frame_length` (seconds),
// then T rows of d values. Binary: magic "DKFB", u32 T, u32 d,
// f64 step, f64 length, then T*d f64.
FrameFeatures parse_features(std::istream& in, const std::string& recording_id);
FrameFeatures parse_features_file(const std::string& path,
                                  const std::string& recording_id = "");
void emit_features(const FrameFeatures& f, std::ostream& out);
void emit_features_binary(const FrameFeatures& f, std::ostream& out);

// Plain matrix blocks used by model files (PLDA, whitener, UBM, T matrix):
// header `rows cols`, then rows lines of cols values.
Eigen::MatrixXd parse_matrix(std::istream& in, const std::string& what);
void emit_matrix(const Eigen::MatrixXd& m, std::ostream& out);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace diar
