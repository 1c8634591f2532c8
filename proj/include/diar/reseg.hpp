#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diar/annotation.hpp"
#include "diar/io.hpp"

namespace diar {

// Diagonal-covariance Gaussian mixture.
struct Gmm {
  Eigen::VectorXd weights;      // C, sums to 1
  Eigen::MatrixXd means;        // C x d
  Eigen::MatrixXd covariances;  // C x d, diagonal entries, floored

  int n_components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
  void validate() const;

  // Per-frame log densities of each component, without mixture weights.
  Eigen::MatrixXd component_log_densities(const Eigen::MatrixXd& frames) const;
  // log sum_c w_c N(x; mu_c, Sigma_c) per frame.
  Eigen::VectorXd log_likelihoods(const Eigen::MatrixXd& frames) const;
  // Posterior responsibilities (rows sum to 1) and per-frame log-likelihood.
  Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& frames,
                                   Eigen::VectorXd* frame_ll = nullptr) const;
};

struct GmmFitOptions {
  int max_iters = 100;
  double tol = 1e-4;          // stop when the log-likelihood gain drops below
  double var_floor = 1e-6;
};

struct GmmFitResult {
  Gmm gmm;
  std::vector<double> ll_trace;  // total log-likelihood after each iteration
};

// EM for a diagonal GMM, deterministically seeded. When there are fewer
// frames than requested components the count falls back to the frame count
// with a warning.
GmmFitResult fit_gmm(const Eigen::MatrixXd& frames, int n_components,
                     std::uint64_t rng_seed, const GmmFitOptions& opts = {});

// Per-frame speaker labels; kSilence marks non-speech frames.
struct FrameAssignment {
  static constexpr int kSilence = -1;
  std::vector<int> labels;                     // length T
  std::optional<Eigen::MatrixXd> posteriors;   // T x S, rows sum to 1 on speech

  int num_frames() const { return static_cast<int>(labels.size()); }
  int num_speakers() const;
  void validate() const;
};

struct GmmResegConfig {
  int n_components = 8;
  int max_turns = 5;
  std::uint64_t rng_seed = 0;
  GmmFitOptions fit;
};

// Iterative frame reassignment: fit one GMM per speaker on its frames,
// reassign every speech frame to the argmax-likelihood speaker, repeat up
// to max_turns times or until no label changes. Silence frames are never
// touched; speakers that lose all frames drop out of later iterations.
FrameAssignment gmm_resegment(const FrameFeatures& features,
                              const FrameAssignment& init,
                              const std::vector<int>& speech_mask,
                              const GmmResegConfig& cfg = {});

// ---------------------------------------------------------------------------
// VB diarization: HMM over speakers with eigenvoice priors. Speaker GMMs
// share the UBM weights/covariances; means are mu_ubm + T z with z ~ N(0, I).
// ---------------------------------------------------------------------------

struct VbModel {
  Gmm ubm;
  Eigen::MatrixXd tmat;  // (C*d) x R, component-major row blocks

  int z_dim() const { return static_cast<int>(tmat.cols()); }
  void validate() const;
};

struct VbConfig {
  int max_iters = 1;
  int downsample = 3;
  double loop_prob = 0.99;
  double stat_scale = 0.3;

  void validate() const;
};

struct VbResult {
  FrameAssignment assignment;
  // Evidence lower bound after each half step (z update, then HMM state
  // update), concatenated across iterations; non-decreasing.
  std::vector<double> elbo_trace;
};

VbResult vb_resegment(const FrameFeatures& features, const FrameAssignment& init,
                      const VbModel& model, const VbConfig& cfg);

// PPCA-style EM estimate of the total-variability matrix from per-utterance
// zeroth/first-order statistics against the UBM.
struct UtteranceStats {
  Eigen::VectorXd zeroth;  // C
  Eigen::MatrixXd first;   // C x d, gamma-weighted sums of (x - mu_c)
};

Eigen::MatrixXd estimate_total_variability(const std::vector<UtteranceStats>& stats,
                                           const Gmm& ubm, int rank, int iters,
                                           std::uint64_t seed);

UtteranceStats accumulate_stats(const Gmm& ubm, const Eigen::MatrixXd& frames);

// VB model files: UBM as weights/means/covariances blocks, T as one matrix.
VbModel read_vb_model(const std::string& ubm_path, const std::string& tmat_path);
void write_ubm(const Gmm& ubm, const std::string& path);
void write_tmat(const Eigen::MatrixXd& tmat, const std::string& path);

// ---------------------------------------------------------------------------
// Overlap label assignment (post-clustering second speakers).
// ---------------------------------------------------------------------------

// For each overlap region [a, b): extend by +-extend_frames * frame_step,
// clip to [0, total_duration), and make every speaker with diarized speech
// inside the extended window a simultaneous label of [a, b). Regions whose
// extended window contains no speech are left unchanged with a warning.
Annotation assign_overlap_labels(const Annotation& diar,
                                 const IntervalList& overlap_regions,
                                 Millis frame_step, int extend_frames = 20);

// ---------------------------------------------------------------------------
// Frame/annotation conversions shared by the resegmentation CLI and pipeline.
// ---------------------------------------------------------------------------

// Labels each frame by the speaker active at its center (ties to the
// speaker covering most of the frame); frames outside the speech mask get
// kSilence. Speaker indices follow ann.speakers() order. Uncovered speech
// frames inherit the nearest labeled frame's speaker.
FrameAssignment frames_from_annotation(const Annotation& ann,
                                       const IntervalList& speech_regions,
                                       Millis frame_step, int num_frames);

// Consecutive equal labels become turns; names taken from `speaker_names`.
Annotation annotation_from_frames(const std::string& recording_id,
                                  const FrameAssignment& frames, Millis frame_step,
                                  const std::vector<std::string>& speaker_names,
                                  std::optional<Millis> total_duration = std::nullopt);

std::vector<int> speech_mask_from_regions(const IntervalList& regions,
                                          Millis frame_step, int num_frames);

}  // namespace diar
