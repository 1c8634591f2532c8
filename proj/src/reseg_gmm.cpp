#include <algorithm>
#include <cmath>
#include <limits>

#include "diar/reseg.hpp"
#include "diar/rng.hpp"

namespace diar {

void Gmm::validate() const {
  const int c = n_components();
  if (c < 1) throw ValidationError("GMM needs at least one component");
  if (means.rows() != c || covariances.rows() != c ||
      means.cols() != covariances.cols())
    throw ValidationError("GMM parameter shapes disagree");
  if (std::abs(weights.sum() - 1.0) > 1e-10)
    throw ValidationError("GMM weights must sum to 1");
  if ((covariances.array() < 1e-6 - 1e-12).any())
    throw ValidationError("GMM covariance below floor");
}

Eigen::MatrixXd Gmm::component_log_densities(const Eigen::MatrixXd& frames) const {
  const Eigen::Index t = frames.rows();
  const int c = n_components();
  const int d = dim();
  Eigen::MatrixXd out(t, c);
  for (int k = 0; k < c; ++k) {
    double log_norm = -0.5 * (d * std::log(2.0 * M_PI) +
                              covariances.row(k).array().log().sum());
    Eigen::MatrixXd centered = frames.rowwise() - means.row(k);
    Eigen::VectorXd quad = centered.array().square().matrix() *
                           covariances.row(k).cwiseInverse().transpose();
    out.col(k) = (log_norm - 0.5 * quad.array()).matrix();
  }
  return out;
}

Eigen::VectorXd Gmm::log_likelihoods(const Eigen::MatrixXd& frames) const {
  Eigen::MatrixXd logp = component_log_densities(frames);
  logp.rowwise() += weights.array().log().matrix().transpose();
  Eigen::VectorXd mx = logp.rowwise().maxCoeff();
  return mx.array() +
         (logp.colwise() - mx).array().exp().rowwise().sum().log();
}

Eigen::MatrixXd Gmm::responsibilities(const Eigen::MatrixXd& frames,
                                      Eigen::VectorXd* frame_ll) const {
  Eigen::MatrixXd logp = component_log_densities(frames);
  logp.rowwise() += weights.array().log().matrix().transpose();
  Eigen::VectorXd mx = logp.rowwise().maxCoeff();
  Eigen::MatrixXd shifted = (logp.colwise() - mx).array().exp();
  Eigen::VectorXd sums = shifted.rowwise().sum();
  if (frame_ll != nullptr) *frame_ll = mx.array() + sums.array().log();
  return shifted.array().colwise() / sums.array();
}

GmmFitResult fit_gmm(const Eigen::MatrixXd& frames, int n_components,
                     std::uint64_t rng_seed, const GmmFitOptions& opts) {
  const int t = static_cast<int>(frames.rows());
  const int d = static_cast<int>(frames.cols());
  if (t < 1) throw ValidationError("fit_gmm: no frames");
  if (n_components < 1) throw ValidationError("fit_gmm: n_components must be >= 1");
  int c = n_components;
  if (t < c) {
    log_warning("fit_gmm: only " + std::to_string(t) + " frames for " +
                std::to_string(c) + " components; using " + std::to_string(t));
    c = t;
  }

  // Distance-weighted seeding of the means; shared global variance start.
  Rng rng(rng_seed);
  Eigen::VectorXd global_mean = frames.colwise().mean();
  Eigen::RowVectorXd global_var =
      (frames.rowwise() - global_mean.transpose()).array().square().colwise().mean();
  global_var = global_var.cwiseMax(opts.var_floor);

  Gmm gmm;
  gmm.weights = Eigen::VectorXd::Constant(c, 1.0 / c);
  gmm.means.resize(c, d);
  gmm.covariances.resize(c, d);
  gmm.means.row(0) = frames.row(rng.uniform_int(0, t - 1));
  std::vector<double> dist2(t);
  for (int k = 1; k < c; ++k) {
    for (int i = 0; i < t; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j)
        best = std::min(best, (frames.row(i) - gmm.means.row(j)).squaredNorm());
      dist2[i] = best;
    }
    gmm.means.row(k) = frames.row(static_cast<int>(rng.categorical(dist2)));
  }
  for (int k = 0; k < c; ++k) gmm.covariances.row(k) = global_var;

  GmmFitResult result;
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    Eigen::VectorXd frame_ll;
    Eigen::MatrixXd resp = gmm.responsibilities(frames, &frame_ll);
    double ll = frame_ll.sum();
    if (!result.ll_trace.empty() &&
        ll < result.ll_trace.back() - 1e-9 * (1.0 + std::abs(result.ll_trace.back())))
      throw std::runtime_error("fit_gmm: EM log-likelihood decreased");
    result.ll_trace.push_back(ll);

    Eigen::VectorXd occupancy = resp.colwise().sum();

    // Drop components with no support; the mixture density is unchanged
    // where it matters and the trace stays monotone.
    std::vector<int> keep;
    for (int k = 0; k < c; ++k)
      if (occupancy(k) > 1e-10) keep.push_back(k);
    if (static_cast<int>(keep.size()) < c) {
      Gmm pruned;
      pruned.weights.resize(keep.size());
      pruned.means.resize(keep.size(), d);
      pruned.covariances.resize(keep.size(), d);
      Eigen::MatrixXd pruned_resp(t, keep.size());
      Eigen::VectorXd pruned_occ(keep.size());
      for (std::size_t k = 0; k < keep.size(); ++k) {
        pruned.means.row(k) = gmm.means.row(keep[k]);
        pruned.covariances.row(k) = gmm.covariances.row(keep[k]);
        pruned_resp.col(k) = resp.col(keep[k]);
        pruned_occ(k) = occupancy(keep[k]);
      }
      c = static_cast<int>(keep.size());
      gmm.means = pruned.means;
      gmm.covariances = pruned.covariances;
      resp = pruned_resp;
      occupancy = pruned_occ;
      gmm.weights.resize(c);
    }

    gmm.weights = occupancy / occupancy.sum();
    for (int k = 0; k < c; ++k) {
      Eigen::RowVectorXd mean_k =
          (resp.col(k).transpose() * frames) / occupancy(k);
      Eigen::MatrixXd centered = frames.rowwise() - mean_k;
      Eigen::RowVectorXd var_k =
          (resp.col(k).transpose() * centered.array().square().matrix()) /
          occupancy(k);
      gmm.means.row(k) = mean_k;
      gmm.covariances.row(k) = var_k.cwiseMax(opts.var_floor);
    }

    if (iter > 0 && ll - prev_ll < opts.tol) break;
    prev_ll = ll;
  }
  result.gmm = std::move(gmm);
  return result;
}

// --------------------------------------------------------------------------
// Frame assignments and GMM resegmentation
// --------------------------------------------------------------------------

int FrameAssignment::num_speakers() const {
  int mx = -1;
  for (int l : labels) mx = std::max(mx, l);
  return mx + 1;
}

void FrameAssignment::validate() const {
  for (int l : labels)
    if (l < kSilence) throw ValidationError("frame label below silence marker");
  if (posteriors) {
    if (posteriors->rows() != static_cast<Eigen::Index>(labels.size()))
      throw ValidationError("posterior rows must match frame count");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == kSilence) continue;
      if (std::abs(posteriors->row(i).sum() - 1.0) > 1e-8)
        throw ValidationError("speech-frame posterior row does not sum to 1");
    }
  }
}

FrameAssignment gmm_resegment(const FrameFeatures& features,
                              const FrameAssignment& init,
                              const std::vector<int>& speech_mask,
                              const GmmResegConfig& cfg) {
  features.validate();
  const int t = features.num_frames();
  if (static_cast<int>(init.labels.size()) != t ||
      static_cast<int>(speech_mask.size()) != t)
    throw ValidationError("gmm_resegment: frame count mismatch");
  for (int i = 0; i < t; ++i)
    if (speech_mask[i] != 0 && init.labels[i] == FrameAssignment::kSilence)
      throw ValidationError("gmm_resegment: init labels must cover speech frames");

  FrameAssignment current = init;
  const int n_speakers = init.num_speakers();
  if (n_speakers < 2) {
    log_warning("gmm_resegment: fewer than 2 speakers; returning input");
    return current;
  }

  std::vector<char> alive(n_speakers, 1);
  for (int turn = 0; turn < cfg.max_turns; ++turn) {
    // Collect each live speaker's frames.
    std::vector<std::vector<int>> frames_of(n_speakers);
    for (int i = 0; i < t; ++i) {
      if (speech_mask[i] == 0) continue;
      int s = current.labels[i];
      if (s >= 0 && alive[s]) frames_of[s].push_back(i);
    }
    std::vector<Gmm> models(n_speakers);
    std::vector<char> has_model(n_speakers, 0);
    for (int s = 0; s < n_speakers; ++s) {
      if (!alive[s]) continue;
      if (frames_of[s].empty()) {
        alive[s] = 0;
        log_warning("gmm_resegment: speaker " + std::to_string(s) +
                    " lost all frames; dropping");
        continue;
      }
      Eigen::MatrixXd x(frames_of[s].size(), features.dim());
      for (std::size_t r = 0; r < frames_of[s].size(); ++r)
        x.row(r) = features.frames.row(frames_of[s][r]);
      std::uint64_t seed = cfg.rng_seed ^ (0x9e3779b97f4a7c15ull * (s + 1)) ^
                           (0xc2b2ae3d27d4eb4full * (turn + 1));
      models[s] = fit_gmm(x, cfg.n_components, seed, cfg.fit).gmm;
      has_model[s] = 1;
    }

    int live = 0;
    for (int s = 0; s < n_speakers; ++s) live += has_model[s];
    if (live < 2) break;

    // Reassign speech frames to the most likely speaker model.
    Eigen::MatrixXd ll(t, n_speakers);
    ll.setConstant(-std::numeric_limits<double>::infinity());
    for (int s = 0; s < n_speakers; ++s)
      if (has_model[s]) ll.col(s) = models[s].log_likelihoods(features.frames);

    int changes = 0;
    for (int i = 0; i < t; ++i) {
      if (speech_mask[i] == 0) continue;
      int best = -1;
      double best_ll = -std::numeric_limits<double>::infinity();
      for (int s = 0; s < n_speakers; ++s) {
        if (!has_model[s]) continue;
        if (ll(i, s) > best_ll) {
          best_ll = ll(i, s);
          best = s;
        }
      }
      if (best != current.labels[i]) {
        current.labels[i] = best;
        ++changes;
      }
    }
    if (changes == 0) break;
  }
  current.posteriors.reset();
  return current;
}

// --------------------------------------------------------------------------
// Conversions
// --------------------------------------------------------------------------

std::vector<int> speech_mask_from_regions(const IntervalList& regions,
                                          Millis frame_step, int num_frames) {
  std::vector<int> mask(num_frames, 0);
  for (int i = 0; i < num_frames; ++i) {
    Millis center = i * frame_step + frame_step / 2;
    for (const Interval& r : regions)
      if (r.contains(center)) {
        mask[i] = 1;
        break;
      }
  }
  return mask;
}

FrameAssignment frames_from_annotation(const Annotation& ann,
                                       const IntervalList& speech_regions,
                                       Millis frame_step, int num_frames) {
  FrameAssignment fa;
  fa.labels.assign(num_frames, FrameAssignment::kSilence);
  std::vector<std::string> speakers = ann.speakers();
  std::vector<IntervalList> regions;
  regions.reserve(speakers.size());
  for (const auto& s : speakers) regions.push_back(ann.speaker_regions(s));

  std::vector<int> mask = speech_mask_from_regions(speech_regions, frame_step,
                                                   num_frames);
  for (int i = 0; i < num_frames; ++i) {
    if (mask[i] == 0) continue;
    IntervalList frame{{i * frame_step, (i + 1) * frame_step}};
    Millis best_overlap = 0;
    int best = FrameAssignment::kSilence;
    for (std::size_t s = 0; s < speakers.size(); ++s) {
      Millis ov = interval_intersection_length(regions[s], frame);
      if (ov > best_overlap) {
        best_overlap = ov;
        best = static_cast<int>(s);
      }
    }
    fa.labels[i] = best;
  }

  // Speech frames not covered by any turn inherit the nearest labeled frame.
  int last = FrameAssignment::kSilence;
  std::vector<int> next_label(num_frames, FrameAssignment::kSilence);
  int nxt = FrameAssignment::kSilence;
  for (int i = num_frames - 1; i >= 0; --i) {
    if (fa.labels[i] >= 0) nxt = fa.labels[i];
    next_label[i] = nxt;
  }
  for (int i = 0; i < num_frames; ++i) {
    if (fa.labels[i] >= 0) {
      last = fa.labels[i];
      continue;
    }
    if (mask[i] == 0) continue;
    fa.labels[i] = last >= 0 ? last : next_label[i];
  }
  return fa;
}

Annotation annotation_from_frames(const std::string& recording_id,
                                  const FrameAssignment& frames, Millis frame_step,
                                  const std::vector<std::string>& speaker_names,
                                  std::optional<Millis> total_duration) {
  std::vector<SpeakerTurn> turns;
  const int t = frames.num_frames();
  int i = 0;
  while (i < t) {
    int label = frames.labels[i];
    int j = i;
    while (j < t && frames.labels[j] == label) ++j;
    if (label >= 0) {
      if (label >= static_cast<int>(speaker_names.size()))
        throw ValidationError("annotation_from_frames: label out of range");
      SpeakerTurn turn;
      turn.recording_id = recording_id;
      turn.onset = i * frame_step;
      turn.duration = static_cast<Millis>(j - i) * frame_step;
      turn.speaker_id = speaker_names[label];
      turns.push_back(std::move(turn));
    }
    i = j;
  }
  return Annotation::from_turns(recording_id, std::move(turns), total_duration);
}

// --------------------------------------------------------------------------
// Overlap labels
// --------------------------------------------------------------------------

Annotation assign_overlap_labels(const Annotation& diar,
                                 const IntervalList& overlap_regions,
                                 Millis frame_step, int extend_frames) {
  if (frame_step <= 0) throw ValidationError("assign_overlap_labels: frame_step must be positive");
  const Millis pad = extend_frames * frame_step;
  std::vector<SpeakerTurn> turns = diar.turns();
  std::vector<std::string> speakers = diar.speakers();
  std::vector<IntervalList> regions;
  regions.reserve(speakers.size());
  for (const auto& s : speakers) regions.push_back(diar.speaker_regions(s));

  for (const Interval& region : overlap_regions) {
    if (region.empty()) continue;
    Interval extended{std::max<Millis>(0, region.start - pad),
                      std::min(diar.total_duration(), region.end + pad)};
    IntervalList window{extended};
    bool any = false;
    for (std::size_t s = 0; s < speakers.size(); ++s) {
      if (interval_intersection_length(regions[s], window) <= 0) continue;
      any = true;
      SpeakerTurn turn;
      turn.recording_id = diar.recording_id();
      turn.onset = region.start;
      turn.duration = region.length();
      turn.speaker_id = speakers[s];
      turns.push_back(std::move(turn));
    }
    if (!any)
      log_warning("overlap region [" + format_seconds(region.start) + ", " +
                  format_seconds(region.end) + ") in " + diar.recording_id() +
                  " has no speakers in the extended window");
  }
  return Annotation::from_turns(diar.recording_id(), std::move(turns),
                                diar.total_duration());
}

}  // namespace diar
