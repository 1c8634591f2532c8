#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "diar/reseg.hpp"
#include "diar/rng.hpp"

namespace diar {

void VbModel::validate() const {
  ubm.validate();
  const int cd = ubm.n_components() * ubm.dim();
  if (static_cast<int>(tmat.rows()) != cd)
    throw ValidationError("T matrix rows must equal C*d of the UBM");
  if (tmat.cols() < 1) throw ValidationError("T matrix needs at least one column");
  if (!tmat.allFinite()) throw ValidationError("T matrix contains NaN/Inf");
  for (Eigen::Index r = 0; r < tmat.cols(); ++r)
    if (tmat.col(r).norm() == 0.0)
      throw ValidationError("T matrix has a degenerate (all-zero) column");
}

void VbConfig::validate() const {
  if (max_iters < 1) throw ValidationError("VB max_iters must be >= 1");
  if (downsample < 1) throw ValidationError("VB downsample must be >= 1");
  if (loop_prob <= 0.0 || loop_prob >= 1.0)
    throw ValidationError("VB loop_prob must be in (0, 1)");
  if (stat_scale <= 0.0) throw ValidationError("VB stat_scale must be positive");
}

namespace {

// Scaled forward-backward over an S-state HMM with uniform initial
// probabilities, self-transition `loop` and uniform cross transitions.
// Emissions are log potentials. Returns state posteriors and the log
// normalizer (sum of scaling logs).
double forward_backward(const Eigen::MatrixXd& log_emissions, double loop,
                        Eigen::MatrixXd* posteriors) {
  const Eigen::Index t = log_emissions.rows();
  const Eigen::Index s = log_emissions.cols();
  const double cross = (1.0 - loop) / static_cast<double>(s - 1);

  // Per-frame shift keeps the scaled recursions in range; the shifts add
  // back into the log normalizer.
  Eigen::VectorXd shift = log_emissions.rowwise().maxCoeff();
  Eigen::MatrixXd emis =
      (log_emissions.colwise() - shift).array().exp().matrix();

  Eigen::MatrixXd alpha(t, s), beta(t, s);
  Eigen::VectorXd scale(t);
  alpha.row(0) = emis.row(0) / static_cast<double>(s);
  scale(0) = alpha.row(0).sum();
  alpha.row(0) /= scale(0);
  for (Eigen::Index i = 1; i < t; ++i) {
    double total = alpha.row(i - 1).sum();
    // row * A where A = cross * 11' + (loop - cross) * I
    alpha.row(i) =
        ((alpha.row(i - 1) * (loop - cross)).array() + cross * total) *
        emis.row(i).array();
    scale(i) = alpha.row(i).sum();
    alpha.row(i) /= scale(i);
  }

  beta.row(t - 1).setOnes();
  for (Eigen::Index i = t - 2; i >= 0; --i) {
    Eigen::RowVectorXd weighted =
        beta.row(i + 1).array() * emis.row(i + 1).array();
    double total = weighted.sum();
    beta.row(i) =
        ((weighted * (loop - cross)).array() + cross * total) / scale(i + 1);
  }

  posteriors->resize(t, s);
  *posteriors = alpha.array() * beta.array();
  for (Eigen::Index i = 0; i < t; ++i) {
    double sum = posteriors->row(i).sum();
    posteriors->row(i) /= sum;
  }
  return scale.array().log().sum() + shift.sum();
}

}  // namespace

VbResult vb_resegment(const FrameFeatures& features, const FrameAssignment& init,
                      const VbModel& model, const VbConfig& cfg) {
  cfg.validate();
  model.validate();
  features.validate();
  const int t = features.num_frames();
  if (static_cast<int>(init.labels.size()) != t)
    throw ValidationError("vb_resegment: frame count mismatch");
  if (features.dim() != model.ubm.dim())
    throw ValidationError("vb_resegment: feature dim does not match the UBM");

  const int n_speakers = init.num_speakers();
  VbResult result;
  result.assignment = init;
  if (n_speakers < 2) return result;

  // Speech frames, downsampled along the speech-frame sequence.
  std::vector<int> speech;
  for (int i = 0; i < t; ++i)
    if (init.labels[i] != FrameAssignment::kSilence) speech.push_back(i);
  std::vector<int> ds;
  for (std::size_t i = 0; i < speech.size(); i += cfg.downsample)
    ds.push_back(speech[i]);
  const int td = static_cast<int>(ds.size());
  if (td < 2) return result;

  const int c = model.ubm.n_components();
  const int d = model.ubm.dim();
  const int r = model.z_dim();

  Eigen::MatrixXd frames(td, d);
  for (int i = 0; i < td; ++i) frames.row(i) = features.frames.row(ds[i]);

  // UBM statistics, scaled. gamma' = stat_scale * gamma.
  Eigen::VectorXd ubm_ll;
  Eigen::MatrixXd gamma = model.ubm.responsibilities(frames, &ubm_ll);
  gamma *= cfg.stat_scale;
  if (!gamma.allFinite() || !ubm_ll.allFinite())
    throw std::runtime_error("vb_resegment: non-finite UBM statistics");

  // Precompute per component: T_c, Sigma_c^-1 T_c, M_c = T_c' Sigma_c^-1 T_c.
  std::vector<Eigen::MatrixXd> tc(c), sinv_tc(c), m_c(c);
  for (int k = 0; k < c; ++k) {
    tc[k] = model.tmat.middleRows(static_cast<Eigen::Index>(k) * d, d);
    sinv_tc[k] = model.ubm.covariances.row(k).cwiseInverse().asDiagonal() * tc[k];
    m_c[k] = tc[k].transpose() * sinv_tc[k];
  }

  // rho_t = sum_c gamma'_tc T_c' Sigma_c^-1 (o_t - mu_c).
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(td, r);
  for (int k = 0; k < c; ++k) {
    Eigen::MatrixXd centered = frames.rowwise() - model.ubm.means.row(k);
    rho += (gamma.col(k).asDiagonal() * centered) * sinv_tc[k];
  }
  if (!rho.allFinite())
    throw std::runtime_error("vb_resegment: non-finite first-order statistics");

  // Speaker-independent tempered frame term.
  Eigen::VectorXd g = cfg.stat_scale * ubm_ll;

  // Initial hard state distribution from the init labels.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(td, n_speakers);
  for (int i = 0; i < td; ++i) q(i, init.labels[ds[i]]) = 1.0;

  const double cross = (1.0 - cfg.loop_prob) / static_cast<double>(n_speakers - 1);
  const double log_pi = -std::log(static_cast<double>(n_speakers));

  // Expected log p(S) + entropy of the current q(S). For the one-hot init
  // this is the log probability of the fixed path; after a forward-backward
  // update it equals logZ - sum q*emission.
  bool q_from_fb = false;
  double prev_logz = 0.0;
  Eigen::MatrixXd prev_emissions;

  Eigen::MatrixXd zhat = Eigen::MatrixXd::Zero(n_speakers, r);
  std::vector<Eigen::MatrixXd> lambda_inv(n_speakers);
  Eigen::VectorXd kl = Eigen::VectorXd::Zero(n_speakers);
  Eigen::MatrixXd emissions(td, n_speakers);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // --- q(z_s) update ---
    Eigen::MatrixXd a = q.transpose() * gamma;  // S x C occupation
    for (int s = 0; s < n_speakers; ++s) {
      Eigen::MatrixXd lambda = Eigen::MatrixXd::Identity(r, r);
      for (int k = 0; k < c; ++k) lambda += a(s, k) * m_c[k];
      Eigen::LLT<Eigen::MatrixXd> llt(lambda);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("vb_resegment: precision update failed");
      lambda_inv[s] = llt.solve(Eigen::MatrixXd::Identity(r, r));
      Eigen::VectorXd first = rho.transpose() * q.col(s);
      zhat.row(s) = (lambda_inv[s] * first).transpose();
      double logdet =
          2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      kl(s) = 0.5 * (lambda_inv[s].trace() + zhat.row(s).squaredNorm() -
                     r + logdet);
    }

    // --- emissions E_q[kappa log p(o_t | s)] ---
    // trace term: m_sc = tr((Lambda_s^-1 + z z') M_c).
    Eigen::MatrixXd trace_term(n_speakers, c);
    for (int s = 0; s < n_speakers; ++s) {
      Eigen::MatrixXd second = lambda_inv[s] + zhat.row(s).transpose() * zhat.row(s);
      for (int k = 0; k < c; ++k)
        trace_term(s, k) = (second.array() * m_c[k].array()).sum();
    }
    emissions = rho * zhat.transpose();
    emissions -= 0.5 * (gamma * trace_term.transpose());
    emissions.colwise() += g;

    // ELBO after the z update, under the not-yet-updated q(S).
    double structure;
    if (!q_from_fb) {
      structure = log_pi;
      for (int i = 1; i < td; ++i) {
        bool same = init.labels[ds[i]] == init.labels[ds[i - 1]];
        structure += std::log(same ? cfg.loop_prob : cross);
      }
    } else {
      structure = prev_logz - (q.array() * prev_emissions.array()).sum();
    }
    double elbo_half =
        (q.array() * emissions.array()).sum() + structure - kl.sum();
    result.elbo_trace.push_back(elbo_half);

    // --- q(S) update by forward-backward ---
    double logz = forward_backward(emissions, cfg.loop_prob, &q);
    result.elbo_trace.push_back(logz - kl.sum());
    q_from_fb = true;
    prev_logz = logz;
    prev_emissions = emissions;
  }

  // Labels on downsampled frames, expanded to full rate by nearest
  // downsampled speech frame.
  std::vector<int> ds_label(td);
  for (int i = 0; i < td; ++i) {
    int best = 0;
    q.row(i).maxCoeff(&best);
    ds_label[i] = best;
  }

  FrameAssignment out;
  out.labels.assign(t, FrameAssignment::kSilence);
  Eigen::MatrixXd posteriors = Eigen::MatrixXd::Zero(t, n_speakers);
  for (std::size_t i = 0; i < speech.size(); ++i) {
    // Nearest downsampled index for speech-sequence position i.
    std::size_t lo = i / cfg.downsample;
    std::size_t rem = i - lo * cfg.downsample;
    std::size_t pick = (2 * rem <= static_cast<std::size_t>(cfg.downsample))
                           ? lo
                           : lo + 1;
    if (pick >= static_cast<std::size_t>(td)) pick = td - 1;
    out.labels[speech[i]] = ds_label[pick];
    posteriors.row(speech[i]) = q.row(static_cast<Eigen::Index>(pick));
  }
  out.posteriors = std::move(posteriors);
  result.assignment = std::move(out);
  return result;
}

// --------------------------------------------------------------------------
// Total-variability training (PPCA-style EM on UBM statistics)
// --------------------------------------------------------------------------

UtteranceStats accumulate_stats(const Gmm& ubm, const Eigen::MatrixXd& frames) {
  Eigen::MatrixXd gamma = ubm.responsibilities(frames);
  UtteranceStats stats;
  stats.zeroth = gamma.colwise().sum();
  stats.first.resize(ubm.n_components(), ubm.dim());
  for (int k = 0; k < ubm.n_components(); ++k) {
    Eigen::MatrixXd centered = frames.rowwise() - ubm.means.row(k);
    stats.first.row(k) = gamma.col(k).transpose() * centered;
  }
  return stats;
}

Eigen::MatrixXd estimate_total_variability(const std::vector<UtteranceStats>& stats,
                                           const Gmm& ubm, int rank, int iters,
                                           std::uint64_t seed) {
  if (stats.empty()) throw ValidationError("estimate_total_variability: no stats");
  const int c = ubm.n_components();
  const int d = ubm.dim();

  Rng rng(seed);
  Eigen::MatrixXd tmat(c * d, rank);
  double scale = std::sqrt(ubm.covariances.mean());
  for (Eigen::Index i = 0; i < tmat.size(); ++i)
    tmat.data()[i] = 0.1 * scale * rng.normal();

  for (int iter = 0; iter < iters; ++iter) {
    std::vector<Eigen::MatrixXd> sinv_tc(c), m_c(c);
    for (int k = 0; k < c; ++k) {
      Eigen::MatrixXd tc = tmat.middleRows(static_cast<Eigen::Index>(k) * d, d);
      sinv_tc[k] = ubm.covariances.row(k).cwiseInverse().asDiagonal() * tc;
      m_c[k] = tc.transpose() * sinv_tc[k];
    }

    // Accumulators: per component, A_c = sum_u N_uc E[zz'], B_c = F_uc' E[z].
    std::vector<Eigen::MatrixXd> acc_a(c, Eigen::MatrixXd::Zero(rank, rank));
    std::vector<Eigen::MatrixXd> acc_b(c, Eigen::MatrixXd::Zero(d, rank));
    for (const UtteranceStats& u : stats) {
      Eigen::MatrixXd lambda = Eigen::MatrixXd::Identity(rank, rank);
      for (int k = 0; k < c; ++k) lambda += u.zeroth(k) * m_c[k];
      Eigen::LLT<Eigen::MatrixXd> llt(lambda);
      Eigen::MatrixXd lambda_inv = llt.solve(Eigen::MatrixXd::Identity(rank, rank));
      Eigen::VectorXd first = Eigen::VectorXd::Zero(rank);
      for (int k = 0; k < c; ++k)
        first += sinv_tc[k].transpose() * u.first.row(k).transpose();
      Eigen::VectorXd z = lambda_inv * first;
      Eigen::MatrixXd second = lambda_inv + z * z.transpose();
      for (int k = 0; k < c; ++k) {
        acc_a[k] += u.zeroth(k) * second;
        acc_b[k] += u.first.row(k).transpose() * z.transpose();
      }
    }
    for (int k = 0; k < c; ++k) {
      Eigen::LDLT<Eigen::MatrixXd> solver(acc_a[k]);
      tmat.middleRows(static_cast<Eigen::Index>(k) * d, d) =
          solver.solve(acc_b[k].transpose()).transpose();
    }
  }
  return tmat;
}

// --------------------------------------------------------------------------
// Model files
// --------------------------------------------------------------------------

VbModel read_vb_model(const std::string& ubm_path, const std::string& tmat_path) {
  std::ifstream in(ubm_path);
  if (!in) throw std::runtime_error("cannot open '" + ubm_path + "' for reading");
  // Three matrix blocks in sequence: weights (1 x C), means (C x d),
  // covariance diagonals (C x d).
  Eigen::MatrixXd weights = parse_matrix(in, "ubm weights");
  Eigen::MatrixXd means = parse_matrix(in, "ubm means");
  Eigen::MatrixXd covs = parse_matrix(in, "ubm covariances");
  if (weights.rows() != 1 || weights.cols() != means.rows() ||
      means.rows() != covs.rows() || means.cols() != covs.cols())
    throw std::runtime_error(ubm_path + ": inconsistent ubm block shapes");
  VbModel model;
  model.ubm.weights = weights.row(0).transpose();
  model.ubm.means = means;
  model.ubm.covariances = covs;

  std::ifstream tin(tmat_path);
  if (!tin) throw std::runtime_error("cannot open '" + tmat_path + "' for reading");
  model.tmat = parse_matrix(tin, "tmatrix");
  model.validate();
  return model;
}

void write_ubm(const Gmm& ubm, const std::string& path) {
  std::ostringstream out;
  emit_matrix(ubm.weights.transpose(), out);
  emit_matrix(ubm.means, out);
  emit_matrix(ubm.covariances, out);
  write_text_file(path, out.str());
}

void write_tmat(const Eigen::MatrixXd& tmat, const std::string& path) {
  std::ostringstream out;
  emit_matrix(tmat, out);
  write_text_file(path, out.str());
}

}  // namespace diar
