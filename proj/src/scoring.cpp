#include "diar/scoring.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "diar/io.hpp"

namespace diar {

namespace {

// Symmetric eigendecomposition helpers. All covariance work goes through
// SelfAdjointEigenSolver so outputs are guaranteed real.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_sym(const Eigen::MatrixXd& m,
                                                       const std::string& what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed for " + what);
  return solver;
}

Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& m, double floor) {
  auto solver = eig_sym(m, "covariance");
  Eigen::VectorXd vals = solver.eigenvalues().cwiseMax(floor);
  return solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().transpose();
}

double logdet_spd(const Eigen::MatrixXd& m, const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(what + " is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

// --------------------------------------------------------------------------
// Whitening
// --------------------------------------------------------------------------

Whitener fit_whitener(const Eigen::MatrixXd& vectors) {
  const Eigen::Index n = vectors.rows();
  const Eigen::Index d = vectors.cols();
  if (n < 2)
    throw ValidationError("fit_whitener: need at least 2 vectors, got " +
                          std::to_string(n));
  Eigen::VectorXd mean = vectors.colwise().mean();
  Eigen::MatrixXd centered = vectors.rowwise() - mean.transpose();
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);

  double trace = cov.trace();
  if (!(trace > 0.0))
    throw ValidationError("fit_whitener: degenerate covariance (zero trace)");

  auto solver = eig_sym(cov, "whitening covariance");
  double scale = trace / static_cast<double>(d);
  if (solver.eigenvalues().minCoeff() < 1e-8 * scale) {
    cov += (1e-6 * scale) * Eigen::MatrixXd::Identity(d, d);
    solver = eig_sym(cov, "whitening covariance");
  }
  if (solver.eigenvalues().minCoeff() <= 0.0)
    throw ValidationError("fit_whitener: covariance not positive definite");

  Whitener w;
  w.mean = std::move(mean);
  Eigen::VectorXd inv_sqrt = solver.eigenvalues().array().rsqrt();
  w.transform =
      solver.eigenvectors() * inv_sqrt.asDiagonal() * solver.eigenvectors().transpose();
  return w;
}

Eigen::MatrixXd apply_whitener(const Whitener& w, const Eigen::MatrixXd& vectors,
                               bool length_normalize) {
  if (vectors.cols() != w.mean.size())
    throw ValidationError("apply_whitener: dimension mismatch");
  Eigen::MatrixXd out =
      (vectors.rowwise() - w.mean.transpose()) * w.transform.transpose();
  if (length_normalize) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      double norm = out.row(i).norm();
      if (norm > 0.0) out.row(i) /= norm;
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// PLDA
// --------------------------------------------------------------------------

void PldaModel::validate() const {
  const auto d = mean.size();
  if (between_cov.rows() != d || between_cov.cols() != d ||
      within_cov.rows() != d || within_cov.cols() != d)
    throw ValidationError("PLDA model dimensions disagree");
  if (!between_cov.isApprox(between_cov.transpose(), 1e-10) ||
      !within_cov.isApprox(within_cov.transpose(), 1e-10))
    throw ValidationError("PLDA covariances must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(within_cov);
  if (llt.info() != Eigen::Success)
    throw ValidationError("PLDA within covariance must be positive definite");
}

PldaModel fit_plda(const std::vector<std::string>& speaker_ids,
                   const Eigen::MatrixXd& vectors) {
  if (static_cast<Eigen::Index>(speaker_ids.size()) != vectors.rows())
    throw ValidationError("fit_plda: label/vector count mismatch");
  const Eigen::Index d = vectors.cols();

  std::map<std::string, std::vector<Eigen::Index>> classes;
  for (Eigen::Index i = 0; i < vectors.rows(); ++i)
    classes[speaker_ids[i]].push_back(i);
  const auto k = static_cast<double>(classes.size());
  if (classes.size() < 2)
    throw ValidationError("fit_plda: need at least 2 speakers, got " +
                          std::to_string(classes.size()));

  Eigen::VectorXd mean = vectors.colwise().mean();

  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd class_means(static_cast<Eigen::Index>(classes.size()), d);
  double total = 0.0;
  Eigen::Index ci = 0;
  for (const auto& [spk, rows] : classes) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t r = 0; r < rows.size(); ++r) x.row(r) = vectors.row(rows[r]);
    Eigen::VectorXd m = x.colwise().mean();
    class_means.row(ci++) = m.transpose();
    Eigen::MatrixXd c = x.rowwise() - m.transpose();
    within += c.transpose() * c;
    total += static_cast<double>(rows.size());
  }
  within /= total;

  // Covariance of class means, corrected for the within-class noise its
  // sample means carry, then floored to PSD.
  Eigen::MatrixXd cm = class_means.rowwise() - mean.transpose();
  Eigen::MatrixXd between = cm.transpose() * cm / k;
  double avg_class_size = total / k;
  between -= within / avg_class_size;
  between = clip_psd(between, 0.0);

  // Within must stay PD even for degenerate (identical-per-speaker) data.
  double floor = 1e-6 * std::max(1.0, within.trace() / static_cast<double>(d));
  within = clip_psd(within, floor);

  PldaModel model;
  model.mean = std::move(mean);
  model.between_cov = std::move(between);
  model.within_cov = std::move(within);
  model.validate();
  return model;
}

PldaScorer::PldaScorer(const PldaModel& model) {
  model.validate();
  mean_ = model.mean;
  const Eigen::Index d = model.dim();
  const Eigen::MatrixXd& b = model.between_cov;
  const Eigen::MatrixXd& w = model.within_cov;
  Eigen::MatrixXd a = b + w;  // marginal covariance

  // The joint same-speaker covariance [[A, B], [B, A]] block-diagonalizes
  // into A+B and A-B = W, so its inverse blocks are
  //   M = ((A+B)^-1 + W^-1) / 2,  N = ((A+B)^-1 - W^-1) / 2,
  // which keeps every factorization on a well-conditioned SPD matrix.
  Eigen::LDLT<Eigen::MatrixXd> a_ldlt(a);
  if (a_ldlt.info() != Eigen::Success)
    throw std::runtime_error("PLDA marginal covariance is singular");
  Eigen::MatrixXd a_inv = a_ldlt.solve(Eigen::MatrixXd::Identity(d, d));

  Eigen::LLT<Eigen::MatrixXd> sum_llt(a + b);
  Eigen::LLT<Eigen::MatrixXd> w_llt(w);
  if (sum_llt.info() != Eigen::Success || w_llt.info() != Eigen::Success)
    throw std::runtime_error("PLDA joint covariance is singular");
  Eigen::MatrixXd sum_inv = sum_llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd w_inv = w_llt.solve(Eigen::MatrixXd::Identity(d, d));

  q_ = a_inv - (sum_inv + w_inv) / 2.0;
  s_ = (w_inv - sum_inv) / 2.0;
  // Symmetrize away factorization noise; both are symmetric analytically.
  q_ = ((q_ + q_.transpose()) / 2.0).eval();
  s_ = ((s_ + s_.transpose()) / 2.0).eval();
  c0_ = logdet_spd(a, "B+W") -
        0.5 * (logdet_spd(a + b, "W+2B") + logdet_spd(w, "W"));
}

double PldaScorer::score(const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j) const {
  if (x_i.size() != mean_.size() || x_j.size() != mean_.size())
    throw ValidationError("plda_score: dimension mismatch");
  Eigen::VectorXd u = x_i - mean_;
  Eigen::VectorXd v = x_j - mean_;
  return c0_ + 0.5 * u.dot(q_ * u) + 0.5 * v.dot(q_ * v) + u.dot(s_ * v);
}

double plda_score(const PldaModel& model, const Eigen::VectorXd& x_i,
                  const Eigen::VectorXd& x_j) {
  return PldaScorer(model).score(x_i, x_j);
}

// --------------------------------------------------------------------------
// Cosine and matrix construction
// --------------------------------------------------------------------------

double cosine_score(const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j) {
  if (x_i.size() != x_j.size())
    throw ValidationError("cosine_score: dimension mismatch");
  double ni = x_i.norm();
  double nj = x_j.norm();
  if (ni == 0.0 || nj == 0.0)
    throw ValidationError("cosine_score: zero vector");
  return x_i.dot(x_j) / (ni * nj);
}

ScoreMatrix build_score_matrix(const EmbeddingSet& set, ScoreBackend backend,
                               const PldaModel* plda) {
  set.validate();
  const int n = set.size();
  ScoreMatrix m;
  m.values.resize(n, n);
  if (backend == ScoreBackend::kCosine) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = cosine_score(set.vectors.row(i), set.vectors.row(j));
        m.values(i, j) = s;
        m.values(j, i) = s;
      }
  } else {
    if (plda == nullptr)
      throw ValidationError("build_score_matrix: PLDA backend needs a model");
    PldaScorer scorer(*plda);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = scorer.score(set.vectors.row(i), set.vectors.row(j));
        m.values(i, j) = s;
        m.values(j, i) = s;
      }
  }
  m.validate();
  return m;
}

ScoreMatrix min_max_normalize(const ScoreMatrix& m, bool off_diagonal_only) {
  m.validate();
  const int n = m.size();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (off_diagonal_only && i == j) continue;
      lo = std::min(lo, m.values(i, j));
      hi = std::max(hi, m.values(i, j));
    }
  ScoreMatrix out;
  if (!(hi > lo)) {
    out.values = m.values;  // constant (or 1x1): nothing to rescale
    return out;
  }
  out.values = (m.values.array() - lo) / (hi - lo);
  if (off_diagonal_only)
    out.values = out.values.array().max(0.0).min(1.0);
  return out;
}

ScoreMatrix fuse_score_matrices(const std::vector<ScoreMatrix>& matrices,
                                const std::vector<double>& weights) {
  if (matrices.empty())
    throw ValidationError("fuse_score_matrices: no matrices");
  const int n = matrices[0].size();
  for (const ScoreMatrix& m : matrices)
    if (m.size() != n)
      throw ValidationError("fuse_score_matrices: size mismatch (" +
                            std::to_string(m.size()) + " vs " + std::to_string(n) + ")");
  std::vector<double> w = weights;
  if (w.empty()) w.assign(matrices.size(), 1.0);
  if (w.size() != matrices.size())
    throw ValidationError("fuse_score_matrices: weight count mismatch");
  double wsum = 0.0;
  for (double x : w) {
    if (x < 0.0) throw ValidationError("fuse_score_matrices: negative weight");
    wsum += x;
  }
  if (wsum <= 0.0) throw ValidationError("fuse_score_matrices: zero total weight");

  ScoreMatrix out;
  out.values = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < matrices.size(); ++k)
    out.values += (w[k] / wsum) * min_max_normalize(matrices[k]).values;
  return out;
}

ScoreMatrix symmetrize(const ScoreMatrix& m) {
  m.validate();
  ScoreMatrix out;
  out.values.resize(m.size(), m.size());
  for (int i = 0; i < m.size(); ++i) {
    out.values(i, i) = m.values(i, i);
    for (int j = i + 1; j < m.size(); ++j) {
      double v = (m.values(i, j) + m.values(j, i)) / 2.0;
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Model files
// --------------------------------------------------------------------------

PldaModel read_plda_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  Eigen::MatrixXd block = parse_matrix(in, "plda model");
  Eigen::Index d = block.cols();
  if (block.rows() != 2 * d + 1)
    throw std::runtime_error(path + ": plda model must have 1+2d rows");
  PldaModel model;
  model.mean = block.row(0).transpose();
  model.between_cov = block.middleRows(1, d);
  model.within_cov = block.middleRows(1 + d, d);
  model.validate();
  return model;
}

void write_plda_model(const PldaModel& model, const std::string& path) {
  Eigen::Index d = model.dim();
  Eigen::MatrixXd block(2 * d + 1, d);
  block.row(0) = model.mean.transpose();
  block.middleRows(1, d) = model.between_cov;
  block.middleRows(1 + d, d) = model.within_cov;
  std::ostringstream out;
  emit_matrix(block, out);
  write_text_file(path, out.str());
}

Whitener read_whitener(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  Eigen::MatrixXd block = parse_matrix(in, "whitener");
  Eigen::Index d = block.cols();
  if (block.rows() != d + 1)
    throw std::runtime_error(path + ": whitener must have 1+d rows");
  Whitener w;
  w.mean = block.row(0).transpose();
  w.transform = block.bottomRows(d);
  return w;
}

void write_whitener(const Whitener& w, const std::string& path) {
  Eigen::Index d = w.dim();
  Eigen::MatrixXd block(d + 1, d);
  block.row(0) = w.mean.transpose();
  block.bottomRows(d) = w.transform;
  std::ostringstream out;
  emit_matrix(block, out);
  write_text_file(path, out.str());
}

}  // namespace diar
