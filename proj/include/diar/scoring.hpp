#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diar/annotation.hpp"

namespace diar {

// Affine transform that maps the fitting data to identity covariance.
struct Whitener {
  Eigen::VectorXd mean;
  Eigen::MatrixXd transform;  // inverse principal square root of the fit covariance

  int dim() const { return static_cast<int>(mean.size()); }
};

// Fits on the rows of `vectors` (n x d). Uses the unbiased sample
// covariance; a ridge of 1e-6 * trace/d is added when the covariance is
// near-singular. Fully degenerate data (n < 2 or zero trace) errors.
Whitener fit_whitener(const Eigen::MatrixXd& vectors);

// Rows transformed by W (x - mean); optionally projected to unit norm.
Eigen::MatrixXd apply_whitener(const Whitener& w, const Eigen::MatrixXd& vectors,
                               bool length_normalize = false);

// Two-covariance PLDA: between-speaker covariance B (PSD) and
// within-speaker covariance W (PD) around a global mean.
struct PldaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd between_cov;
  Eigen::MatrixXd within_cov;

  int dim() const { return static_cast<int>(mean.size()); }
  void validate() const;
};

// Closed-form moment estimates: global mean, pooled within-class covariance,
// and covariance of class means corrected by within/(average class size),
// floored to PSD. Requires at least two speakers.
PldaModel fit_plda(const std::vector<std::string>& speaker_ids,
                   const Eigen::MatrixXd& vectors);

// Precomputed same/different-speaker likelihood-ratio scorer. The score is
//   log p(x_i, x_j | same) - log p(x_i | .) p(x_j | .)
// under the two-covariance model, where the marginal covariance is B + W
// and the joint same-speaker cross-covariance is B.
//
// With A = B + W and the block inverse of [[A, B], [B, A]]:
//   M = (A - B A^-1 B)^-1,  N = -A^-1 B M,
//   score(u, v) = c0 + 1/2 u'Qu + 1/2 v'Qv + u'Sv
//   Q = A^-1 - M, S = -N, c0 = logdet A - (logdet(A+B) + logdet(A-B)) / 2,
// with u, v the mean-centered inputs.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel& model);

  double score(const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j) const;
  int dim() const { return static_cast<int>(mean_.size()); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd s_;
  double c0_ = 0.0;
};

double plda_score(const PldaModel& model, const Eigen::VectorXd& x_i,
                  const Eigen::VectorXd& x_j);

// Cosine similarity in [-1, 1]. Zero vectors error.
double cosine_score(const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j);

enum class ScoreBackend { kCosine, kPlda };

ScoreMatrix build_score_matrix(const EmbeddingSet& set, ScoreBackend backend,
                               const PldaModel* plda = nullptr);

// Min-max normalizes each matrix to [0, 1] (constant matrices pass through
// unchanged), then takes the elementwise weighted mean. Weights default to
// uniform.
ScoreMatrix fuse_score_matrices(const std::vector<ScoreMatrix>& matrices,
                                const std::vector<double>& weights = {});

// (S + S') / 2, exactly symmetric.
ScoreMatrix symmetrize(const ScoreMatrix& m);

// Maps scores to [0, 1] by min-max. When `off_diagonal_only`, the range is
// taken over off-diagonal entries (self-scores would otherwise dominate) and
// results are clipped to [0, 1]. Constant input passes through.
ScoreMatrix min_max_normalize(const ScoreMatrix& m, bool off_diagonal_only = false);

// Model file round trips (format documented in the README).
PldaModel read_plda_model(const std::string& path);
void write_plda_model(const PldaModel& model, const std::string& path);
Whitener read_whitener(const std::string& path);
void write_whitener(const Whitener& w, const std::string& path);

}  // namespace diar
