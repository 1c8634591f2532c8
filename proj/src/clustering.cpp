#include "diar/clustering.hpp"

#include <algorithm>
#include <limits>

#include "diar/rng.hpp"
#include "diar/scoring.hpp"

namespace diar {

void ClusterAssignment::validate() const {
  if (k < 1) throw ValidationError("cluster assignment must have k >= 1");
  std::vector<int> counts(k, 0);
  for (int l : labels) {
    if (l < 0 || l >= k) throw ValidationError("cluster label out of range");
    ++counts[l];
  }
  for (int c : counts)
    if (c == 0) throw ValidationError("empty cluster in assignment");
}

namespace {

// Relabel to [0, k) by order of first occurrence.
ClusterAssignment compact_labels(const std::vector<int>& raw) {
  ClusterAssignment out;
  out.labels.resize(raw.size());
  std::vector<int> remap;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    int id = raw[i];
    int found = -1;
    for (std::size_t j = 0; j < remap.size(); ++j)
      if (remap[j] == id) {
        found = static_cast<int>(j);
        break;
      }
    if (found < 0) {
      found = static_cast<int>(remap.size());
      remap.push_back(id);
    }
    out.labels[i] = found;
  }
  out.k = static_cast<int>(remap.size());
  return out;
}

}  // namespace

// --------------------------------------------------------------------------
// AHC
// --------------------------------------------------------------------------

ClusterAssignment ahc(const ScoreMatrix& scores, double threshold) {
  scores.validate();
  if (!scores.is_symmetric())
    throw ValidationError("ahc: score matrix must be symmetric");
  const int n = scores.size();

  // Active clusters; cross[i][j] holds the exact sum of pairwise scores
  // between members of clusters i and j, so the average linkage is
  // sum / (size_i * size_j).
  std::vector<std::vector<int>> members(n);
  std::vector<std::vector<double>> cross(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) members[i] = {i};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cross[i][j] = scores.values(i, j);

  while (members.size() > 1) {
    const int m = static_cast<int>(members.size());
    double best = -std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        double avg = cross[i][j] / (static_cast<double>(members[i].size()) *
                                    static_cast<double>(members[j].size()));
        if (avg > best) {
          best = avg;
          bi = i;
          bj = j;
        }
      }
    if (best < threshold) break;

    // Merge bj into bi; cross sums add exactly.
    for (int t = 0; t < m; ++t) {
      if (t == bi || t == bj) continue;
      cross[bi][t] += cross[bj][t];
      cross[t][bi] = cross[bi][t];
    }
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    members.erase(members.begin() + bj);
    for (auto& row : cross) row.erase(row.begin() + bj);
    cross.erase(cross.begin() + bj);
  }

  std::vector<int> raw(n, -1);
  for (std::size_t c = 0; c < members.size(); ++c)
    for (int item : members[c]) raw[item] = static_cast<int>(c);
  return compact_labels(raw);
}

// --------------------------------------------------------------------------
// Spectral clustering
// --------------------------------------------------------------------------

void SpectralConfig::validate() const {
  if (eig_threshold <= 0.0 || eig_threshold > 2.0)
    throw ValidationError("eig_threshold must be in (0, 2]");
  if (kmeans_restarts < 1) throw ValidationError("kmeans_restarts must be >= 1");
  if (kmeans_max_iters < 1) throw ValidationError("kmeans_max_iters must be >= 1");
}

Eigen::MatrixXd normalized_laplacian(const ScoreMatrix& affinity) {
  affinity.validate();
  const int n = affinity.size();
  if (affinity.values.minCoeff() < 0.0)
    throw ValidationError("normalized_laplacian: negative affinity entry");
  Eigen::VectorXd degree = affinity.values.rowwise().sum();
  Eigen::VectorXd dinv_sqrt(n);
  for (int i = 0; i < n; ++i)
    dinv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
  Eigen::MatrixXd lap = degree.asDiagonal();
  lap -= affinity.values;
  return dinv_sqrt.asDiagonal() * lap * dinv_sqrt.asDiagonal();
}

ClusterAssignment spectral_cluster(const ScoreMatrix& scores,
                                   const SpectralConfig& cfg) {
  cfg.validate();
  scores.validate();
  if (!scores.is_symmetric())
    throw ValidationError("spectral_cluster: score matrix must be symmetric");
  const int n = scores.size();
  if (n == 1) return ClusterAssignment{{0}, 1};

  // Step a: non-negative affinities, zero diagonal.
  ScoreMatrix affinity =
      cfg.minmax_preprocess ? min_max_normalize(scores, /*off_diagonal_only=*/true)
                            : scores;
  if (affinity.values.minCoeff() < 0.0)
    throw ValidationError("spectral_cluster: scores must be non-negative; "
                          "enable minmax_preprocess");
  affinity.values.diagonal().setZero();

  // Steps b, c.
  Eigen::MatrixXd lap = normalized_laplacian(affinity);
  lap = ((lap + lap.transpose()) / 2.0).eval();  // exact symmetry for the solver
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("spectral_cluster: eigendecomposition failed");

  // Step d: model selection by counting small eigenvalues.
  int k = 0;
  for (int i = 0; i < n; ++i)
    if (solver.eigenvalues()(i) < cfg.eig_threshold) ++k;
  k = std::clamp(k, 1, n);
  if (k == 1) return ClusterAssignment{std::vector<int>(n, 0), 1};

  // Step e: eigenvectors of the k smallest eigenvalues as columns.
  Eigen::MatrixXd p = solver.eigenvectors().leftCols(k);
  if (cfg.row_normalize) {
    for (int i = 0; i < n; ++i) {
      double norm = p.row(i).norm();
      if (norm > 0.0) p.row(i) /= norm;
    }
  }

  // Step f.
  KMeansResult km = kmeans_restarts(p, k, cfg.rng_seed, cfg.kmeans_restarts,
                                    cfg.kmeans_max_iters);
  return compact_labels(km.labels);
}

// --------------------------------------------------------------------------
// k-means
// --------------------------------------------------------------------------

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iters) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k > n) throw ValidationError("kmeans: k must be in [1, n]");
  Rng rng(seed);

  // Distance-weighted seeding.
  Eigen::MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(rng.uniform_int(0, n - 1));
  std::vector<double> dist2(n);
  for (int c = 1; c < k; ++c) {
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j)
        best = std::min(best, (points.row(i) - centroids.row(j)).squaredNorm());
      dist2[i] = best;
    }
    centroids.row(c) = points.row(static_cast<int>(rng.categorical(dist2)));
  }

  std::vector<int> labels(n, -1);
  std::vector<int> counts(k, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      int best_c = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      if (labels[i] != best_c) {
        labels[i] = best_c;
        changed = true;
      }
      ++counts[best_c];
    }

    // Refill empty clusters with the worst-fit point.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      int worst = -1;
      double worst_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[labels[i]] <= 1) continue;
        double d = (points.row(i) - centroids.row(labels[i])).squaredNorm();
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      if (worst >= 0) {
        --counts[labels[worst]];
        labels[worst] = c;
        ++counts[c];
        changed = true;
      }
    }

    centroids.setZero();
    for (int i = 0; i < n; ++i) centroids.row(labels[i]) += points.row(i);
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centroids.row(c) /= static_cast<double>(counts[c]);

    if (!changed) break;
  }

  KMeansResult result;
  result.labels = std::move(labels);
  result.centroids = std::move(centroids);
  result.inertia = 0.0;
  for (int i = 0; i < n; ++i)
    result.inertia +=
        (points.row(i) - result.centroids.row(result.labels[i])).squaredNorm();
  return result;
}

KMeansResult kmeans_restarts(const Eigen::MatrixXd& points, int k,
                             std::uint64_t seed, int restarts, int max_iters) {
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KMeansResult res = kmeans(points, k, seed + static_cast<std::uint64_t>(r),
                              max_iters);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

}  // namespace diar
