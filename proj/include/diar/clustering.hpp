#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "diar/annotation.hpp"

namespace diar {

// Partition of n items into k non-empty clusters, labels in [0, k) numbered
// by first occurrence.
struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;

  void validate() const;
};

// Agglomerative hierarchical clustering with average linkage: repeatedly
// merge the cluster pair with the highest mean pairwise score until that
// maximum drops below the threshold. Ties break to the smallest index pair.
ClusterAssignment ahc(const ScoreMatrix& scores, double threshold);

struct SpectralConfig {
  double eig_threshold = 0.5;  // k = #eigenvalues below this
  int kmeans_restarts = 10;
  int kmeans_max_iters = 300;
  std::uint64_t rng_seed = 0;
  bool row_normalize = false;  // normalize eigenvector rows before k-means
  // Min-max map scores to [0,1] before zeroing the diagonal. Off by default
  // only for inputs already in [0,1].
  bool minmax_preprocess = true;

  void validate() const;
};

// Symmetric normalized graph Laplacian D^-1/2 (D - S) D^-1/2 of a
// non-negative symmetric affinity matrix with zero diagonal. Zero-degree
// rows use 0 for the D^-1/2 entry. Eigenvalues lie in [0, 2].
Eigen::MatrixXd normalized_laplacian(const ScoreMatrix& affinity);

// Spectral clustering:
//   a) min-max scores to [0,1] affinities, zero the diagonal;
//   b) normalized Laplacian;
//   c) symmetric eigendecomposition;
//   d) k = count of eigenvalues below eig_threshold, clamped to [1, n];
//   e) P = eigenvectors of the k smallest eigenvalues as columns;
//   f) k-means over the rows of P (seeded restarts, best inertia kept).
ClusterAssignment spectral_cluster(const ScoreMatrix& scores,
                                   const SpectralConfig& cfg);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
};

// Lloyd iterations with distance-weighted seeding; deterministic for a
// given seed. Empty clusters are refilled with the point farthest from its
// centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int max_iters = 300);

KMeansResult kmeans_restarts(const Eigen::MatrixXd& points, int k,
                             std::uint64_t seed, int restarts,
                             int max_iters = 300);

}  // namespace diar
