#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "pointwavelet/pointcloud.hpp"

namespace pw {

// Symmetric weighted graph with its normalized Laplacian I - D^{-1/2} A D^{-1/2}.
struct LocalGraph {
  Eigen::MatrixXd adjacency;
  Eigen::VectorXd degree;
  Eigen::MatrixXd laplacian;

  std::size_t size() const { return static_cast<std::size_t>(adjacency.rows()); }
};

struct SigmaMode {
  enum class Kind { mean_knn_distance, fixed };
  Kind kind = Kind::mean_knn_distance;
  double value = 0.0;

  static SigmaMode mean_knn_distance() { return {}; }
  static SigmaMode fixed(double sigma) { return {Kind::fixed, sigma}; }
};

// k nearest neighbours of every point (self excluded), nearest first; equal
// distances resolve to the smaller index.
std::vector<std::vector<std::size_t>> knn_indices(const Points& points, std::size_t k);

// Union-symmetrized k-NN graph with Gaussian weights exp(-d^2 / sigma^2).
LocalGraph build_knn_graph(const Points& points, std::size_t k,
                           SigmaMode sigma = SigmaMode::mean_knn_distance());

// The sigma build_knn_graph would use for `points` under `mode`.
double resolve_sigma(const Points& points, std::size_t k, SigmaMode mode);

// Wraps an existing adjacency (validated) with degree and normalized Laplacian.
LocalGraph graph_from_adjacency(Eigen::MatrixXd adjacency);

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& adjacency);

enum class BasisSource { computed, learned };

// Orthonormal eigenvectors (columns) with ascending eigenvalues.
struct SpectralBasis {
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd eigenvalues;
  BasisSource source = BasisSource::computed;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

struct JacobiOptions {
  double relative_offdiag_tol = 1e-13;
  int max_sweeps = 100;
};

// Cyclic Jacobi eigendecomposition of a dense symmetric matrix. `tol` bounds
// the accepted asymmetry max|L - L^T| relative to max(1, max|L|).
SpectralBasis eigendecompose(const Eigen::MatrixXd& laplacian, double tol = 1e-10,
                             JacobiOptions options = {});

// lambda_2 > eps; a single-vertex basis counts as connected.
bool fiedler_connectivity(const SpectralBasis& basis, double eps);

// Connected components of the nonzero pattern of `adjacency` (union-find).
std::size_t count_components(const Eigen::MatrixXd& adjacency);

// Unweighted hop counts from `source` over nonzero adjacency entries;
// unreachable vertices get SIZE_MAX.
std::vector<std::size_t> hop_distances(const Eigen::MatrixXd& adjacency, std::size_t source);

}  // namespace pw
