#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "pointwavelet/graph.hpp"

namespace pw {

// Trainable state of a learned spectral basis: q = normalize(c 1 + q_eps)
// seeds the orthogonal completion, lambda_i = tanh(lambda_theta_i) + 1 for i >= 2.
struct OrthoParam {
  double c = 1.0;
  Eigen::VectorXd q_eps;
  Eigen::VectorXd lambda_theta;  // length n - 1; lambda_1 is pinned to 0

  std::size_t size() const { return static_cast<std::size_t>(q_eps.size()); }

  // c = 1/sqrt(n), q_eps = 0, lambda_theta = 0.
  static OrthoParam initial(std::size_t n);
  // c = 1/sqrt(n); q_eps and lambda_theta drawn from N(0, eps_std^2) / N(0, theta_std^2).
  static OrthoParam random(std::size_t n, double eps_std, double theta_std, std::uint64_t seed);
  // Random c (either sign), a shared q_eps offset and random lambda_theta, so q stays
  // proportional to the all-ones vector and the synthesized Laplacian has zero row sums.
  static OrthoParam random_anchored(std::size_t n, double theta_std, std::uint64_t seed);
};

struct OrthoConfig {
  double beta = 0.05;
  double eps_orth = 1e-6;
};

// Completes a unit vector q to an orthogonal matrix whose first column is q.
// Throws MathError for non-unit q or q within 1e-6 of +-e_1.
Eigen::MatrixXd orthogonal_from_vector(const Eigen::VectorXd& q);

// normalize(q_ini + q_eps).
Eigen::VectorXd ortho_direction(const OrthoParam& p);

// Eigenvalues (0, sort(tanh(lambda_theta) + 1)).
Eigen::VectorXd learned_spectrum(const Eigen::VectorXd& lambda_theta);

SpectralBasis realize_basis(const OrthoParam& p);

// U Lambda U^T for a learned basis (first column constant). Rows sum to zero.
Eigen::MatrixXd synth_laplacian(const SpectralBasis& basis);

// ||q_eps||_1 and its subgradient (0 at 0).
double qeps_penalty(const OrthoParam& p);
Eigen::VectorXd qeps_penalty_gradient(const OrthoParam& p);

// ||I - U U^T||_F^2 and its gradient with respect to U.
double ortho_penalty(const Eigen::MatrixXd& u);
Eigen::MatrixXd ortho_penalty_gradient(const Eigen::MatrixXd& u);

bool is_orthogonal(const Eigen::MatrixXd& u, const OrthoConfig& config);

}  // namespace pw
