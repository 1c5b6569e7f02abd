#include "pointwavelet/ortho.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "pointwavelet/errors.hpp"

namespace pw {

OrthoParam OrthoParam::initial(std::size_t n) {
  if (n < 2) throw InputError("OrthoParam needs n >= 2");
  OrthoParam p;
  p.c = 1.0 / std::sqrt(static_cast<double>(n));
  p.q_eps = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  p.lambda_theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n - 1));
  return p;
}

OrthoParam OrthoParam::random(std::size_t n, double eps_std, double theta_std, std::uint64_t seed) {
  OrthoParam p = initial(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> eps(0.0, eps_std > 0.0 ? eps_std : 1.0);
  std::normal_distribution<double> theta(0.0, theta_std > 0.0 ? theta_std : 1.0);
  if (eps_std > 0.0)
    for (auto& v : p.q_eps) v = eps(rng);
  if (theta_std > 0.0)
    for (auto& v : p.lambda_theta) v = theta(rng);
  return p;
}

OrthoParam OrthoParam::random_anchored(std::size_t n, double theta_std, std::uint64_t seed) {
  OrthoParam p = initial(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> magnitude(0.5, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double root = std::sqrt(static_cast<double>(n));
  p.c = (rng() & 1 ? 1.0 : -1.0) * magnitude(rng) / root;
  p.q_eps.setConstant(0.2 * p.c * std::tanh(normal(rng)));
  for (auto& v : p.lambda_theta) v = theta_std * normal(rng);
  return p;
}

Eigen::MatrixXd orthogonal_from_vector(const Eigen::VectorXd& q) {
  const auto n = q.size();
  if (n < 1) throw InputError("orthogonal_from_vector: empty vector");
  if (!q.allFinite()) throw MathError("orthogonal_from_vector: non-finite entries");
  if (std::abs(q.norm() - 1.0) > 1e-10) throw MathError("orthogonal_from_vector: q is not a unit vector");
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
  e1(0) = 1.0;
  if (std::min((q - e1).norm(), (q + e1).norm()) < 1e-6)
    throw MathError("orthogonal_from_vector: q is (numerically) +-e_1, completion undefined");

  const double tail = q.tail(n - 1).squaredNorm();
  const double factor = (q(0) - 1.0) / tail;
  Eigen::MatrixXd u(n, n);
  u.col(0) = q;
  for (Eigen::Index j = 1; j < n; ++j) {
    u(0, j) = -q(j);
    for (Eigen::Index i = 1; i < n; ++i) u(i, j) = q(i) * q(j) * factor + (i == j ? 1.0 : 0.0);
  }
  return u;
}

Eigen::VectorXd ortho_direction(const OrthoParam& p) {
  if (p.q_eps.size() < 2) throw InputError("OrthoParam needs n >= 2");
  if (p.c == 0.0) throw MathError("OrthoParam: c must be nonzero");
  Eigen::VectorXd q = Eigen::VectorXd::Constant(p.q_eps.size(), p.c) + p.q_eps;
  const double norm = q.norm();
  if (!(norm > 0.0)) throw MathError("OrthoParam: q_ini + q_eps vanishes");
  return q / norm;
}

Eigen::VectorXd learned_spectrum(const Eigen::VectorXd& lambda_theta) {
  std::vector<double> values(static_cast<std::size_t>(lambda_theta.size()));
  for (Eigen::Index i = 0; i < lambda_theta.size(); ++i)
    values[static_cast<std::size_t>(i)] = std::tanh(lambda_theta(i)) + 1.0;
  std::sort(values.begin(), values.end());
  Eigen::VectorXd out(lambda_theta.size() + 1);
  out(0) = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i + 1)) = values[i];
  return out;
}

SpectralBasis realize_basis(const OrthoParam& p) {
  if (p.lambda_theta.size() + 1 != p.q_eps.size())
    throw InputError("OrthoParam: lambda_theta must have n - 1 entries");
  SpectralBasis basis;
  basis.eigenvectors = orthogonal_from_vector(ortho_direction(p));
  basis.eigenvalues = learned_spectrum(p.lambda_theta);
  basis.source = BasisSource::learned;
  return basis;
}

Eigen::MatrixXd synth_laplacian(const SpectralBasis& basis) {
  const auto& u = basis.eigenvectors;
  if (u.rows() == 0) throw InputError("synth_laplacian: empty basis");
  const double first = u(0, 0);
  if ((u.col(0).array() - first).abs().maxCoeff() > 1e-10)
    throw MathError("synth_laplacian: first basis vector is not constant");
  Eigen::MatrixXd lap = u * basis.eigenvalues.asDiagonal() * u.transpose();
  return 0.5 * (lap + lap.transpose());
}

double qeps_penalty(const OrthoParam& p) { return p.q_eps.lpNorm<1>(); }

Eigen::VectorXd qeps_penalty_gradient(const OrthoParam& p) {
  return p.q_eps.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

double ortho_penalty(const Eigen::MatrixXd& u) {
  if (u.rows() != u.cols()) throw InputError("ortho_penalty needs a square matrix");
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(u.rows(), u.cols()) - u * u.transpose();
  return r.squaredNorm();
}

Eigen::MatrixXd ortho_penalty_gradient(const Eigen::MatrixXd& u) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(u.rows(), u.cols()) - u * u.transpose();
  return -4.0 * r * u;
}

bool is_orthogonal(const Eigen::MatrixXd& u, const OrthoConfig& config) {
  return ortho_penalty(u) < config.eps_orth;
}

}  // namespace pw
