#include "pointwavelet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pointwavelet/errors.hpp"

namespace pw {

std::vector<std::vector<std::size_t>> knn_indices(const Points& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1 || k >= n) {
    throw InputError("k-NN requires 1 <= k < n (k = " + std::to_string(k) +
                     ", n = " + std::to_string(n) + ")");
  }
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dist[j] = {(points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j)))
                     .squaredNorm(),
                 j};
    }
    dist[i].first = std::numeric_limits<double>::infinity();
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    out[i].reserve(k);
    for (std::size_t r = 0; r < k; ++r) out[i].push_back(dist[r].second);
  }
  return out;
}

double resolve_sigma(const Points& points, std::size_t k, SigmaMode mode) {
  if (mode.kind == SigmaMode::Kind::fixed) {
    if (!(mode.value > 0.0) || !std::isfinite(mode.value)) throw InputError("fixed sigma must be positive");
    return mode.value;
  }
  auto nbrs = knn_indices(points, k);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    for (auto j : nbrs[i]) {
      total += (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
      ++count;
    }
  }
  double sigma = total / static_cast<double>(count);
  if (!(sigma > 0.0)) throw MathError("mean k-NN distance is zero (duplicate points)");
  return sigma;
}

LocalGraph build_knn_graph(const Points& points, std::size_t k, SigmaMode mode) {
  const double sigma = resolve_sigma(points, k, mode);
  const auto nbrs = knn_indices(points, k);
  const auto n = static_cast<Eigen::Index>(points.rows());
  Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(n, n);
  const double inv_sigma2 = 1.0 / (sigma * sigma);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (auto jj : nbrs[static_cast<std::size_t>(i)]) {
      auto j = static_cast<Eigen::Index>(jj);
      double w = std::exp(-(points.row(i) - points.row(j)).squaredNorm() * inv_sigma2);
      adjacency(i, j) = w;
      adjacency(j, i) = w;
    }
  }
  return graph_from_adjacency(std::move(adjacency));
}

LocalGraph graph_from_adjacency(Eigen::MatrixXd adjacency) {
  LocalGraph g;
  g.laplacian = normalized_laplacian(adjacency);
  g.degree = adjacency.rowwise().sum();
  g.adjacency = std::move(adjacency);
  return g;
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& adjacency) {
  const auto n = adjacency.rows();
  if (n == 0 || adjacency.cols() != n) throw InputError("adjacency must be a non-empty square matrix");
  const double scale = std::max(1.0, adjacency.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw InputError("adjacency has a self-loop at vertex " + std::to_string(i));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(adjacency(i, j) >= 0.0) || !std::isfinite(adjacency(i, j)))
        throw InputError("adjacency must be finite and nonnegative");
      if (std::abs(adjacency(i, j) - adjacency(j, i)) > 1e-12 * scale)
        throw InputError("adjacency is not symmetric");
    }
  }
  Eigen::VectorXd degree = adjacency.rowwise().sum();
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(degree(i) > 0.0)) throw MathError("isolated vertex " + std::to_string(i) + " has zero degree");
    inv_sqrt(i) = 1.0 / std::sqrt(degree(i));
  }
  Eigen::MatrixXd lap = -(inv_sqrt.asDiagonal() * adjacency * inv_sqrt.asDiagonal());
  lap.diagonal().array() += 1.0;
  // Exact symmetry; the two triangles can differ in the last ulp otherwise.
  lap = 0.5 * (lap + lap.transpose()).eval();
  return lap;
}

SpectralBasis eigendecompose(const Eigen::MatrixXd& laplacian, double tol, JacobiOptions options) {
  const auto n = laplacian.rows();
  if (n == 0 || laplacian.cols() != n) throw InputError("eigendecompose needs a non-empty square matrix");
  if (!laplacian.allFinite()) throw InputError("eigendecompose input has non-finite entries");
  const double scale = std::max(1.0, laplacian.cwiseAbs().maxCoeff());
  if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > tol * scale)
    throw InputError("eigendecompose input is not symmetric");

  Eigen::MatrixXd a = 0.5 * (laplacian + laplacian.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double threshold = options.relative_offdiag_tol * a.norm();

  auto offdiag_norm = [&] {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = offdiag_norm() <= threshold;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation annihilating a(p,q); t is the smaller root of t^2 + 2 tau t - 1 = 0.
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = offdiag_norm() <= threshold;
  }
  if (!converged) {
    throw MathError("Jacobi eigensolver did not converge within " + std::to_string(options.max_sweeps) +
                    " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return a(l, l) < a(r, r); });
  SpectralBasis basis;
  basis.eigenvalues.resize(n);
  basis.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis.eigenvalues(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    basis.eigenvectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  basis.source = BasisSource::computed;
  return basis;
}

bool fiedler_connectivity(const SpectralBasis& basis, double eps) {
  if (basis.eigenvalues.size() < 2) return true;
  return basis.eigenvalues(1) > eps;
}

std::size_t count_components(const Eigen::MatrixXd& adjacency) {
  const auto n = static_cast<std::size_t>(adjacency.rows());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
        auto ri = find(i), rj = find(j);
        if (ri != rj) {
          parent[ri] = rj;
          --components;
        }
      }
    }
  }
  return components;
}

std::vector<std::size_t> hop_distances(const Eigen::MatrixXd& adjacency, std::size_t source) {
  const auto n = static_cast<std::size_t>(adjacency.rows());
  if (source >= n) throw InputError("vertex " + std::to_string(source) + " out of range for " + std::to_string(n) + " vertices");
  std::vector<std::size_t> hops(n, std::numeric_limits<std::size_t>::max());
  std::vector<std::size_t> frontier{source};
  hops[source] = 0;
  for (std::size_t head = 0; head < frontier.size(); ++head) {
    const auto v = frontier[head];
    for (std::size_t u = 0; u < n; ++u) {
      if (adjacency(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) == 0.0 ||
          hops[u] != std::numeric_limits<std::size_t>::max())
        continue;
      hops[u] = hops[v] + 1;
      frontier.push_back(u);
    }
  }
  return hops;
}

}  // namespace pw
