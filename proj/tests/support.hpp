#pragma once

// Independent reference computations used by the tests. Nothing here calls the
// library routine that a test is checking.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pointwavelet/graph.hpp"
#include "pointwavelet/nn/ops.hpp"
#include "pointwavelet/nn/tensor.hpp"

namespace oracle {

inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& sym) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
}

// Both factors from the reference solver; columns ascending by eigenvalue.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> eigensystem(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  return {es.eigenvectors(), es.eigenvalues()};
}

inline Eigen::MatrixXd dense_inverse(const Eigen::MatrixXd& m) { return Eigen::FullPivLU<Eigen::MatrixXd>(m).inverse(); }

// D^{-1/2} A D^{-1/2} written out entry by entry.
inline Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  Eigen::VectorXd d = a.rowwise().sum();
  Eigen::MatrixXd l(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) l(i, j) = (i == j ? 1.0 : 0.0) - a(i, j) / std::sqrt(d(i) * d(j));
  return l;
}

inline std::vector<int> bfs_hops(const Eigen::MatrixXd& a, int source) {
  std::vector<int> hops(static_cast<std::size_t>(a.rows()), -1);
  std::vector<int> queue{source};
  hops[static_cast<std::size_t>(source)] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int v = queue[head];
    for (int u = 0; u < a.rows(); ++u)
      if (a(v, u) > 0.0 && hops[static_cast<std::size_t>(u)] < 0) {
        hops[static_cast<std::size_t>(u)] = hops[static_cast<std::size_t>(v)] + 1;
        queue.push_back(u);
      }
  }
  return hops;
}

inline int union_find_components(const Eigen::MatrixXd& a) {
  std::vector<int> parent(static_cast<std::size_t>(a.rows()));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (int i = 0; i < a.rows(); ++i)
    for (int j = i + 1; j < a.rows(); ++j)
      if (a(i, j) > 0.0) parent[find(i)] = find(j);
  int roots = 0;
  for (int i = 0; i < a.rows(); ++i) roots += find(i) == i;
  return roots;
}

inline Eigen::MatrixXd random_points(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd p(n, 3);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = u(rng);
  return p;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (auto& v : m.reshaped()) v = g(rng);
  return m;
}

}  // namespace oracle

namespace gradcheck {

using pw::nn::Tensor;

inline std::vector<double> normal_values(std::size_t count, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(count);
  for (auto& x : v) x = g(rng);
  return v;
}

inline Tensor param(pw::nn::Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  return Tensor::parameter(shape, normal_values(pw::nn::numel(shape), rng, scale));
}

// Reduces any output to a scalar with fixed random weights.
struct Projector {
  std::vector<double> weights;
  Tensor operator()(const Tensor& out) {
    if (weights.size() != out.numel()) {
      std::mt19937_64 rng(out.numel() * 7919 + 17);
      weights = normal_values(out.numel(), rng);
    }
    return pw::nn::sum(pw::nn::mul(out, Tensor::constant(out.shape(), weights)));
  }
};

// Worst relative error between reverse-mode and central-difference directional
// derivatives over `probes` random directions through all leaves.
inline double max_relative_error(const std::function<Tensor()>& f, std::vector<Tensor> leaves, std::uint64_t seed,
                                 int probes = 10, double h = 1e-5, double floor = 1e-6) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    std::vector<std::vector<double>> dirs;
    for (auto& leaf : leaves) {
      dirs.push_back(normal_values(leaf.numel(), rng));
      leaf.zero_grad();
    }
    Tensor out = f();
    out.backward();
    double analytic = 0.0;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      auto g = leaves[l].grad();
      for (std::size_t i = 0; i < g.size(); ++i) analytic += g[i] * dirs[l][i];
    }
    std::vector<std::vector<double>> saved;
    for (auto& leaf : leaves) saved.emplace_back(leaf.values().begin(), leaf.values().end());
    auto place = [&](double step) {
      for (std::size_t l = 0; l < leaves.size(); ++l) {
        auto w = leaves[l].mutable_values();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = saved[l][i] + step * dirs[l][i];
      }
    };
    double plus, minus;
    {
      pw::nn::NoGradGuard guard;
      place(h);
      plus = f().item();
      place(-h);
      minus = f().item();
      place(0.0);
    }
    const double numeric = (plus - minus) / (2 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

}  // namespace gradcheck
