#include <doctest.h>

#include <cmath>
#include <random>

#include "pointwavelet/errors.hpp"
#include "pointwavelet/graph.hpp"
#include "support.hpp"

using namespace pw;

namespace {

Points line_points(std::initializer_list<double> xs) {
  Points p = Points::Zero(static_cast<Eigen::Index>(xs.size()), 3);
  Eigen::Index i = 0;
  for (double x : xs) p(i++, 0) = x;
  return p;
}

// Random symmetric graph with optional forced split into two blocks.
Eigen::MatrixXd random_adjacency(int n, double density, bool split, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  const int half = n / 2;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (split && ((i < half) != (j < half))) continue;
      if (u(rng) < density || j == i + 1) {
        if (split && j == half) continue;
        a(i, j) = a(j, i) = 0.1 + u(rng);
      }
    }
  return a;
}

}  // namespace

TEST_CASE("two points with sigma equal to their distance") {
  Points p = line_points({0.0, 2.0});
  auto g = build_knn_graph(p, 1, SigmaMode::fixed(2.0));
  CHECK(g.adjacency(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(g.adjacency(1, 0) == g.adjacency(0, 1));
  CHECK(g.adjacency(0, 0) == 0.0);
}

TEST_CASE("collinear nearest neighbours after union symmetrization") {
  auto g = build_knn_graph(line_points({0.0, 1.0, 2.0}), 1);
  CHECK(g.adjacency(0, 1) > 0.0);
  CHECK(g.adjacency(1, 2) > 0.0);
  CHECK(g.adjacency(0, 2) == 0.0);
}

TEST_CASE("k-NN ties go to the smaller index") {
  auto idx = knn_indices(line_points({0.0, -1.0, 1.0, 5.0}), 1);
  CHECK(idx[0][0] == 1);
}

TEST_CASE("k-NN argument and degenerate-sigma errors") {
  auto p = line_points({0.0, 1.0, 2.0});
  CHECK_THROWS_AS(build_knn_graph(p, 3), InputError);
  CHECK_THROWS_AS(build_knn_graph(p, 0), InputError);
  CHECK_THROWS_AS(build_knn_graph(line_points({1.0, 1.0, 1.0}), 1), MathError);
}

TEST_CASE("seeded 64-point cube graph connectivity matches union-find") {
  // Seed 64 was checked with the union-find oracle: one component.
  Points p = oracle::random_points(64, 64);
  auto g = build_knn_graph(p, 8);
  CHECK(oracle::union_find_components(g.adjacency) == 1);
  CHECK(count_components(g.adjacency) == 1);
}

TEST_CASE("normalized Laplacian examples") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  Eigen::MatrixXd l = normalized_laplacian(a);
  Eigen::MatrixXd want(2, 2);
  want << 1, -1, -1, 1;
  CHECK((l - want).cwiseAbs().maxCoeff() <= 1e-15);

  Eigen::MatrixXd path(3, 3);
  path << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  Eigen::VectorXd ev = oracle::eigenvalues(normalized_laplacian(path));
  CHECK(std::abs(ev(0)) <= 1e-9);
  CHECK(std::abs(ev(1) - 1.0) <= 1e-9);
  CHECK(std::abs(ev(2) - 2.0) <= 1e-9);

  std::mt19937_64 rng(3);
  Eigen::MatrixXd r = random_adjacency(20, 0.3, false, rng);
  Eigen::VectorXd half_degree = r.rowwise().sum().cwiseSqrt();
  CHECK((normalized_laplacian(r) * half_degree).norm() <= 1e-12);
  CHECK((normalized_laplacian(r) - oracle::normalized_laplacian(r)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("normalized Laplacian input validation") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1.0;
  try {
    normalized_laplacian(a);
    FAIL("expected isolated-vertex error");
  } catch (const MathError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  Eigen::MatrixXd asym(2, 2);
  asym << 0, 1, 0.5, 0;
  CHECK_THROWS_AS(normalized_laplacian(asym), InputError);
  Eigen::MatrixXd negative(2, 2);
  negative << 0, -1, -1, 0;
  CHECK_THROWS_AS(normalized_laplacian(negative), InputError);
  Eigen::MatrixXd loop(2, 2);
  loop << 1, 1, 1, 0;
  CHECK_THROWS_AS(normalized_laplacian(loop), InputError);
}

TEST_CASE("eigendecomposition closed forms") {
  Eigen::MatrixXd l(2, 2);
  l << 1, -1, -1, 1;
  auto b = eigendecompose(l);
  CHECK(std::abs(b.eigenvalues(0)) <= 1e-12);
  CHECK(std::abs(b.eigenvalues(1) - 2.0) <= 1e-12);
  CHECK(std::abs(std::abs(b.eigenvectors(0, 0)) - 1.0 / std::sqrt(2.0)) <= 1e-12);
  CHECK(std::abs(b.eigenvectors(0, 0) - b.eigenvectors(1, 0)) <= 1e-12);
  CHECK(b.source == BasisSource::computed);

  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  auto bi = eigendecompose(id);
  CHECK((bi.eigenvalues.array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK((bi.eigenvectors * bi.eigenvalues.asDiagonal() * bi.eigenvectors.transpose() - id).norm() <= 1e-12);

  Eigen::MatrixXd k4 = Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd want = oracle::eigenvalues(oracle::normalized_laplacian(k4));
  auto bk = eigendecompose(normalized_laplacian(k4));
  CHECK((bk.eigenvalues - want).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(std::abs(bk.eigenvalues(1) - 4.0 / 3.0) <= 1e-9);
  CHECK(fiedler_connectivity(bk, 1e-6));
}

TEST_CASE("eigendecomposition errors") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  CHECK_THROWS_AS(eigendecompose(asym), InputError);
  Eigen::MatrixXd l(3, 3);
  l << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  CHECK_THROWS_AS(eigendecompose(l, 1e-10, JacobiOptions{1e-13, 0}), MathError);
}

TEST_CASE("Fiedler connectivity diagnostics") {
  Eigen::MatrixXd two_edges = Eigen::MatrixXd::Zero(4, 4);
  two_edges(0, 1) = two_edges(1, 0) = 1.0;
  two_edges(2, 3) = two_edges(3, 2) = 1.0;
  CHECK_FALSE(fiedler_connectivity(eigendecompose(normalized_laplacian(two_edges)), 1e-6));
  Eigen::MatrixXd edge(2, 2);
  edge << 0, 1, 1, 0;
  CHECK(fiedler_connectivity(eigendecompose(normalized_laplacian(edge)), 1e-6));
}

TEST_CASE("random k-NN graphs satisfy the structural invariants") {
  for (int t = 0; t < 30; ++t) {
    const int n = 8 + 4 * t;
    auto g = build_knn_graph(oracle::random_points(n, 100 + t), 1 + t % 9);
    CHECK((g.adjacency - g.adjacency.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(g.adjacency.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK((g.degree - g.adjacency.rowwise().sum()).cwiseAbs().maxCoeff() <= 1e-12);
    auto b = eigendecompose(g.laplacian);
    CHECK(b.eigenvalues(0) >= -1e-9);
    CHECK(b.eigenvalues(n - 1) <= 2.0 + 1e-9);
    for (int i = 1; i < n; ++i) CHECK(b.eigenvalues(i) >= b.eigenvalues(i - 1));
    const double rel = (g.laplacian - b.eigenvectors * b.eigenvalues.asDiagonal() * b.eigenvectors.transpose()).norm() /
                       g.laplacian.norm();
    CHECK(rel <= 1e-10);
    CHECK((b.eigenvectors.transpose() * b.eigenvectors - Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-10 * n);
    CHECK((b.eigenvalues - oracle::eigenvalues(g.laplacian)).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("zero eigenvalue count equals component count") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd a = random_adjacency(10 + t, 0.2, t % 2 == 1, rng);
    auto b = eigendecompose(normalized_laplacian(a));
    int zeros = 0;
    for (Eigen::Index i = 0; i < b.eigenvalues.size(); ++i) zeros += std::abs(b.eigenvalues(i)) <= 1e-8;
    CHECK(zeros == oracle::union_find_components(a));
    CHECK(static_cast<int>(count_components(a)) == zeros);
  }
}

TEST_CASE("vertex relabeling permutes the Laplacian and keeps the spectrum") {
  Points p = oracle::random_points(24, 5);
  std::vector<int> perm(24);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(6));
  Points q(24, 3);
  for (int i = 0; i < 24; ++i) q.row(i) = p.row(perm[static_cast<std::size_t>(i)]);
  auto g = build_knn_graph(p, 5);
  auto h = build_knn_graph(q, 5);
  double worst = 0.0;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j)
      worst = std::max(worst, std::abs(h.laplacian(i, j) - g.laplacian(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)])));
  CHECK(worst <= 1e-12);
  CHECK((eigendecompose(g.laplacian).eigenvalues - eigendecompose(h.laplacian).eigenvalues).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("hop distances agree with a reference BFS") {
  auto g = build_knn_graph(oracle::random_points(40, 9), 3);
  auto hops = hop_distances(g.adjacency, 7);
  auto want = oracle::bfs_hops(g.adjacency, 7);
  for (std::size_t i = 0; i < hops.size(); ++i) CHECK(static_cast<int>(hops[i]) == want[i]);
  CHECK_THROWS_AS(hop_distances(g.adjacency, 40), InputError);
}
