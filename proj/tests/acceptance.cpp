// Runs the ten acceptance criteria and prints one [PASS]/[FAIL] line for each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "pointwavelet/errors.hpp"
#include "pointwavelet/formats.hpp"
#include "pointwavelet/graph.hpp"
#include "pointwavelet/nn/checkpoint.hpp"
#include "pointwavelet/nn/train.hpp"
#include "pointwavelet/ortho.hpp"
#include "pointwavelet/wavelets.hpp"
#include "support.hpp"

using namespace pw;
using namespace pw::nn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome orthogonal_construction() {
  std::mt19937_64 rng(1);
  double worst_ratio = 0.0;
  bool first_column = true;
  for (int n : {2, 4, 16, 64, 256}) {
    for (int t = 0; t < 1000; ++t) {
      Eigen::VectorXd q = oracle::random_matrix(n, 1, rng);
      q /= q.norm();
      Eigen::MatrixXd u = orthogonal_from_vector(q);
      Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
      r.noalias() -= u * u.transpose();
      worst_ratio = std::max(worst_ratio, r.cwiseAbs().maxCoeff() / (1e-12 * n));
      first_column = first_column && (u.col(0) - q).cwiseAbs().maxCoeff() == 0.0;
    }
  }
  int rejected = 0;
  for (int n : {2, 4, 16, 64, 256})
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
      e1(0) = sign;
      try {
        orthogonal_from_vector(e1);
      } catch (const MathError&) {
        ++rejected;
      }
    }
  return {worst_ratio <= 1.0 && first_column && rejected == 10,
          fmt("max|I-UU^T| / (1e-12 n) = %.3g, +-e1 rejected %g/10", worst_ratio, rejected)};
}

Outcome theorem_synthesis() {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> size(2, 64);
  double asym = 0.0, min_eig = 0.0, row_sum = 0.0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto basis = realize_basis(OrthoParam::random_anchored(size(rng), 1.0, 1000 + t));
    Eigen::MatrixXd l = synth_laplacian(basis);
    asym = std::max(asym, (l - l.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, oracle::eigenvalues(l).minCoeff());
    row_sum = std::max(row_sum, l.rowwise().sum().cwiseAbs().maxCoeff());
  }
  return {asym <= 1e-10 && min_eig >= -1e-10 && row_sum <= 1e-10,
          fmt("asymmetry %.3g, min eigenvalue %.3g, max |row sum| %.3g", asym, min_eig, row_sum)};
}

Eigen::MatrixXd dense_stack(const Eigen::MatrixXd& lap, const KernelPair& k, const std::vector<double>& s) {
  auto [u, lam] = oracle::eigensystem(lap);
  const auto n = lap.rows();
  Eigen::MatrixXd stack(n * static_cast<Eigen::Index>(s.size() + 1), n);
  for (std::size_t j = 0; j <= s.size(); ++j) {
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = j == 0 ? k.h(lam(i)) : k.g(s[j - 1] * lam(i));
    stack.middleRows(n * static_cast<Eigen::Index>(j), n) = u * d.asDiagonal() * u.transpose();
  }
  return stack;
}

Outcome wavelet_reconstruction() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(4, 64);
  const std::size_t js[] = {1, 3, 5};
  double recon = 0.0, gram = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int n = size(rng);
    auto g = build_knn_graph(oracle::random_points(n, 3000 + static_cast<std::uint64_t>(t)),
                             static_cast<std::size_t>(std::min(n - 1, 2 + t % 6)));
    auto kernels = t % 2 == 0 ? mexican_hat_kernels() : meyer_kernels();
    auto scales = default_scales(kernels, js[(t / 2) % 3]);
    auto frame = build_frame(eigendecompose(g.laplacian), kernels, scales);
    Eigen::MatrixXd f = oracle::random_matrix(n, 2, rng);
    Eigen::MatrixXd back = inverse_wavelet_transform(frame, wavelet_transform(frame, f));
    recon = std::max(recon, (back - f).norm() / f.norm());
    if (n <= 16) {
      Eigen::MatrixXd stack = dense_stack(g.laplacian, kernels, scales);
      Eigen::MatrixXd reference = oracle::dense_inverse(stack.transpose() * stack);
      gram = std::max(gram, (frame.inverse_gram() - reference).norm() / reference.norm());
    }
  }
  return {recon <= 1e-8 && gram <= 1e-8, fmt("max reconstruction error %.3g, closed form vs dense inverse %.3g", recon, gram)};
}

Outcome frame_condition() {
  auto k = mexican_hat_kernels();
  auto report = frame_check(k, default_scales(k, 5), uniform_grid(2.0, 1000));
  // Grid minimum recorded on first run; the grid places it at lambda = 2.
  constexpr double kPinned = 0.20305926816182035;
  const bool pinned = std::abs(report.min_p - kPinned) <= 1e-14;
  return {report.min_p > 0.0 && pinned, fmt("min p = %.17g at lambda = %g", report.min_p, report.argmin_lambda)};
}

Outcome eigendecomposition() {
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 8 + (t * 37) % 121;
    auto g = build_knn_graph(oracle::random_points(n, 5000 + static_cast<std::uint64_t>(t)), 3 + t % 8);
    auto b = eigendecompose(g.laplacian);
    Eigen::MatrixXd r = g.laplacian - b.eigenvectors * b.eigenvalues.asDiagonal() * b.eigenvectors.transpose();
    worst = std::max(worst, r.norm() / g.laplacian.norm());
  }
  Eigen::MatrixXd k4 = Eigen::MatrixXd::Ones(4, 4) - Eigen::MatrixXd::Identity(4, 4);
  Eigen::MatrixXd p3(3, 3);
  p3 << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  Eigen::VectorXd ek = eigendecompose(normalized_laplacian(k4)).eigenvalues;
  Eigen::VectorXd ep = eigendecompose(normalized_laplacian(p3)).eigenvalues;
  const double k4_err = (ek - Eigen::Vector4d(0, 4.0 / 3, 4.0 / 3, 4.0 / 3)).cwiseAbs().maxCoeff();
  const double p3_err = (ep - Eigen::Vector3d(0, 1, 2)).cwiseAbs().maxCoeff();
  // The closed forms above agree with the reference solver too.
  const double oracle_gap = std::max((ek - oracle::eigenvalues(oracle::normalized_laplacian(k4))).cwiseAbs().maxCoeff(),
                                     (ep - oracle::eigenvalues(oracle::normalized_laplacian(p3))).cwiseAbs().maxCoeff());
  return {worst <= 1e-10 && k4_err <= 1e-9 && p3_err <= 1e-9 && oracle_gap <= 1e-9,
          fmt("max relative residual %.3g, K4 error %.3g, P3 error %.3g", worst, k4_err, p3_err)};
}

Outcome chebyshev_variant() {
  auto g = build_knn_graph(oracle::random_points(32, 32), 6);
  auto k = mexican_hat_kernels();
  auto s = default_scales(k, 5);
  auto frame = build_frame(eigendecompose(g.laplacian), k, s);
  std::mt19937_64 rng(6);
  Eigen::MatrixXd f = oracle::random_matrix(32, 3, rng);
  auto exact = wavelet_transform(frame, f);
  auto deviation = [&](std::size_t K) {
    auto approx = chebyshev_wavelet_transform(fit_chebyshev_bank(k, s, 2.0, K), g.laplacian, f);
    double d = 0.0;
    for (std::size_t j = 0; j < exact.coeffs.size(); ++j)
      d = std::max(d, (approx.coeffs[j] - exact.coeffs[j]).cwiseAbs().maxCoeff());
    return d;
  };
  const double d10 = deviation(10), d50 = deviation(50);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(8);
  theta(0) = 1.0;
  const bool identity = (chebyshev_filter(g.laplacian, 2.0, theta, f) - f).cwiseAbs().maxCoeff() == 0.0;
  return {10.0 * d50 <= d10 && identity, fmt("K=10 deviation %.3g, K=50 deviation %.3g, identity exact %g", d10, d50, identity)};
}

Outcome gradient_integrity() {
  std::mt19937_64 rng(7);
  using gradcheck::param;
  auto projected = [](std::function<Tensor()> f) {
    auto proj = std::make_shared<gradcheck::Projector>();
    return [f, proj] { return (*proj)(f()); };
  };
  auto a = param({3, 4}, rng), b = param({4, 3}, rng), c = param({3, 4}, rng), bias = param({4}, rng);
  auto x3 = param({2, 3, 4}, rng), y3 = param({2, 4, 2}, rng), v = param({5}, rng);
  auto kinked = Tensor::parameter({3, 4}, [&] {
    auto w = gradcheck::normal_values(12, rng);
    for (auto& e : w) e += e >= 0 ? 0.1 : -0.1;
    return w;
  }());
  std::vector<std::pair<const char*, std::pair<std::function<Tensor()>, std::vector<Tensor>>>> cases = {
      {"matmul", {projected([&] { return matmul(a, b); }), {a, b}}},
      {"bmm", {projected([&] { return bmm(x3, y3); }), {x3, y3}}},
      {"transpose", {projected([&] { return transpose(a); }), {a}}},
      {"add", {projected([&] { return add(a, c); }), {a, c}}},
      {"sub", {projected([&] { return sub(a, c); }), {a, c}}},
      {"mul", {projected([&] { return mul(a, c); }), {a, c}}},
      {"add_bias", {projected([&] { return add_bias(a, bias); }), {a, bias}}},
      {"mul_bias", {projected([&] { return mul_bias(a, bias); }), {a, bias}}},
      {"scale", {projected([&] { return scale(a, 0.7); }), {a}}},
      {"add_scalar", {projected([&] { return add_scalar(a, 0.7); }), {a}}},
      {"tanh", {projected([&] { return tanh(a); }), {a}}},
      {"exp", {projected([&] { return exp(a); }), {a}}},
      {"relu", {projected([&] { return relu(kinked); }), {kinked}}},
      {"map", {projected([&] { return map(a, [](double t) { return t * t * t; }, [](double t) { return 3 * t * t; }); }), {a}}},
      {"softmax", {projected([&] { return softmax(a); }), {a}}},
      {"layer_norm", {projected([&] { return layer_norm(a, bias, bias); }), {a, bias}}},
      {"concat", {projected([&] { return concat({a, c}, 0); }), {a, c}}},
      {"reshape", {projected([&] { return reshape(a, {2, 6}); }), {a}}},
      {"permute", {projected([&] { return permute(x3, {1, 2, 0}); }), {x3}}},
      {"max_pool", {projected([&] { return max_pool(x3, 2); }), {x3}}},
      {"gather", {projected([&] { return gather(a, {2, 0, 2}); }), {a}}},
      {"scatter_add", {projected([&] { return scatter_add(a, {1, 1, 0}, 2); }), {a}}},
      {"sum", {[&] { return sum(a); }, {a}}},
      {"mean", {[&] { return mean(a); }, {a}}},
      {"l1_norm", {[&] { return l1_norm(a); }, {a}}},
      {"squared_norm", {[&] { return squared_norm(a); }, {a}}},
      {"cross_entropy", {[&] { return cross_entropy(a, {3, 0, 1}); }, {a}}},
      {"l2_normalize", {projected([&] { return l2_normalize(v); }), {v}}},
      {"ortho_from_vector", {projected([&] { return ortho_from_vector(l2_normalize(v)); }), {v}}},
  };
  double prim = 0.0;
  std::string worst_op;
  for (auto& [name, pc] : cases) {
    const double e = gradcheck::max_relative_error(pc.first, pc.second, 11);
    if (e > prim) {
      prim = e;
      worst_op = name;
    }
  }
  double layer = 0.0;
  for (auto mode : {BasisMode::exact_eig, BasisMode::learned_ortho}) {
    std::mt19937_64 lrng(8);
    ParameterStore store;
    WFLayerConfig cfg;
    cfg.dim = 8;
    cfg.heads = 2;
    cfg.J = 3;
    cfg.basis_mode = mode;
    WaveletFormer wf(store, "wf", cfg, 8, lrng, 0.05, 0.5, 0.05);
    WFPlan plan = wf.plan(oracle::random_points(16, 9));
    Tensor feats = param({16, 8}, lrng);
    std::vector<Tensor> leaves{feats};
    for (const auto& [name, t] : store.entries()) leaves.push_back(t);
    layer = std::max(layer, gradcheck::max_relative_error(projected([&] { return wf(feats, {&plan}, 16); }), leaves, 12));
  }
  return {prim <= 1e-4 && layer <= 1e-3,
          "primitives max " + fmt("%.3g", prim) + " (" + worst_op + "), WaveletFormer exact/learned max " + fmt("%.3g", layer)};
}

std::uint64_t parameter_hash(const PointWaveletNet& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : net.parameters().entries())
    for (double v : t.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = (h ^ bits) * 0x100000001b3ULL;
    }
  return h;
}

struct TrainingRecord {
  std::vector<EpochMetrics> history;
  std::vector<std::uint64_t> hashes;
  double seconds = 0.0;
};

TrainingRecord train_run(const TrainRunConfig& run) {
  auto data = synth_dataset(run.dataset.train_per_class, run.dataset.test_per_class, run.dataset.n_points,
                            run.dataset.noise_sigma, run.dataset.seed, run.dataset.classes);
  PointWaveletNet net(run.net);
  TrainingRecord rec;
  const auto start = std::chrono::steady_clock::now();
  rec.history = train_toy(net, data.train, data.test, run.train, [&](const EpochMetrics& m) {
    rec.hashes.push_back(parameter_hash(net));
    std::printf("    epoch %zu: loss %.4f, train %.3f, test %.3f\n", m.epoch, m.task_loss, m.train_acc, m.test_acc);
    std::fflush(stdout);
  });
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

TrainRunConfig desk_run(Variant v) {
  TrainRunConfig run;
  run.train.variant = v;
  run.net = NetConfig::desk(basis_mode_for(v));
  return run;
}

TrainingRecord& l_training() {
  static TrainingRecord rec = train_run(desk_run(Variant::L));
  return rec;
}

Outcome toy_training() {
  const auto& rec = l_training();
  const double acc = rec.history.back().test_acc;
  TrainRunConfig shortened = desk_run(Variant::L);
  shortened.train.epochs = 2;
  auto again = train_run(shortened);
  bool identical = true;
  for (std::size_t e = 0; e < 2; ++e) {
    identical = identical && again.hashes[e] == rec.hashes[e] && again.history[e].task_loss == rec.history[e].task_loss &&
                again.history[e].reg == rec.history[e].reg && again.history[e].test_acc == rec.history[e].test_acc;
  }
  return {acc >= 0.9 && rec.history.size() <= 50 && rec.seconds < 900.0 && identical,
          fmt("test accuracy %.3f after %g epochs in %.0f s", acc, static_cast<double>(rec.history.size()), rec.seconds) +
              (identical ? ", rerun bitwise identical" : ", rerun differs")};
}

Outcome regularizer_dynamics() {
  const auto& rec = l_training();
  const auto path = std::filesystem::temp_directory_path() / "pointwavelet_acceptance_metrics.csv";
  {
    std::ofstream out(path);
    write_metrics_csv(out, rec.history, rec.history.front().reg.size());
  }
  auto table = load_csv(path);
  std::filesystem::remove(path);
  bool l_ok = true;
  std::string detail = "L q_eps:";
  for (std::size_t col = 0; col < table.header.size(); ++col) {
    if (table.header[col].rfind("reg_wf", 0) != 0) continue;
    const double first = table.values(0, static_cast<Eigen::Index>(col));
    const double last = table.values(table.values.rows() - 1, static_cast<Eigen::Index>(col));
    l_ok = l_ok && last < first;
    detail += fmt(" %.4g -> %.4g", first, last);
  }
  l_ok = l_ok && table.header.size() == 6;

  TrainRunConfig u = desk_run(Variant::U);
  u.dataset.train_per_class = 40;
  u.dataset.test_per_class = 10;
  u.train.epochs = 5;
  auto urec = train_run(u);
  bool u_ok = true;
  detail += "; U deviation:";
  for (std::size_t l = 0; l < urec.history.front().reg.size(); ++l) {
    u_ok = u_ok && urec.history.back().reg[l] < urec.history.front().reg[l];
    detail += fmt(" %.4g -> %.4g", urec.history.front().reg[l], urec.history.back().reg[l]);
  }
  return {l_ok && u_ok, detail};
}

Outcome localization_ordering() {
  // Seeded 64-node geometric graph; the fractions were computed once with an
  // independent eigensolver, BFS and energy sum, then frozen here.
  constexpr std::size_t kVertex = 17;
  constexpr double kFinest = 0.99999036155363752;
  constexpr double kCoarsest = 0.71186275259318055;
  auto g = build_knn_graph(oracle::random_points(64, 64), 6);
  auto k = mexican_hat_kernels();
  auto frame = build_frame(eigendecompose(g.laplacian), k, default_scales(k, 5));
  auto hops = hop_distances(g.adjacency, kVertex);
  const double fine = energy_fraction_within(impulse_response(frame, kVertex, ImpulseMode::wavelet(1)), hops, 2);
  const double coarse = energy_fraction_within(impulse_response(frame, kVertex, ImpulseMode::wavelet(5)), hops, 2);
  const bool matches = std::abs(fine - kFinest) <= 1e-9 && std::abs(coarse - kCoarsest) <= 1e-9;
  return {fine > coarse && matches, fmt("2-hop energy s1 %.6f vs s5 %.6f at vertex %g", fine, coarse, kVertex)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"orthogonal construction", orthogonal_construction},
      {"Laplacian synthesis from learned parameters", theorem_synthesis},
      {"wavelet reconstruction", wavelet_reconstruction},
      {"frame condition", frame_condition},
      {"eigendecomposition", eigendecomposition},
      {"Chebyshev variant", chebyshev_variant},
      {"gradient integrity", gradient_integrity},
      {"toy training", toy_training},
      {"regularizer dynamics", regularizer_dynamics},
      {"localization ordering", localization_ordering},
  };
  // Criterion 8 checks the 15 minute training budget itself; its slot also covers the rerun.
  const double limits[] = {10, 10, 60, 1, 60, 10, 120, 1200, 900, 10};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > limits[i]) {
      out.pass = false;
      out.detail += fmt(" (over the %.0f s budget)", limits[i]);
    }
    failed += out.pass ? 0 : 1;
    std::printf("[%s] criterion %zu (%s): %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed;
}
