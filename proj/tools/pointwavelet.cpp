// Command-line front end: graph building, spectra, wavelet transforms,
// localization and frame diagnostics, ortho self-test, toy training.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pointwavelet/errors.hpp"
#include "pointwavelet/formats.hpp"
#include "pointwavelet/graph.hpp"
#include "pointwavelet/nn/checkpoint.hpp"
#include "pointwavelet/nn/train.hpp"
#include "pointwavelet/ortho.hpp"
#include "pointwavelet/pointcloud.hpp"
#include "pointwavelet/wavelets.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

struct Manifest {
  std::string command;
  json config = json::object();
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> argv;
};

void write_manifest(const fs::path& path, const Manifest& m, double seconds) {
  json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["tool_version"] = kToolVersion;
  j["threads"] = 1;
  j["wall_clock_seconds"] = seconds;
  j["argv"] = m.argv;
  std::ofstream out(path);
  if (!out) throw pw::InputError("cannot write manifest " + path.string());
  out << j.dump(1) << '\n';
}

fs::path manifest_beside(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

std::string fmt_short(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw pw::InputError(what + ": '" + s + "' is not a number");
  }
}

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> scales;
  for (const auto& s : split(text, ',')) scales.push_back(parse_double(s, "scale"));
  if (scales.empty()) throw pw::InputError("--scales needs at least one value");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw pw::InputError("scales must be positive");
    if (i && scales[i] <= scales[i - 1]) throw pw::InputError("scales must be strictly ascending");
  }
  return scales;
}

std::vector<double> resolve_scales(const pw::KernelPair& kernels, std::size_t J, const std::string& explicit_scales,
                                   double lambda_max) {
  if (!explicit_scales.empty()) return parse_scales(explicit_scales);
  if (J < 1) throw pw::InputError("--J must be at least 1");
  return pw::default_scales(kernels, J, lambda_max);
}

json scales_json(const std::vector<double>& scales) { return json(scales); }

// ---------------------------------------------------------------------------

struct GraphArgs {
  std::string input, out, sigma = "mean";
  std::size_t k = 8;
};

int run_graph(const GraphArgs& a, Manifest& m) {
  auto pc = pw::load_xyz(a.input);
  pw::SigmaMode mode = a.sigma == "mean" ? pw::SigmaMode::mean_knn_distance()
                                         : pw::SigmaMode::fixed(parse_double(a.sigma, "--sigma"));
  if (mode.kind == pw::SigmaMode::Kind::fixed && !(mode.value > 0.0)) throw pw::InputError("--sigma must be positive");
  const double sigma = pw::resolve_sigma(pc.positions, a.k, mode);
  pw::GraphDocument doc{pw::build_knn_graph(pc.positions, a.k, mode), a.k, sigma, pc.positions};
  pw::save_graph(a.out, doc);
  std::size_t edges = 0;
  const auto& adj = doc.graph.adjacency;
  for (Eigen::Index i = 0; i < adj.rows(); ++i)
    for (Eigen::Index j = i + 1; j < adj.cols(); ++j) edges += adj(i, j) != 0.0;
  std::cout << "graph: n=" << doc.graph.size() << " edges=" << edges << " sigma=" << fmt_short(sigma)
            << " components=" << pw::count_components(adj) << '\n';
  m.config = {{"k", a.k}, {"sigma", a.sigma}, {"resolved_sigma", sigma}};
  m.inputs = {a.input};
  m.outputs = {a.out};
  return 0;
}

// ---------------------------------------------------------------------------

struct SpectrumArgs {
  std::string graph, out, basis_out;
};

int run_spectrum(const SpectrumArgs& a, Manifest& m) {
  auto doc = pw::load_graph(a.graph);
  auto basis = pw::eigendecompose(doc.graph.laplacian);
  pw::save_csv(a.out, {"eigenvalue"}, basis.eigenvalues);
  const std::string basis_path = a.basis_out.empty() ? fs::path(a.out).replace_extension(".pwbs").string() : a.basis_out;
  pw::save_basis(basis_path, basis);
  std::cout << "eigenvalues:";
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i)
    std::cout << (i ? ", " : " ") << fmt_short(std::abs(basis.eigenvalues(i)) < 1e-12 ? 0.0 : basis.eigenvalues(i));
  std::cout << '\n';
  if (basis.size() >= 2)
    std::cout << "connected (lambda_2 > 1e-8): " << (pw::fiedler_connectivity(basis, 1e-8) ? "yes" : "no") << '\n';
  m.inputs = {a.graph};
  m.outputs = {a.out, basis_path};
  return 0;
}

// ---------------------------------------------------------------------------

struct WaveletArgs {
  std::string graph, basis, signal, out, family = "mexican_hat", mode = "exact", checkpoint, reference, scales;
  std::size_t J = 5, layer = 0;
  bool inverse = false;
};

std::vector<std::string> channel_header(std::size_t channels) {
  std::vector<std::string> h;
  for (std::size_t c = 0; c < channels; ++c) h.push_back("ch" + std::to_string(c));
  return h;
}

void save_coefficients(const fs::path& path, const pw::WaveletCoefficients& wc) {
  const auto n = wc.coeffs.front().rows();
  const auto c = wc.coeffs.front().cols();
  Eigen::MatrixXd table(static_cast<Eigen::Index>(wc.coeffs.size()) * n, 2 + c);
  for (std::size_t j = 0; j < wc.coeffs.size(); ++j)
    for (Eigen::Index v = 0; v < n; ++v) {
      const auto r = static_cast<Eigen::Index>(j) * n + v;
      table(r, 0) = static_cast<double>(j);
      table(r, 1) = static_cast<double>(v);
      table.row(r).tail(c) = wc.coeffs[j].row(v);
    }
  auto header = channel_header(static_cast<std::size_t>(c));
  header.insert(header.begin(), {"scale", "vertex"});
  pw::save_csv(path, header, table);
}

pw::WaveletCoefficients load_coefficients(const fs::path& path, std::size_t scales, std::size_t n) {
  auto table = pw::load_csv(path).values;
  if (table.cols() < 3) throw pw::InputError(path.string() + ": coefficient table needs scale, vertex and channels");
  if (static_cast<std::size_t>(table.rows()) != scales * n)
    throw pw::InputError(path.string() + ": expected " + std::to_string(scales * n) + " coefficient rows, found " +
                         std::to_string(table.rows()));
  pw::WaveletCoefficients wc;
  const auto c = table.cols() - 2;
  wc.coeffs.assign(scales, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), c));
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    const double js = table(r, 0), vs = table(r, 1);
    if (js < 0 || vs < 0 || js >= static_cast<double>(scales) || vs >= static_cast<double>(n) || js != std::floor(js) ||
        vs != std::floor(vs))
      throw pw::InputError(path.string() + ": bad scale/vertex index on data row " + std::to_string(r + 1));
    wc.coeffs[static_cast<std::size_t>(js)].row(static_cast<Eigen::Index>(vs)) = table.row(r).tail(c);
  }
  return wc;
}

double relative_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double denom = want.norm();
  return denom == 0.0 ? got.norm() : (got - want).norm() / denom;
}

int run_wavelet(const WaveletArgs& a, Manifest& m) {
  pw::KernelPair kernels(pw::kernel_family_from_string(a.family));
  const auto scales = resolve_scales(kernels, a.J, a.scales, 2.0);
  m.config = {{"family", a.family}, {"J", scales.size()}, {"scales", scales_json(scales)}, {"mode", a.mode},
              {"inverse", a.inverse}};
  m.outputs = {a.out};

  std::optional<pw::GraphDocument> graph;
  if (!a.graph.empty()) {
    graph = pw::load_graph(a.graph);
    m.inputs.push_back(a.graph);
  }
  std::optional<pw::SpectralBasis> basis;
  std::optional<std::size_t> cheby_order;
  if (a.mode == "exact") {
    if (!a.basis.empty()) {
      basis = pw::load_basis(a.basis);
      m.inputs.push_back(a.basis);
    } else if (graph) {
      basis = pw::eigendecompose(graph->graph.laplacian);
    } else {
      throw pw::InputError("exact mode needs --graph or --basis");
    }
  } else if (a.mode == "ortho-checkpoint") {
    if (a.checkpoint.empty()) throw pw::InputError("ortho-checkpoint mode needs --checkpoint");
    auto ckpt = pw::nn::load_checkpoint(a.checkpoint);
    basis = pw::realize_basis(pw::nn::ortho_param_from_checkpoint(ckpt, a.layer));
    m.inputs.push_back(a.checkpoint);
    m.config["layer"] = a.layer;
  } else if (a.mode.rfind("cheby:", 0) == 0) {
    const double k = parse_double(a.mode.substr(6), "Chebyshev order");
    if (k < 0 || k != std::floor(k) || k > 1000) throw pw::InputError("Chebyshev order must be an integer in [0, 1000]");
    cheby_order = static_cast<std::size_t>(k);
    if (!graph) throw pw::InputError("cheby mode needs --graph");
    if (a.inverse) throw pw::InputError("--inverse needs an explicit basis (exact or ortho-checkpoint mode)");
  } else {
    throw pw::InputError("unknown --mode '" + a.mode + "' (expected exact, ortho-checkpoint or cheby:K)");
  }

  const std::size_t n = basis ? basis->size() : graph->graph.size();
  m.inputs.push_back(a.signal);

  if (a.inverse) {
    auto frame = pw::build_frame(*basis, kernels, scales);
    auto wc = load_coefficients(a.signal, frame.scale_count(), n);
    Eigen::MatrixXd f = pw::inverse_wavelet_transform(frame, wc);
    pw::save_csv(a.out, channel_header(static_cast<std::size_t>(f.cols())), f);
    std::cout << "reconstructed signal: " << n << " x " << f.cols() << '\n';
    if (!a.reference.empty()) {
      auto ref = pw::load_csv(a.reference).values;
      if (ref.rows() != f.rows() || ref.cols() != f.cols()) throw pw::InputError("--reference shape differs from reconstruction");
      std::cout << "reconstruction relative error: " << fmt_short(relative_error(f, ref)) << '\n';
      m.inputs.push_back(a.reference);
    }
    return 0;
  }

  auto signal = pw::load_csv(a.signal).values;
  if (static_cast<std::size_t>(signal.rows()) != n)
    throw pw::InputError("signal has " + std::to_string(signal.rows()) + " rows but the graph has " + std::to_string(n) +
                         " vertices");
  if (cheby_order) {
    auto bank = pw::fit_chebyshev_bank(kernels, scales, 2.0, *cheby_order);
    auto wc = pw::chebyshev_wavelet_transform(bank, graph->graph.laplacian, signal);
    save_coefficients(a.out, wc);
    auto exact = pw::wavelet_transform(pw::build_frame(pw::eigendecompose(graph->graph.laplacian), kernels, scales), signal);
    double dev = 0.0;
    for (std::size_t j = 0; j < wc.coeffs.size(); ++j) dev = std::max(dev, (wc.coeffs[j] - exact.coeffs[j]).cwiseAbs().maxCoeff());
    std::cout << "chebyshev order " << *cheby_order << ": max deviation from exact transform " << fmt_short(dev) << '\n';
    return 0;
  }
  auto frame = pw::build_frame(*basis, kernels, scales);
  auto wc = pw::wavelet_transform(frame, signal);
  save_coefficients(a.out, wc);
  const double err = relative_error(pw::inverse_wavelet_transform(frame, wc), signal);
  std::cout << "coefficients: " << frame.scale_count() << " scales x " << n << " vertices x " << signal.cols()
            << " channels\n";
  std::cout << "min p(lambda_i) = " << fmt_short(frame.frame_values.minCoeff()) << '\n';
  std::cout << "reconstruction relative error: " << fmt_short(err) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct LocalizeArgs {
  std::string graph, out, family = "mexican_hat", modes, scales;
  std::size_t vertex = 0, J = 5, radius = 2;
};

int run_localize(const LocalizeArgs& a, Manifest& m) {
  auto doc = pw::load_graph(a.graph);
  const std::size_t n = doc.graph.size();
  if (a.vertex >= n)
    throw pw::InputError("--vertex " + std::to_string(a.vertex) + " out of range for " + std::to_string(n) + " vertices");
  pw::KernelPair kernels(pw::kernel_family_from_string(a.family));
  const auto scales = resolve_scales(kernels, a.J, a.scales, 2.0);
  auto frame = pw::build_frame(pw::eigendecompose(doc.graph.laplacian), kernels, scales);

  std::vector<std::string> names;
  if (a.modes.empty()) {
    names = {"fourier", "scaling"};
    for (std::size_t j = 1; j <= scales.size(); ++j) names.push_back("wavelet" + std::to_string(j));
  } else {
    names = split(a.modes, ',');
  }
  std::vector<pw::ImpulseMode> modes;
  for (const auto& name : names) {
    if (name == "fourier") {
      modes.push_back(pw::ImpulseMode::fourier());
    } else if (name == "scaling") {
      modes.push_back(pw::ImpulseMode::scaling());
    } else if (name.rfind("wavelet", 0) == 0 && name.size() > 7) {
      const double j = parse_double(name.substr(7), "wavelet index");
      if (j < 1 || j > static_cast<double>(scales.size()) || j != std::floor(j))
        throw pw::InputError("mode " + name + ": wavelet index must be 1.." + std::to_string(scales.size()));
      modes.push_back(pw::ImpulseMode::wavelet(static_cast<std::size_t>(j)));
    } else {
      throw pw::InputError("unknown mode '" + name + "' (expected fourier, scaling or wavelet<j>)");
    }
  }
  Eigen::MatrixXd table(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(modes.size()));
  for (std::size_t c = 0; c < modes.size(); ++c)
    table.col(static_cast<Eigen::Index>(c)) = pw::impulse_response(frame, a.vertex, modes[c]).cwiseAbs();
  pw::save_csv(a.out, names, table);

  const auto hops = pw::hop_distances(doc.graph.adjacency, a.vertex);
  const auto first = pw::impulse_response(frame, a.vertex, pw::ImpulseMode::wavelet(1));
  const auto last = pw::impulse_response(frame, a.vertex, pw::ImpulseMode::wavelet(scales.size()));
  const double f1 = pw::energy_fraction_within(first, hops, a.radius);
  const double fJ = pw::energy_fraction_within(last, hops, a.radius);
  std::cout << a.radius << "-hop energy fraction at vertex " << a.vertex << ": wavelet1 (s=" << fmt_short(scales.front())
            << ") " << fmt_short(f1) << ", wavelet" << scales.size() << " (s=" << fmt_short(scales.back()) << ") "
            << fmt_short(fJ) << (f1 > fJ ? "; smaller scale is more localized" : "; smaller scale is NOT more localized")
            << '\n';
  m.config = {{"vertex", a.vertex}, {"family", a.family}, {"scales", scales_json(scales)}, {"modes", names},
              {"radius", a.radius}};
  m.inputs = {a.graph};
  m.outputs = {a.out};
  return 0;
}

// ---------------------------------------------------------------------------

struct FramecheckArgs {
  std::string family = "mexican_hat", out, scales;
  std::size_t J = 5, grid = 1000;
  double lambda_max = 2.0;
};

int run_framecheck(const FramecheckArgs& a, Manifest& m) {
  if (!(a.lambda_max > 0.0)) throw pw::InputError("--lambda-max must be positive");
  if (a.grid < 2) throw pw::InputError("--grid needs at least two points");
  pw::KernelPair kernels(pw::kernel_family_from_string(a.family));
  const auto scales = resolve_scales(kernels, a.J, a.scales, a.lambda_max);
  auto report = pw::frame_check(kernels, scales, pw::uniform_grid(a.lambda_max, a.grid));
  {
    std::ofstream out(a.out);
    if (!out) throw pw::InputError("cannot write " + a.out);
    pw::write_frame_csv(out, report);
  }
  m.config = {{"family", a.family}, {"scales", scales_json(scales)}, {"lambda_max", a.lambda_max}, {"grid", a.grid}};
  m.outputs = {a.out};
  std::cout << "scales:";
  for (double s : scales) std::cout << ' ' << fmt_short(s);
  std::cout << "\nmin p = " << fmt(report.min_p) << " at lambda = " << fmt(report.argmin_lambda) << '\n';
  if (report.min_p <= 1e-12)
    throw pw::MathError("frame condition violated: p(lambda) = " + fmt_short(report.min_p) +
                        " at lambda = " + fmt(report.argmin_lambda));
  return 0;
}

// ---------------------------------------------------------------------------

struct SelftestArgs {
  std::size_t max_n = 256, trials = 1000;
  std::uint64_t seed = 1;
  std::string out;
};

int run_ortho_selftest(const SelftestArgs& a, Manifest& m) {
  if (a.max_n < 2) throw pw::InputError("--n must be at least 2");
  std::mt19937_64 rng(a.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  json report = json::object();
  bool pass = true;
  std::vector<std::size_t> sizes;
  for (std::size_t n : {2, 4, 16, 64, 256})
    if (n <= a.max_n) sizes.push_back(n);
  if (sizes.empty() || sizes.back() != a.max_n) sizes.push_back(a.max_n);

  for (std::size_t n : sizes) {
    double worst = 0.0;
    bool anchored = true;
    std::size_t done = 0, skipped = 0;
    while (done < a.trials) {
      Eigen::VectorXd q(static_cast<Eigen::Index>(n));
      for (auto& v : q) v = normal(rng);
      q.normalize();
      if ((q - Eigen::VectorXd::Unit(q.size(), 0)).norm() < 1e-6 || (q + Eigen::VectorXd::Unit(q.size(), 0)).norm() < 1e-6) {
        ++skipped;
        continue;
      }
      Eigen::MatrixXd u = pw::orthogonal_from_vector(q);
      Eigen::MatrixXd dev = Eigen::MatrixXd::Identity(q.size(), q.size()) - u * u.transpose();
      worst = std::max(worst, dev.cwiseAbs().maxCoeff());
      anchored = anchored && (u.col(0).array() == q.array()).all();
      ++done;
    }
    const double bound = 1e-12 * static_cast<double>(n);
    const bool ok = worst <= bound && anchored;
    pass = pass && ok;
    std::cout << "n=" << n << ": trials=" << done << " max|I - U U^T|=" << fmt_short(worst) << " (bound "
              << fmt_short(bound) << "), first column == q: " << (anchored ? "yes" : "no") << (ok ? "  ok" : "  FAIL")
              << '\n';
    report["sizes"][std::to_string(n)] = {{"trials", done}, {"max_deviation", worst}, {"first_column_exact", anchored},
                                          {"rejected_near_e1", skipped}, {"pass", ok}};
  }

  for (double sign : {1.0, -1.0}) {
    Eigen::VectorXd e1 = sign * Eigen::VectorXd::Unit(4, 0);
    bool rejected = false;
    try {
      pw::orthogonal_from_vector(e1);
    } catch (const pw::MathError&) {
      rejected = true;
    }
    pass = pass && rejected;
    std::cout << "q = " << (sign > 0 ? "+" : "-") << "e1: " << (rejected ? "correctly rejected" : "NOT rejected") << '\n';
    report[sign > 0 ? "plus_e1_rejected" : "minus_e1_rejected"] = rejected;
  }

  double worst_row = 0.0, worst_sym = 0.0, min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < 50; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng() % 63);
    auto p = pw::OrthoParam::random_anchored(n, 1.0, rng());
    Eigen::MatrixXd l = pw::synth_laplacian(pw::realize_basis(p));
    worst_row = std::max(worst_row, l.rowwise().sum().cwiseAbs().maxCoeff());
    worst_sym = std::max(worst_sym, (l - l.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(l, Eigen::EigenvaluesOnly).eigenvalues()(0));
  }
  const bool laplacian_ok = worst_row <= 1e-10 && worst_sym <= 1e-10 && min_eig >= -1e-10;
  pass = pass && laplacian_ok;
  std::cout << "synthesized Laplacian (50 random parameters, n <= 64): max |row sum| " << fmt_short(worst_row)
            << ", max asymmetry " << fmt_short(worst_sym) << ", min eigenvalue " << fmt_short(min_eig)
            << (laplacian_ok ? "  ok" : "  FAIL") << '\n';
  report["laplacian"] = {{"max_row_sum", worst_row}, {"max_asymmetry", worst_sym}, {"min_eigenvalue", min_eig},
                         {"pass", laplacian_ok}};
  report["pass"] = pass;
  std::cout << (pass ? "PASS" : "FAIL") << '\n';

  m.seed = a.seed;
  m.config = {{"max_n", a.max_n}, {"trials", a.trials}};
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw pw::InputError("cannot write " + a.out);
    out << report.dump(1) << '\n';
    m.outputs = {a.out};
  }
  if (!pass) throw pw::MathError("orthogonality self-test failed");
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config, out_dir, variant, dataset;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

void apply_dataset_spec(const std::string& spec, pw::nn::SynthDatasetSpec& d) {
  std::string body = spec;
  if (body.rfind("synth", 0) != 0) throw pw::InputError("--dataset must start with 'synth'");
  body = body.substr(5);
  if (body.empty()) return;
  if (body.front() != ':') throw pw::InputError("--dataset format is synth[:key=value,...]");
  for (const auto& kv : split(body.substr(1), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw pw::InputError("--dataset entry '" + kv + "' lacks '='");
    const std::string key = kv.substr(0, eq);
    const double v = parse_double(kv.substr(eq + 1), "--dataset " + key);
    auto count = [&] {
      if (v < 0 || v != std::floor(v)) throw pw::InputError("--dataset " + key + " must be a nonnegative integer");
      return static_cast<std::size_t>(v);
    };
    if (key == "train") d.train_per_class = count();
    else if (key == "test") d.test_per_class = count();
    else if (key == "points") d.n_points = count();
    else if (key == "noise") d.noise_sigma = v;
    else if (key == "seed") d.seed = count();
    else if (key == "classes") d.classes = count();
    else throw pw::InputError("unknown --dataset key '" + key + "'");
  }
}

int run_train(const TrainArgs& a, Manifest& m) {
  std::string text = "{}";
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw pw::InputError("cannot open " + a.config);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    m.inputs = {a.config};
  }
  auto j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw pw::InputError("config is not valid JSON");
  if (!a.variant.empty()) j["train"]["variant"] = a.variant;
  if (a.epochs) j["train"]["epochs"] = *a.epochs;
  if (a.seed) j["train"]["seed"] = *a.seed;
  auto cfg = pw::nn::train_run_config_from_json(j.dump());
  if (!a.dataset.empty()) apply_dataset_spec(a.dataset, cfg.dataset);
  if (cfg.dataset.classes > cfg.net.classes) throw pw::InputError("dataset has more classes than the network head");

  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  {
    std::ofstream out(dir / "config.json");
    out << pw::nn::to_json(cfg) << '\n';
  }
  const auto data = pw::synth_dataset(cfg.dataset.train_per_class, cfg.dataset.test_per_class, cfg.dataset.n_points,
                                      cfg.dataset.noise_sigma, cfg.dataset.seed, cfg.dataset.classes);
  pw::nn::PointWaveletNet net(cfg.net);
  std::cout << "variant " << pw::nn::to_string(cfg.train.variant) << ", " << net.parameters().scalar_count()
            << " parameters, " << data.train.size() << " train / " << data.test.size() << " test clouds\n";
  const char* reg_name = cfg.train.variant == pw::nn::Variant::L   ? "|q_eps|_1"
                         : cfg.train.variant == pw::nn::Variant::U ? "|I-UU^T|_F^2"
                                                                   : nullptr;
  auto history = pw::nn::train_toy(net, data.train, data.test, cfg.train, [&](const pw::nn::EpochMetrics& e) {
    std::cout << "epoch " << e.epoch << ": loss " << fmt_short(e.task_loss);
    if (reg_name)
      for (std::size_t i = 0; i < e.reg.size(); ++i) std::cout << ", wf" << i << ' ' << reg_name << ' ' << fmt_short(e.reg[i]);
    std::cout << ", train acc " << fmt_short(e.train_acc) << ", test acc " << fmt_short(e.test_acc) << std::endl;
  });
  {
    std::ofstream out(dir / "metrics.csv");
    if (!out) throw pw::InputError("cannot write metrics");
    pw::nn::write_metrics_csv(out, history, net.wf_layers().size());
  }
  pw::nn::save_checkpoint(dir / "checkpoint.pwck", net);
  m.config = json::parse(pw::nn::to_json(cfg));
  m.seed = cfg.train.seed;
  m.outputs = {(dir / "config.json").string(), (dir / "metrics.csv").string(), (dir / "checkpoint.pwck").string()};
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph wavelet toolkit for point clouds"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  if (const char* env = std::getenv("POINTWAVELET_THREADS")) threads = static_cast<std::size_t>(std::max(1, std::atoi(env)));
  app.add_option("--threads", threads, "Worker threads (computation is serial; any value gives identical output)")
      ->check(CLI::PositiveNumber);

  Manifest manifest;
  for (int i = 0; i < argc; ++i) manifest.argv.emplace_back(argv[i]);
  std::function<int()> action;
  fs::path manifest_path;

  GraphArgs ga;
  auto* graph = app.add_subcommand("graph", "Build a k-NN graph from an XYZ file");
  graph->add_option("input", ga.input, "XYZ point file")->required();
  graph->add_option("--k", ga.k, "Neighbours per point")->capture_default_str();
  graph->add_option("--sigma", ga.sigma, "Gaussian width, or 'mean' for the mean k-NN distance")->capture_default_str();
  graph->add_option("--out", ga.out, "Graph JSON output")->required();
  graph->callback([&] {
    action = [&] { return run_graph(ga, manifest); };
    manifest_path = manifest_beside(ga.out);
  });

  SpectrumArgs sa;
  auto* spectrum = app.add_subcommand("spectrum", "Eigendecompose a graph's normalized Laplacian");
  spectrum->add_option("graph", sa.graph, "Graph JSON")->required();
  spectrum->add_option("--out", sa.out, "Eigenvalue CSV output")->required();
  spectrum->add_option("--basis-out", sa.basis_out, "Basis binary output (default: --out with .pwbs)");
  spectrum->callback([&] {
    action = [&] { return run_spectrum(sa, manifest); };
    manifest_path = manifest_beside(sa.out);
  });

  WaveletArgs wa;
  auto* wavelet = app.add_subcommand("wavelet", "Forward or inverse graph wavelet transform of a signal");
  wavelet->add_option("--graph", wa.graph, "Graph JSON");
  wavelet->add_option("--basis", wa.basis, "Basis binary (exact mode)");
  wavelet->add_option("--signal", wa.signal, "Signal CSV (n rows), or coefficient CSV with --inverse")->required();
  wavelet->add_option("--family", wa.family, "mexican_hat or meyer")->capture_default_str();
  wavelet->add_option("--J", wa.J, "Number of wavelet scales")->capture_default_str();
  wavelet->add_option("--scales", wa.scales, "Explicit comma-separated ascending scales");
  wavelet->add_option("--mode", wa.mode, "exact, ortho-checkpoint or cheby:K")->capture_default_str();
  wavelet->add_option("--checkpoint", wa.checkpoint, "Training checkpoint (ortho-checkpoint mode)");
  wavelet->add_option("--layer", wa.layer, "WaveletFormer layer index in the checkpoint")->capture_default_str();
  wavelet->add_flag("--inverse", wa.inverse, "Reconstruct a signal from coefficients");
  wavelet->add_option("--reference", wa.reference, "Original signal to compare a reconstruction against");
  wavelet->add_option("--out", wa.out, "Output CSV")->required();
  wavelet->callback([&] {
    action = [&] { return run_wavelet(wa, manifest); };
    manifest_path = manifest_beside(wa.out);
  });

  LocalizeArgs la;
  auto* localize = app.add_subcommand("localize", "Impulse responses of the transforms at one vertex");
  localize->add_option("graph", la.graph, "Graph JSON")->required();
  localize->add_option("--vertex", la.vertex, "Impulse location")->required();
  localize->add_option("--modes", la.modes, "Comma list of fourier, scaling, wavelet<j> (default: all)");
  localize->add_option("--family", la.family, "mexican_hat or meyer")->capture_default_str();
  localize->add_option("--J", la.J, "Number of wavelet scales")->capture_default_str();
  localize->add_option("--scales", la.scales, "Explicit comma-separated ascending scales");
  localize->add_option("--radius", la.radius, "Hop radius for the energy summary")->capture_default_str();
  localize->add_option("--out", la.out, "Intensity CSV")->required();
  localize->callback([&] {
    action = [&] { return run_localize(la, manifest); };
    manifest_path = manifest_beside(la.out);
  });

  FramecheckArgs fa;
  auto* framecheck = app.add_subcommand("framecheck", "Tabulate p(lambda) and check the frame condition");
  framecheck->add_option("--family", fa.family, "mexican_hat or meyer")->capture_default_str();
  framecheck->add_option("--J", fa.J, "Number of wavelet scales")->capture_default_str();
  framecheck->add_option("--scales", fa.scales, "Explicit comma-separated ascending scales");
  framecheck->add_option("--lambda-max", fa.lambda_max, "Upper end of the spectrum")->capture_default_str();
  framecheck->add_option("--grid", fa.grid, "Grid points on [0, lambda-max]")->capture_default_str();
  framecheck->add_option("--out", fa.out, "CSV output")->required();
  framecheck->callback([&] {
    action = [&] { return run_framecheck(fa, manifest); };
    manifest_path = manifest_beside(fa.out);
  });

  TrainArgs ta;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  auto* train = app.add_subcommand("train", "Train the toy classifier on synthetic shapes");
  train->add_option("--config", ta.config, "JSON config with net/train/dataset sections");
  train->add_option("--variant", ta.variant, "exact, L, U or che (overrides the config)");
  train->add_option("--dataset", ta.dataset, "synth[:train=N,test=N,points=N,noise=S,seed=N,classes=N]");
  auto* epochs_opt = train->add_option("--epochs", epochs, "Override the epoch count");
  auto* seed_opt = train->add_option("--seed", seed, "Override the training seed");
  train->add_option("--out-dir", ta.out_dir, "Directory for checkpoint, metrics and manifest")->required();
  train->callback([&] {
    if (epochs_opt->count()) ta.epochs = epochs;
    if (seed_opt->count()) ta.seed = seed;
    action = [&] { return run_train(ta, manifest); };
    manifest_path = fs::path(ta.out_dir) / "manifest.json";
  });

  SelftestArgs oa;
  auto* selftest = app.add_subcommand("ortho-selftest", "Check the closed-form orthogonal construction");
  selftest->add_option("--n", oa.max_n, "Largest dimension tested")->capture_default_str();
  selftest->add_option("--trials", oa.trials, "Random unit vectors per dimension")->capture_default_str();
  selftest->add_option("--seed", oa.seed, "Random seed")->capture_default_str();
  selftest->add_option("--out", oa.out, "JSON report");
  selftest->callback([&] {
    action = [&] { return run_ortho_selftest(oa, manifest); };
    if (!oa.out.empty()) manifest_path = manifest_beside(oa.out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  manifest.command = app.get_subcommands().front()->get_name();
  const auto start = std::chrono::steady_clock::now();
  int code = 0;
  try {
    code = action();
  } catch (const pw::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const pw::MathError& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!manifest_path.empty()) {
    try {
      manifest.config["threads_requested"] = threads;
      write_manifest(manifest_path, manifest, seconds);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }
  return code;
}
