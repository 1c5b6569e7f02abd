#include "pointwavelet/wavelets.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "pointwavelet/errors.hpp"

namespace pw {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFrameFloor = 1e-12;

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * kPi);

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fingerprint(const WaveletFrame& frame) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto family = static_cast<int>(frame.kernels.family());
  h = fnv1a(h, &family, sizeof family);
  h = fnv1a(h, frame.scales.data(), frame.scales.size() * sizeof(double));
  h = fnv1a(h, frame.basis.eigenvalues.data(),
            static_cast<std::size_t>(frame.basis.eigenvalues.size()) * sizeof(double));
  h = fnv1a(h, frame.basis.eigenvectors.data(),
            static_cast<std::size_t>(frame.basis.eigenvectors.size()) * sizeof(double));
  return h == 0 ? 1 : h;
}

void require_rows(const WaveletFrame& frame, Eigen::Index rows, const char* what) {
  if (rows != static_cast<Eigen::Index>(frame.size())) {
    throw InputError(std::string(what) + ": signal has " + std::to_string(rows) + " rows, frame has " +
                     std::to_string(frame.size()) + " vertices");
  }
}

}  // namespace

const char* to_string(KernelFamily family) {
  return family == KernelFamily::meyer ? "meyer" : "mexican_hat";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "mexican_hat" || name == "mexican-hat" || name == "mexhat") return KernelFamily::mexican_hat;
  if (name == "meyer") return KernelFamily::meyer;
  throw InputError("unknown kernel family '" + name + "'");
}

double meyer_ramp(double x) {
  if (x < 0.0) return 0.0;
  if (x > 1.0) return 1.0;
  return x;
}

double KernelPair::h(double x) const {
  if (family_ == KernelFamily::mexican_hat) return std::exp(-x * x * x * x);
  if (x <= 2.0 * kPi / 3.0) return kInvSqrt2Pi;
  if (x <= 4.0 * kPi / 3.0) return kInvSqrt2Pi * std::cos(0.5 * kPi * meyer_ramp(3.0 * x / (2.0 * kPi) - 1.0));
  return 0.0;
}

double KernelPair::g(double x) const {
  if (family_ == KernelFamily::mexican_hat) return x * std::exp(-x);
  // Modulus of the complex kernel: the unit phase factor drops out.
  if (x >= 2.0 * kPi / 3.0 && x <= 4.0 * kPi / 3.0)
    return kInvSqrt2Pi * std::sin(0.5 * kPi * meyer_ramp(3.0 * x / (2.0 * kPi) - 1.0));
  if (x > 4.0 * kPi / 3.0 && x <= 8.0 * kPi / 3.0)
    return kInvSqrt2Pi * std::cos(0.5 * kPi * meyer_ramp(3.0 * x / (4.0 * kPi) - 1.0));
  return 0.0;
}

double KernelPair::dh(double x) const {
  if (family_ == KernelFamily::mexican_hat) return -4.0 * x * x * x * std::exp(-x * x * x * x);
  if (x > 2.0 * kPi / 3.0 && x < 4.0 * kPi / 3.0)
    return -kInvSqrt2Pi * 0.75 * std::sin(0.5 * kPi * (3.0 * x / (2.0 * kPi) - 1.0));
  return 0.0;
}

double KernelPair::dg(double x) const {
  if (family_ == KernelFamily::mexican_hat) return (1.0 - x) * std::exp(-x);
  if (x > 2.0 * kPi / 3.0 && x <= 4.0 * kPi / 3.0)
    return kInvSqrt2Pi * 0.75 * std::cos(0.5 * kPi * (3.0 * x / (2.0 * kPi) - 1.0));
  if (x > 4.0 * kPi / 3.0 && x < 8.0 * kPi / 3.0)
    return -kInvSqrt2Pi * 0.375 * std::sin(0.5 * kPi * (3.0 * x / (4.0 * kPi) - 1.0));
  return 0.0;
}

double KernelPair::g_peak() const { return family_ == KernelFamily::mexican_hat ? 1.0 : 4.0 * kPi / 3.0; }

KernelPair mexican_hat_kernels() { return KernelPair(KernelFamily::mexican_hat); }
KernelPair meyer_kernels() { return KernelPair(KernelFamily::meyer); }

std::vector<double> select_scales(double lambda_max, std::size_t J, double peak) {
  if (!(lambda_max > 0.0)) throw InputError("lambda_max must be positive");
  if (J < 1) throw InputError("J must be at least 1");
  std::vector<double> scales(J);
  const double lo = lambda_max / 20.0;
  for (std::size_t j = 0; j < J; ++j) {
    double frac = J == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(J - 1);
    double target = lambda_max * std::pow(lo / lambda_max, frac);
    scales[j] = peak / target;
  }
  return scales;
}

std::vector<double> default_scales(const KernelPair& kernels, std::size_t J, double lambda_max) {
  return select_scales(lambda_max, J, kernels.g_peak());
}

double frame_function(const KernelPair& kernels, const std::vector<double>& scales, double x) {
  double h = kernels.h(x);
  double p = h * h;
  for (double s : scales) {
    double g = kernels.g(s * x);
    p += g * g;
  }
  return p;
}

Eigen::MatrixXd WaveletFrame::inverse_gram() const {
  const auto& u = basis.eigenvectors;
  return u * frame_values.cwiseInverse().asDiagonal() * u.transpose();
}

WaveletFrame build_frame(SpectralBasis basis, KernelPair kernels, std::vector<double> scales) {
  if (scales.empty()) throw InputError("a wavelet frame needs at least one scale");
  for (std::size_t j = 0; j < scales.size(); ++j) {
    if (!(scales[j] > 0.0)) throw InputError("scales must be positive");
    if (j > 0 && !(scales[j] > scales[j - 1])) throw InputError("scales must be strictly ascending");
  }
  const auto n = basis.eigenvalues.size();
  WaveletFrame frame;
  frame.responses.resize(static_cast<Eigen::Index>(scales.size() + 1), n);
  frame.frame_values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lambda = basis.eigenvalues(i);
    frame.responses(0, i) = kernels.h(lambda);
    for (std::size_t j = 0; j < scales.size(); ++j)
      frame.responses(static_cast<Eigen::Index>(j + 1), i) = kernels.g(scales[j] * lambda);
    frame.frame_values(i) = frame.responses.col(i).squaredNorm();
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(frame.frame_values(i) > kFrameFloor)) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "frame condition violated: p(" << basis.eigenvalues(i)
          << ") = " << frame.frame_values(i);
      throw MathError(msg.str());
    }
  }
  const auto& u = basis.eigenvectors;
  frame.operators.reserve(scales.size() + 1);
  for (Eigen::Index j = 0; j < frame.responses.rows(); ++j) {
    Eigen::MatrixXd psi = u * frame.responses.row(j).transpose().asDiagonal() * u.transpose();
    psi = 0.5 * (psi + psi.transpose()).eval();
    frame.operators.push_back(std::move(psi));
  }
  frame.basis = std::move(basis);
  frame.kernels = kernels;
  frame.scales = std::move(scales);
  frame.id = fingerprint(frame);
  return frame;
}

WaveletCoefficients wavelet_transform(const WaveletFrame& frame, const Eigen::MatrixXd& f) {
  require_rows(frame, f.rows(), "wavelet_transform");
  WaveletCoefficients out;
  out.frame_id = frame.id;
  out.coeffs.reserve(frame.scale_count());
  for (const auto& psi : frame.operators) out.coeffs.push_back(psi * f);
  return out;
}

Eigen::MatrixXd inverse_wavelet_transform(const WaveletFrame& frame, const WaveletCoefficients& coeffs) {
  if (coeffs.coeffs.size() != frame.scale_count()) {
    throw InputError("inverse_wavelet_transform: expected " + std::to_string(frame.scale_count()) +
                     " scale blocks, got " + std::to_string(coeffs.coeffs.size()));
  }
  if (coeffs.frame_id != 0 && coeffs.frame_id != frame.id)
    throw InputError("inverse_wavelet_transform: coefficients belong to a different frame");
  const auto cols = coeffs.coeffs.front().cols();
  for (const auto& block : coeffs.coeffs) {
    require_rows(frame, block.rows(), "inverse_wavelet_transform");
    if (block.cols() != cols) throw InputError("inverse_wavelet_transform: ragged channel count");
  }
  if (frame.frame_values.minCoeff() <= kFrameFloor)
    throw MathError("inverse_wavelet_transform: frame function vanishes");
  Eigen::MatrixXd adjoint = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(frame.size()), cols);
  for (std::size_t j = 0; j < frame.scale_count(); ++j) adjoint.noalias() += frame.operators[j] * coeffs.coeffs[j];
  const auto& u = frame.basis.eigenvectors;
  Eigen::MatrixXd spectral = u.transpose() * adjoint;
  spectral = frame.frame_values.cwiseInverse().asDiagonal() * spectral;
  return u * spectral;
}

std::vector<double> uniform_grid(double lambda_max, std::size_t count) {
  if (count < 2) throw InputError("grid needs at least two points");
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = lambda_max * static_cast<double>(i) / static_cast<double>(count - 1);
  return grid;
}

FrameReport frame_check(const KernelPair& kernels, const std::vector<double>& scales,
                        const std::vector<double>& grid) {
  FrameReport report;
  report.min_p = std::numeric_limits<double>::infinity();
  report.samples.reserve(grid.size());
  for (double lambda : grid) {
    FrameSample row;
    row.lambda = lambda;
    double h = kernels.h(lambda);
    row.h2 = h * h;
    row.p = row.h2;
    for (double s : scales) {
      double g = kernels.g(s * lambda);
      row.g2.push_back(g * g);
      row.p += g * g;
    }
    if (row.p < report.min_p) {
      report.min_p = row.p;
      report.argmin_lambda = lambda;
    }
    report.samples.push_back(std::move(row));
  }
  return report;
}

void write_frame_csv(std::ostream& out, const FrameReport& report) {
  const std::size_t J = report.samples.empty() ? 0 : report.samples.front().g2.size();
  out << "lambda,h2";
  for (std::size_t j = 1; j <= J; ++j) out << ",g2_s" << j;
  out << ",p\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& row : report.samples) {
    out << row.lambda << ',' << row.h2;
    for (double v : row.g2) out << ',' << v;
    out << ',' << row.p << '\n';
  }
}

Eigen::MatrixXd graph_fourier(const SpectralBasis& basis, const Eigen::MatrixXd& f) {
  if (f.rows() != basis.eigenvectors.rows()) throw InputError("graph_fourier: dimension mismatch");
  return basis.eigenvectors.transpose() * f;
}

Eigen::MatrixXd inverse_graph_fourier(const SpectralBasis& basis, const Eigen::MatrixXd& f_hat) {
  if (f_hat.rows() != basis.eigenvectors.cols()) throw InputError("inverse_graph_fourier: dimension mismatch");
  return basis.eigenvectors * f_hat;
}

Eigen::MatrixXd spectral_convolution(const SpectralBasis& basis, const Eigen::VectorXd& theta,
                                     const Eigen::MatrixXd& f) {
  if (theta.size() != basis.eigenvalues.size()) throw InputError("spectral_convolution: theta length mismatch");
  if (f.rows() != basis.eigenvectors.rows()) throw InputError("spectral_convolution: dimension mismatch");
  const auto& u = basis.eigenvectors;
  Eigen::MatrixXd spectral = u.transpose() * f;
  return u * (theta.asDiagonal() * spectral);
}

Eigen::VectorXd fit_chebyshev_coeffs(const std::function<double(double)>& kernel, double scale,
                                     double lambda_max, std::size_t K) {
  if (!(lambda_max > 0.0)) throw InputError("lambda_max must be positive");
  const std::size_t m = K + 1;
  std::vector<double> samples(m);
  for (std::size_t i = 0; i < m; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(m));
    samples[i] = kernel(scale * 0.5 * lambda_max * (x + 1.0));
  }
  Eigen::VectorXd theta(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      acc += samples[i] * std::cos(kPi * static_cast<double>(k) * (static_cast<double>(i) + 0.5) /
                                   static_cast<double>(m));
    theta(static_cast<Eigen::Index>(k)) = (k == 0 ? 1.0 : 2.0) * acc / static_cast<double>(m);
  }
  return theta;
}

double chebyshev_eval(const Eigen::VectorXd& theta, double lambda_max, double x) {
  const double t = 2.0 * x / lambda_max - 1.0;
  double prev = 1.0, cur = t;
  double acc = theta.size() > 0 ? theta(0) : 0.0;
  for (Eigen::Index k = 1; k < theta.size(); ++k) {
    acc += theta(k) * cur;
    double next = 2.0 * t * cur - prev;
    prev = cur;
    cur = next;
  }
  return acc;
}

Eigen::MatrixXd chebyshev_filter(const Eigen::SparseMatrix<double>& laplacian, double lambda_max,
                                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& f) {
  if (theta.size() == 0) throw InputError("chebyshev_filter needs K >= 0 (at least one coefficient)");
  if (!(lambda_max > 0.0)) throw InputError("lambda_max must be positive");
  if (laplacian.rows() != laplacian.cols() || laplacian.rows() != f.rows())
    throw InputError("chebyshev_filter: dimension mismatch");
  const double a = 2.0 / lambda_max;
  // T_k(L~) f with L~ = a L - I, L~ x = a (L x) - x.
  Eigen::MatrixXd t_prev = f;
  Eigen::MatrixXd out = theta(0) * f;
  if (theta.size() == 1) return out;
  Eigen::MatrixXd t_cur = a * (laplacian * f) - f;
  out += theta(1) * t_cur;
  for (Eigen::Index k = 2; k < theta.size(); ++k) {
    Eigen::MatrixXd t_next = 2.0 * (a * (laplacian * t_cur) - t_cur) - t_prev;
    out += theta(k) * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return out;
}

Eigen::MatrixXd chebyshev_filter(const Eigen::MatrixXd& laplacian, double lambda_max,
                                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& f) {
  Eigen::SparseMatrix<double> sparse = laplacian.sparseView(0.0, 0.0);
  return chebyshev_filter(sparse, lambda_max, theta, f);
}

ChebyshevWaveletBank fit_chebyshev_bank(const KernelPair& kernels, const std::vector<double>& scales,
                                        double lambda_max, std::size_t K) {
  ChebyshevWaveletBank bank;
  bank.kernels = kernels;
  bank.scales = scales;
  bank.lambda_max = lambda_max;
  bank.coefficients.push_back(fit_chebyshev_coeffs([&](double x) { return kernels.h(x); }, 1.0, lambda_max, K));
  for (double s : scales)
    bank.coefficients.push_back(fit_chebyshev_coeffs([&](double x) { return kernels.g(x); }, s, lambda_max, K));
  return bank;
}

WaveletCoefficients chebyshev_wavelet_transform(const ChebyshevWaveletBank& bank,
                                                const Eigen::MatrixXd& laplacian,
                                                const Eigen::MatrixXd& f) {
  Eigen::SparseMatrix<double> sparse = laplacian.sparseView(0.0, 0.0);
  WaveletCoefficients out;
  for (const auto& theta : bank.coefficients)
    out.coeffs.push_back(chebyshev_filter(sparse, bank.lambda_max, theta, f));
  return out;
}

Eigen::VectorXd impulse_response(const WaveletFrame& frame, std::size_t vertex, ImpulseMode mode) {
  if (vertex >= frame.size())
    throw InputError("vertex " + std::to_string(vertex) + " out of range (n = " + std::to_string(frame.size()) + ")");
  const auto v = static_cast<Eigen::Index>(vertex);
  switch (mode.kind) {
    case ImpulseMode::Kind::fourier:
      return frame.basis.eigenvectors.row(v).transpose();
    case ImpulseMode::Kind::scaling:
      return frame.operators[0].col(v);
    case ImpulseMode::Kind::wavelet:
      if (mode.scale_index < 1 || mode.scale_index >= frame.scale_count())
        throw InputError("wavelet scale index " + std::to_string(mode.scale_index) + " out of range");
      return frame.operators[mode.scale_index].col(v);
  }
  return {};
}

double energy_fraction_within(const Eigen::VectorXd& values, const std::vector<std::size_t>& hops, std::size_t radius) {
  if (hops.size() != static_cast<std::size_t>(values.size())) throw InputError("energy fraction: size mismatch");
  double inside = 0.0;
  const double total = values.squaredNorm();
  for (std::size_t i = 0; i < hops.size(); ++i)
    if (hops[i] <= radius) inside += values(static_cast<Eigen::Index>(i)) * values(static_cast<Eigen::Index>(i));
  if (total == 0.0) throw MathError("energy fraction of an all-zero response");
  return inside / total;
}

}  // namespace pw
