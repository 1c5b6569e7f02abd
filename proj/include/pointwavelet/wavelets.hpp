#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pointwavelet/graph.hpp"

namespace pw {

enum class KernelFamily { mexican_hat, meyer };

const char* to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

// Low-pass scaling kernel h and band-pass wavelet kernel g, both on [0, inf).
class KernelPair {
 public:
  explicit KernelPair(KernelFamily family) : family_(family) {}

  KernelFamily family() const { return family_; }
  double h(double x) const;
  double g(double x) const;
  double dh(double x) const;
  double dg(double x) const;
  // Argument where g attains its maximum; used to place scales.
  double g_peak() const;

 private:
  KernelFamily family_;
};

// h(x) = exp(-x^4), g(x) = x exp(-x).
KernelPair mexican_hat_kernels();
// Piecewise trigonometric pair; g is the modulus of the complex Meyer wavelet.
KernelPair meyer_kernels();
// Ramp used by the Meyer pair: clamp(x, 0, 1).
double meyer_ramp(double x);

// Ascending scales s_j = peak / t_j with t_j log-spaced from lambda_max down
// to lambda_max / 20, so the band-pass peaks tile the spectrum.
std::vector<double> select_scales(double lambda_max, std::size_t J, double peak = 1.0);

// Default scales for a family on a normalized Laplacian spectrum [0, 2].
std::vector<double> default_scales(const KernelPair& kernels, std::size_t J, double lambda_max = 2.0);

// p(x) = h(x)^2 + sum_j g(s_j x)^2.
double frame_function(const KernelPair& kernels, const std::vector<double>& scales, double x);

struct WaveletFrame {
  SpectralBasis basis;
  KernelPair kernels{KernelFamily::mexican_hat};
  std::vector<double> scales;
  // responses(j, i) = h(lambda_i) for j = 0, g(s_j lambda_i) for j >= 1.
  Eigen::MatrixXd responses;
  // Psi_0, Psi_{s_1}, ..., Psi_{s_J}: U diag(responses.row(j)) U^T.
  std::vector<Eigen::MatrixXd> operators;
  Eigen::VectorXd frame_values;
  std::uint64_t id = 0;

  std::size_t scale_count() const { return operators.size(); }
  std::size_t size() const { return basis.size(); }
  // (U p^{-1} U^T), the inverse Gram matrix of the stacked operator.
  Eigen::MatrixXd inverse_gram() const;
};

// Throws MathError when p(lambda_i) <= 1e-12 for some eigenvalue.
WaveletFrame build_frame(SpectralBasis basis, KernelPair kernels, std::vector<double> scales);

struct WaveletCoefficients {
  std::vector<Eigen::MatrixXd> coeffs;  // (1+J) blocks of n x c
  std::uint64_t frame_id = 0;           // 0 when the producing frame is unknown
};

WaveletCoefficients wavelet_transform(const WaveletFrame& frame, const Eigen::MatrixXd& f);
// Least-squares reconstruction U p^{-1} U^T sum_j Psi_j c_j.
Eigen::MatrixXd inverse_wavelet_transform(const WaveletFrame& frame, const WaveletCoefficients& coeffs);

struct FrameSample {
  double lambda;
  double h2;
  std::vector<double> g2;
  double p;
};

struct FrameReport {
  double min_p = 0.0;
  double argmin_lambda = 0.0;
  std::vector<FrameSample> samples;
};

FrameReport frame_check(const KernelPair& kernels, const std::vector<double>& scales,
                        const std::vector<double>& grid);
// `count` equally spaced points on [0, lambda_max], both ends included.
std::vector<double> uniform_grid(double lambda_max, std::size_t count);
void write_frame_csv(std::ostream& out, const FrameReport& report);

Eigen::MatrixXd graph_fourier(const SpectralBasis& basis, const Eigen::MatrixXd& f);
Eigen::MatrixXd inverse_graph_fourier(const SpectralBasis& basis, const Eigen::MatrixXd& f_hat);

// U diag(theta) U^T f.
Eigen::MatrixXd spectral_convolution(const SpectralBasis& basis, const Eigen::VectorXd& theta,
                                     const Eigen::MatrixXd& f);

// Coefficients of the degree-K Chebyshev interpolant of x -> kernel(scale * x) on [0, lambda_max].
Eigen::VectorXd fit_chebyshev_coeffs(const std::function<double(double)>& kernel, double scale,
                                     double lambda_max, std::size_t K);
// Evaluates sum_k theta_k T_k(2x / lambda_max - 1).
double chebyshev_eval(const Eigen::VectorXd& theta, double lambda_max, double x);

// sum_k theta_k T_k(2L/lambda_max - I) f by the three-term recurrence.
Eigen::MatrixXd chebyshev_filter(const Eigen::SparseMatrix<double>& laplacian, double lambda_max,
                                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& f);
Eigen::MatrixXd chebyshev_filter(const Eigen::MatrixXd& laplacian, double lambda_max,
                                 const Eigen::VectorXd& theta, const Eigen::MatrixXd& f);

// Polynomial stand-ins for Psi_0, Psi_{s_1}.. built from Chebyshev fits of degree K.
struct ChebyshevWaveletBank {
  KernelPair kernels{KernelFamily::mexican_hat};
  std::vector<double> scales;
  double lambda_max = 2.0;
  std::vector<Eigen::VectorXd> coefficients;  // 1+J fits: h, then g(s_j .)
};

ChebyshevWaveletBank fit_chebyshev_bank(const KernelPair& kernels, const std::vector<double>& scales,
                                        double lambda_max, std::size_t K);
WaveletCoefficients chebyshev_wavelet_transform(const ChebyshevWaveletBank& bank,
                                                const Eigen::MatrixXd& laplacian,
                                                const Eigen::MatrixXd& f);

struct ImpulseMode {
  enum class Kind { fourier, scaling, wavelet };
  Kind kind = Kind::scaling;
  std::size_t scale_index = 0;  // 1-based j for wavelet mode

  static ImpulseMode fourier() { return {Kind::fourier, 0}; }
  static ImpulseMode scaling() { return {Kind::scaling, 0}; }
  static ImpulseMode wavelet(std::size_t j) { return {Kind::wavelet, j}; }
};

// Signed response of delta_v: U^T delta_v (fourier), Psi_0 delta_v, or Psi_{s_j} delta_v.
Eigen::VectorXd impulse_response(const WaveletFrame& frame, std::size_t vertex, ImpulseMode mode);

// Share of sum(values^2) carried by vertices at most `radius` hops away.
double energy_fraction_within(const Eigen::VectorXd& values, const std::vector<std::size_t>& hops, std::size_t radius);

}  // namespace pw
