#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pointwavelet/graph.hpp"
#include "pointwavelet/nn/ops.hpp"
#include "pointwavelet/nn/tensor.hpp"
#include "pointwavelet/wavelets.hpp"

namespace pw::nn {

// Named trainable tensors in registration order.
class ParameterStore {
 public:
  Tensor add(const std::string& name, Shape shape, std::vector<double> values);
  Tensor find(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

std::vector<double> glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;  // [rows, in] -> [rows, out]
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

 private:
  Tensor weight_, bias_;
  std::size_t in_ = 0, out_ = 0;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const;

 private:
  Tensor gamma_, beta_;
};

// Multi-head self-attention over [groups, tokens, dim]; no masking, no positions.
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(ParameterStore& store, const std::string& name, std::size_t dim, std::size_t heads,
                         std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;

 private:
  Linear query_, key_, value_, output_;
  std::size_t dim_ = 0, heads_ = 1;
};

// Post-norm encoder block: x = LN(x + MHSA(x)); x = LN(x + FF(x)).
class TransformerEncoderLayer {
 public:
  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(ParameterStore& store, const std::string& name, std::size_t dim, std::size_t heads,
                          std::size_t hidden, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;

 private:
  MultiHeadSelfAttention attention_;
  LayerNorm norm1_, norm2_;
  Linear ff1_, ff2_;
};

enum class Activation { identity, relu, tanh };
Tensor activate(const Tensor& x, Activation act);

// sigma(U diag(theta) U^T f) with a constant basis; theta is [n].
Tensor spectral_filter_fourier(const SpectralBasis& basis, const Tensor& theta, const Tensor& f, Activation act);
// sigma(P sum_j Psi_j diag(theta_j) Psi_j f) with P = (Psi^T Psi)^{-1}; theta is [1+J, n].
Tensor spectral_filter_wavelet(const WaveletFrame& frame, const Tensor& theta, const Tensor& f, Activation act);

// Constant [rows, cols] tensor from an Eigen matrix.
Tensor from_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd to_matrix(const Tensor& t);

}  // namespace pw::nn
