#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pointwavelet/nn/tensor.hpp"

namespace pw::nn {

// Differentiable primitives. Every op validates shapes (InputError) and
// rejects non-finite results (MathError).

Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n]
Tensor bmm(const Tensor& a, const Tensor& b);     // [g,m,k] x [g,k,n]
Tensor transpose(const Tensor& a);                // [m,n] -> [n,m]

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& x, const Tensor& bias);  // bias over the last axis
Tensor mul_bias(const Tensor& x, const Tensor& gain);  // gain over the last axis
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);

Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor relu(const Tensor& x);
// Elementwise f with derivative df.
Tensor map(const Tensor& x, const std::function<double(double)>& f, const std::function<double(double)>& df,
           const char* name = "map");

Tensor softmax(const Tensor& x);  // over the last axis
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);

// Max over `axis`; the gradient goes to the first maximal element.
Tensor max_pool(const Tensor& x, std::size_t axis);
// Rows (slices along axis 0) picked by index, and its adjoint.
Tensor gather(const Tensor& x, const std::vector<std::size_t>& index);
Tensor scatter_add(const Tensor& x, const std::vector<std::size_t>& index, std::size_t rows);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor l1_norm(const Tensor& x);
Tensor squared_norm(const Tensor& x);
// Mean softmax cross-entropy of [batch, classes] logits.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

Tensor l2_normalize(const Tensor& v);
// Orthogonal completion of a unit vector [n] -> [n,n] with first column v.
Tensor ortho_from_vector(const Tensor& q);

}  // namespace pw::nn
