#include "pointwavelet/nn/layers.hpp"

#include <cmath>

#include "pointwavelet/errors.hpp"

namespace pw::nn {

Tensor ParameterStore::add(const std::string& name, Shape shape, std::vector<double> values) {
  for (const auto& [existing, _] : entries_)
    if (existing == name) throw InputError("duplicate parameter name " + name);
  Tensor t = Tensor::parameter(std::move(shape), std::move(values));
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParameterStore::find(const std::string& name) const {
  for (const auto& [existing, t] : entries_)
    if (existing == name) return t;
  throw InputError("no parameter named " + name);
}

void ParameterStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.numel();
  return n;
}

std::vector<double> glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> w(fan_in * fan_out);
  for (auto& v : w) v = dist(rng);
  return w;
}

Linear::Linear(ParameterStore& store, const std::string& name, std::size_t in, std::size_t out,
               std::mt19937_64& rng)
    : in_(in), out_(out) {
  weight_ = store.add(name + ".weight", {in, out}, glorot_uniform(in, out, rng));
  bias_ = store.add(name + ".bias", {out}, std::vector<double>(out, 0.0));
}

Tensor Linear::operator()(const Tensor& x) const { return add_bias(matmul(x, weight_), bias_); }

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, std::size_t dim) {
  gamma_ = store.add(name + ".gamma", {dim}, std::vector<double>(dim, 1.0));
  beta_ = store.add(name + ".beta", {dim}, std::vector<double>(dim, 0.0));
}

Tensor LayerNorm::operator()(const Tensor& x) const { return layer_norm(x, gamma_, beta_); }

MultiHeadSelfAttention::MultiHeadSelfAttention(ParameterStore& store, const std::string& name, std::size_t dim,
                                               std::size_t heads, std::mt19937_64& rng)
    : dim_(dim), heads_(heads) {
  if (heads == 0 || dim % heads != 0) throw InputError("attention dim must be divisible by heads");
  query_ = Linear(store, name + ".query", dim, dim, rng);
  key_ = Linear(store, name + ".key", dim, dim, rng);
  value_ = Linear(store, name + ".value", dim, dim, rng);
  output_ = Linear(store, name + ".output", dim, dim, rng);
}

Tensor MultiHeadSelfAttention::operator()(const Tensor& x) const {
  if (x.rank() != 3 || x.dim(2) != dim_)
    throw InputError("attention expects [groups, tokens, " + std::to_string(dim_) + "], got " +
                     shape_string(x.shape()));
  const auto groups = x.dim(0), tokens = x.dim(1), head_dim = dim_ / heads_;
  Tensor flat = reshape(x, {groups * tokens, dim_});
  auto split = [&](const Tensor& t) {
    // [g*t, d] -> [g, t, h, hd] -> [g, h, t, hd] -> [g*h, t, hd]
    Tensor r = reshape(t, {groups, tokens, heads_, head_dim});
    return reshape(permute(r, {0, 2, 1, 3}), {groups * heads_, tokens, head_dim});
  };
  Tensor q = split(query_(flat));
  Tensor k = split(key_(flat));
  Tensor v = split(value_(flat));
  Tensor scores = scale(bmm(q, permute(k, {0, 2, 1})), 1.0 / std::sqrt(static_cast<double>(head_dim)));
  Tensor mixed = bmm(softmax(scores), v);  // [g*h, t, hd]
  Tensor merged = permute(reshape(mixed, {groups, heads_, tokens, head_dim}), {0, 2, 1, 3});
  Tensor out = output_(reshape(merged, {groups * tokens, dim_}));
  return reshape(out, {groups, tokens, dim_});
}

TransformerEncoderLayer::TransformerEncoderLayer(ParameterStore& store, const std::string& name, std::size_t dim,
                                                 std::size_t heads, std::size_t hidden, std::mt19937_64& rng) {
  attention_ = MultiHeadSelfAttention(store, name + ".attn", dim, heads, rng);
  norm1_ = LayerNorm(store, name + ".norm1", dim);
  ff1_ = Linear(store, name + ".ff1", dim, hidden, rng);
  ff2_ = Linear(store, name + ".ff2", hidden, dim, rng);
  norm2_ = LayerNorm(store, name + ".norm2", dim);
}

Tensor TransformerEncoderLayer::operator()(const Tensor& x) const {
  const Shape shape = x.shape();
  const std::size_t dim = shape.back();
  const std::size_t rows = x.numel() / dim;
  Tensor h = norm1_(add(x, attention_(x)));
  Tensor flat = reshape(h, {rows, dim});
  Tensor ff = ff2_(relu(ff1_(flat)));
  return reshape(norm2_(add(flat, ff)), shape);
}

Tensor activate(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
  }
  return x;
}

Tensor from_matrix(const Eigen::MatrixXd& m) {
  std::vector<double> v(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  return Tensor::constant({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(v));
}

Eigen::MatrixXd to_matrix(const Tensor& t) {
  if (t.rank() != 2) throw InputError("to_matrix expects a rank-2 tensor");
  Eigen::MatrixXd m(t.dim(0), t.dim(1));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i * t.dim(1) + j);
  return m;
}

namespace {

// Scales row i of f [n, c] by theta[i].
Tensor scale_rows(const Tensor& f, const Tensor& theta) {
  return transpose(mul_bias(transpose(f), theta));
}

}  // namespace

Tensor spectral_filter_fourier(const SpectralBasis& basis, const Tensor& theta, const Tensor& f, Activation act) {
  const auto n = basis.size();
  if (theta.rank() != 1 || theta.dim(0) != n) throw InputError("spectral filter: theta must have n entries");
  if (f.rank() != 2 || f.dim(0) != n) throw InputError("spectral filter: signal must be [n, c]");
  Tensor u = from_matrix(basis.eigenvectors);
  Tensor ut = from_matrix(basis.eigenvectors.transpose());
  return activate(matmul(u, scale_rows(matmul(ut, f), theta)), act);
}

Tensor spectral_filter_wavelet(const WaveletFrame& frame, const Tensor& theta, const Tensor& f, Activation act) {
  const auto n = frame.size();
  const auto scales = frame.scale_count();
  if (theta.rank() != 2 || theta.dim(0) != scales || theta.dim(1) != n)
    throw InputError("spectral filter: theta must be [1+J, n]");
  if (f.rank() != 2 || f.dim(0) != n) throw InputError("spectral filter: signal must be [n, c]");
  Tensor acc;
  for (std::size_t j = 0; j < scales; ++j) {
    Tensor psi = from_matrix(frame.operators[j]);
    Tensor row = reshape(gather(theta, {j}), {n});
    Tensor term = matmul(psi, scale_rows(matmul(psi, f), row));
    acc = acc.defined() ? add(acc, term) : term;
  }
  return activate(matmul(from_matrix(frame.inverse_gram()), acc), act);
}

}  // namespace pw::nn
