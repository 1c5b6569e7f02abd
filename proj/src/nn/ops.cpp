#include "pointwavelet/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include <Eigen/Core>

#include "pointwavelet/errors.hpp"
#include "pointwavelet/ortho.hpp"

namespace pw::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

auto ei(std::size_t v) { return static_cast<Eigen::Index>(v); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw InputError(msg);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                      shape_string(b.shape()));
}

std::size_t last_dim(const Tensor& x, const char* op) {
  require(x.rank() >= 1, std::string(op) + ": tensor needs at least one axis");
  return x.shape().back();
}

Tensor unary(const char* op, const Tensor& x, const std::function<double(double)>& f,
             std::function<double(double, double)> dfdx_from_xy) {
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
  return make_result(op, x.shape(), std::move(out), {x}, [d = std::move(dfdx_from_xy)](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * d(in.value[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          "matmul: incompatible shapes " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  MMap(out.data(), ei(m), ei(n)).noalias() = CMap(a.values().data(), ei(m), ei(k)) * CMap(b.values().data(), ei(k), ei(n));
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    CMap dc(self.grad.data(), ei(m), ei(n));
    if (A.requires_grad)
      MMap(A.grad_buffer().data(), ei(m), ei(k)).noalias() += dc * CMap(B.value.data(), ei(k), ei(n)).transpose();
    if (B.requires_grad)
      MMap(B.grad_buffer().data(), ei(k), ei(n)).noalias() += CMap(A.value.data(), ei(m), ei(k)).transpose() * dc;
  });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  require(a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(1),
          "bmm: incompatible shapes " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  const auto g = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  std::vector<double> out(g * m * n);
  for (std::size_t i = 0; i < g; ++i) {
    MMap(out.data() + i * m * n, ei(m), ei(n)).noalias() =
        CMap(a.values().data() + i * m * k, ei(m), ei(k)) * CMap(b.values().data() + i * k * n, ei(k), ei(n));
  }
  return make_result("bmm", {g, m, n}, std::move(out), {a, b}, [g, m, k, n](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    for (std::size_t i = 0; i < g; ++i) {
      CMap dc(self.grad.data() + i * m * n, ei(m), ei(n));
      if (A.requires_grad)
        MMap(A.grad_buffer().data() + i * m * k, ei(m), ei(k)).noalias() +=
            dc * CMap(B.value.data() + i * k * n, ei(k), ei(n)).transpose();
      if (B.requires_grad)
        MMap(B.grad_buffer().data() + i * k * n, ei(k), ei(n)).noalias() +=
            CMap(A.value.data() + i * m * k, ei(m), ei(k)).transpose() * dc;
    }
  });
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose: expects a matrix");
  return permute(a, {1, 0});
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto& g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& in = self.inputs[k];
      if (!in->requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      auto& g = in->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    if (A.requires_grad) {
      auto& g = A.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * B.value[i];
    }
    if (B.requires_grad) {
      auto& g = B.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * A.value[i];
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const auto c = last_dim(x, "add_bias");
  require(bias.rank() == 1 && bias.dim(0) == c, "add_bias: bias length must equal the last axis");
  std::vector<double> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias.values()[i % c];
  return make_result("add_bias", x.shape(), std::move(out), {x, bias}, [c](Node& self) {
    Node& X = *self.inputs[0];
    Node& B = *self.inputs[1];
    if (X.requires_grad) {
      auto& g = X.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (B.requires_grad) {
      auto& g = B.grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % c] += self.grad[i];
    }
  });
}

Tensor mul_bias(const Tensor& x, const Tensor& gain) {
  const auto c = last_dim(x, "mul_bias");
  require(gain.rank() == 1 && gain.dim(0) == c, "mul_bias: gain length must equal the last axis");
  std::vector<double> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= gain.values()[i % c];
  return make_result("mul_bias", x.shape(), std::move(out), {x, gain}, [c](Node& self) {
    Node& X = *self.inputs[0];
    Node& G = *self.inputs[1];
    if (X.requires_grad) {
      auto& g = X.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * G.value[i % c];
    }
    if (G.requires_grad) {
      auto& g = G.grad_buffer();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % c] += self.grad[i] * X.value[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary("scale", x, [factor](double v) { return factor * v; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
  return unary("add_scalar", x, [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Tensor tanh(const Tensor& x) {
  return unary("tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& x) {
  return unary("exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor map(const Tensor& x, const std::function<double(double)>& f, const std::function<double(double)>& df,
           const char* name) {
  return unary(name, x, f, [df](double v, double) { return df(v); });
}

Tensor softmax(const Tensor& x) {
  const auto c = last_dim(x, "softmax");
  const auto rows = x.numel() / c;
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * c;
    double* o = out.data() + r * c;
    double mx = *std::max_element(in, in + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < c; ++j) o[j] /= total;
  }
  return make_result("softmax", x.shape(), std::move(out), {x}, [c, rows](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * c;
      const double* dy = self.grad.data() + r * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) g[r * c + j] += y[j] * (dy[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto c = last_dim(x, "layer_norm");
  require(gamma.rank() == 1 && gamma.dim(0) == c && beta.rank() == 1 && beta.dim(0) == c,
          "layer_norm: gamma/beta length must equal the last axis");
  const auto rows = x.numel() / c;
  auto normalized = std::make_shared<std::vector<double>>(x.numel());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.numel());
  auto xv = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += in[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(c);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < c; ++j) {
      double xh = (in[j] - mu) * rs;
      (*normalized)[r * c + j] = xh;
      out[r * c + j] = xh * gamma.values()[j] + beta.values()[j];
    }
  }
  return make_result("layer_norm", x.shape(), std::move(out), {x, gamma, beta},
                     [c, rows, normalized, rstd](Node& self) {
                       Node& X = *self.inputs[0];
                       Node& G = *self.inputs[1];
                       Node& B = *self.inputs[2];
                       const auto& xh = *normalized;
                       if (G.requires_grad) {
                         auto& g = G.grad_buffer();
                         for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % c] += self.grad[i] * xh[i];
                       }
                       if (B.requires_grad) {
                         auto& g = B.grad_buffer();
                         for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % c] += self.grad[i];
                       }
                       if (!X.requires_grad) return;
                       auto& g = X.grad_buffer();
                       const double inv_c = 1.0 / static_cast<double>(c);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double mean_d = 0.0, mean_dx = 0.0;
                         for (std::size_t j = 0; j < c; ++j) {
                           double d = self.grad[r * c + j] * G.value[j];
                           mean_d += d;
                           mean_dx += d * xh[r * c + j];
                         }
                         mean_d *= inv_c;
                         mean_dx *= inv_c;
                         for (std::size_t j = 0; j < c; ++j) {
                           double d = self.grad[r * c + j] * G.value[j];
                           g[r * c + j] += (*rstd)[r] * (d - mean_d - xh[r * c + j] * mean_dx);
                         }
                       }
                     });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const Shape& ref = parts.front().shape();
  require(axis < ref.size(), "concat: axis out of range");
  Shape out_shape = ref;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    require(p.rank() == ref.size(), "concat: rank mismatch");
    for (std::size_t d = 0; d < ref.size(); ++d)
      require(d == axis || p.dim(d) == ref[d], "concat: shapes differ off the concatenation axis");
    out_shape[axis] += p.dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= ref[d];
  for (std::size_t d = axis + 1; d < ref.size(); ++d) inner *= ref[d];
  const std::size_t out_chunk = out_shape[axis] * inner;
  std::vector<double> out(numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t chunk = p.dim(axis) * inner;
    offsets.push_back(offset);
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(p.values().data() + o * chunk, chunk, out.data() + o * out_chunk + offset);
    offset += chunk;
  }
  return make_result("concat", out_shape, std::move(out), parts, [outer, out_chunk, offsets](Node& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      Node& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      auto& g = in.grad_buffer();
      const std::size_t chunk = g.size() / outer;
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < chunk; ++i) g[o * chunk + i] += self.grad[o * out_chunk + offsets[k] + i];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(numel(shape) == x.numel(),
          "reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const auto rank = x.rank();
  require(axes.size() == rank, "permute: axis list must match rank");
  std::vector<bool> used(rank, false);
  for (auto a : axes) {
    require(a < rank && !used[a], "permute: axes must be a permutation");
    used[a] = true;
  }
  Shape out_shape(rank);
  for (std::size_t d = 0; d < rank; ++d) out_shape[d] = x.dim(axes[d]);
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t d = rank; d-- > 1;) in_strides[d - 1] = in_strides[d] * x.dim(d);

  const std::size_t count = x.numel();
  auto source = std::make_shared<std::vector<std::size_t>>(count);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d) src += idx[d] * in_strides[axes[d]];
    (*source)[flat] = src;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  std::vector<double> out(count);
  auto xv = x.values();
  for (std::size_t i = 0; i < count; ++i) out[i] = xv[(*source)[i]];
  return make_result("permute", std::move(out_shape), std::move(out), {x}, [source](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[(*source)[i]] += self.grad[i];
  });
}

Tensor max_pool(const Tensor& x, std::size_t axis) {
  require(axis < x.rank(), "max_pool: axis out of range");
  require(x.dim(axis) > 0, "max_pool: empty pooling axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= x.dim(d);
  for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.dim(d);
  const std::size_t span = x.dim(axis);
  Shape out_shape;
  for (std::size_t d = 0; d < x.rank(); ++d)
    if (d != axis) out_shape.push_back(x.dim(d));
  if (out_shape.empty()) out_shape.push_back(1);
  auto argmax = std::make_shared<std::vector<std::size_t>>(outer * inner);
  std::vector<double> out(outer * inner);
  auto xv = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      std::size_t best = o * span * inner + i;
      for (std::size_t s = 1; s < span; ++s) {
        std::size_t at = (o * span + s) * inner + i;
        if (xv[at] > xv[best]) best = at;  // strict: ties stay on the lowest index
      }
      out[o * inner + i] = xv[best];
      (*argmax)[o * inner + i] = best;
    }
  }
  return make_result("max_pool", std::move(out_shape), std::move(out), {x}, [argmax](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[(*argmax)[i]] += self.grad[i];
  });
}

Tensor gather(const Tensor& x, const std::vector<std::size_t>& index) {
  require(x.rank() >= 1, "gather: tensor needs at least one axis");
  const std::size_t rows = x.dim(0);
  const std::size_t width = rows == 0 ? 0 : x.numel() / rows;
  for (auto i : index) require(i < rows, "gather: index " + std::to_string(i) + " out of range");
  Shape out_shape = x.shape();
  out_shape[0] = index.size();
  std::vector<double> out(index.size() * width);
  auto xv = x.values();
  for (std::size_t r = 0; r < index.size(); ++r)
    std::copy_n(xv.data() + index[r] * width, width, out.data() + r * width);
  auto idx = std::make_shared<std::vector<std::size_t>>(index);
  return make_result("gather", std::move(out_shape), std::move(out), {x}, [idx, width](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t r = 0; r < idx->size(); ++r)
      for (std::size_t c = 0; c < width; ++c) g[(*idx)[r] * width + c] += self.grad[r * width + c];
  });
}

Tensor scatter_add(const Tensor& x, const std::vector<std::size_t>& index, std::size_t rows) {
  require(x.rank() >= 1 && x.dim(0) == index.size(), "scatter_add: one index per input row required");
  const std::size_t width = index.empty() ? 0 : x.numel() / index.size();
  for (auto i : index) require(i < rows, "scatter_add: index " + std::to_string(i) + " out of range");
  Shape out_shape = x.shape();
  out_shape[0] = rows;
  std::vector<double> out(rows * width, 0.0);
  auto xv = x.values();
  for (std::size_t r = 0; r < index.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) out[index[r] * width + c] += xv[r * width + c];
  auto idx = std::make_shared<std::vector<std::size_t>>(index);
  return make_result("scatter_add", std::move(out_shape), std::move(out), {x}, [idx, width](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t r = 0; r < idx->size(); ++r)
      for (std::size_t c = 0; c < width; ++c) g[r * width + c] += self.grad[(*idx)[r] * width + c];
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result("sum", {1}, {total}, {x}, [](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  require(x.numel() > 0, "mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor l1_norm(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += std::abs(v);
  return make_result("l1_norm", {1}, {total}, {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      double v = in.value[i];
      g[i] += self.grad[0] * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
    }
  });
}

Tensor squared_norm(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v * v;
  return make_result("squared_norm", {1}, {total}, {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * self.grad[0] * in.value[i];
  });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require(logits.rank() == 2, "cross_entropy: logits must be [batch, classes]");
  const auto batch = logits.dim(0), classes = logits.dim(1);
  require(labels.size() == batch, "cross_entropy: one label per row required");
  auto probs = std::make_shared<std::vector<double>>(logits.numel());
  double loss = 0.0;
  auto lv = logits.values();
  for (std::size_t b = 0; b < batch; ++b) {
    require(labels[b] >= 0 && static_cast<std::size_t>(labels[b]) < classes, "cross_entropy: label out of range");
    const double* row = lv.data() + b * classes;
    double mx = *std::max_element(row, row + classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) total += ((*probs)[b * classes + c] = std::exp(row[c] - mx));
    for (std::size_t c = 0; c < classes; ++c) (*probs)[b * classes + c] /= total;
    loss += -(row[labels[b]] - mx - std::log(total));
  }
  loss /= static_cast<double>(batch);
  auto lab = std::make_shared<std::vector<int>>(labels);
  return make_result("cross_entropy", {1}, {loss}, {logits}, [probs, lab, batch, classes](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const double w = self.grad[0] / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < classes; ++c) {
        double target = static_cast<int>(c) == (*lab)[b] ? 1.0 : 0.0;
        g[b * classes + c] += w * ((*probs)[b * classes + c] - target);
      }
  });
}

Tensor l2_normalize(const Tensor& v) {
  require(v.rank() == 1, "l2_normalize: expects a vector");
  double norm = 0.0;
  for (double x : v.values()) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw MathError("l2_normalize: zero vector");
  std::vector<double> out(v.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v.values()[i] / norm;
  return make_result("l2_normalize", v.shape(), std::move(out), {v}, [norm](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += self.grad[i] * self.value[i];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += (self.grad[i] - self.value[i] * dot) / norm;
  });
}

Tensor ortho_from_vector(const Tensor& q) {
  require(q.rank() == 1, "ortho_from_vector: expects a vector");
  const auto n = q.dim(0);
  Eigen::VectorXd qv = Eigen::Map<const Eigen::VectorXd>(q.values().data(), ei(n));
  RowMat u = pw::orthogonal_from_vector(qv);
  std::vector<double> out(u.data(), u.data() + u.size());
  return make_result("ortho_from_vector", {n, n}, std::move(out), {q}, [n](Node& self) {
    Node& Q = *self.inputs[0];
    const double* q = Q.value.data();
    CMap g(self.grad.data(), ei(n), ei(n));
    double tail = 0.0;
    for (std::size_t k = 1; k < n; ++k) tail += q[k] * q[k];
    const double factor = (q[0] - 1.0) / tail;
    // t = sum_{i,j>=1} G_ij q_i q_j
    double t = 0.0;
    for (std::size_t i = 1; i < n; ++i)
      for (std::size_t j = 1; j < n; ++j) t += g(ei(i), ei(j)) * q[i] * q[j];
    auto& dq = Q.grad_buffer();
    for (std::size_t m = 0; m < n; ++m) dq[m] += g(ei(m), 0);
    dq[0] += t / tail;
    for (std::size_t m = 1; m < n; ++m) {
      double r = 0.0;
      for (std::size_t j = 1; j < n; ++j) r += (g(ei(m), ei(j)) + g(ei(j), ei(m))) * q[j];
      dq[m] += -g(0, ei(m)) + factor * r - 2.0 * q[m] * t * (q[0] - 1.0) / (tail * tail);
    }
  });
}

}  // namespace pw::nn
