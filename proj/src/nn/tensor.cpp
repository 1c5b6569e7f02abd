#include "pointwavelet/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "pointwavelet/errors.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pw::nn {

namespace {
thread_local bool g_grad_enabled = true;

#if defined(__GLIBC__)
// Tape buffers of a few MB are allocated and freed every step; keeping them on the
// heap instead of fresh mmap regions removes most page-fault time.
const bool g_allocator_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
  return true;
}();
#endif
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

std::vector<double>& Node::grad_buffer() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (pw::nn::numel(shape) != values.size())
    throw InputError("tensor value count " + std::to_string(values.size()) + " does not match shape " +
                     shape_string(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) {
  auto count = nn::numel(shape);
  return constant(std::move(shape), std::vector<double>(count, 0.0));
}

Tensor Tensor::scalar(double v) { return constant({1}, {v}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  t.node_->op = "parameter";
  return t;
}

std::span<const double> Tensor::grad() const {
  static thread_local std::vector<double> zeros;
  if (node_->grad.size() == node_->value.size()) return node_->grad;
  zeros.assign(node_->value.size(), 0.0);
  return zeros;
}

double Tensor::item() const {
  if (node_->value.size() != 1) throw InputError("item() on a tensor of shape " + shape_string(node_->shape));
  return node_->value[0];
}

void Tensor::zero_grad() { node_->grad.clear(); }

void Tensor::backward() const {
  if (node_->value.size() != 1) throw InputError("backward() needs a single-element tensor");
  // Iterative post-order DFS gives a topological order of the tape.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.size() == n->value.size()) n->backward_fn(*n);
  }
  // Release intermediate gradients; leaves keep theirs for the optimizer.
  for (Node* n : order)
    if (n->backward_fn) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
}

Tensor make_result(const char* op, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward) {
  for (double v : values) {
    if (!std::isfinite(v)) throw MathError(std::string("non-finite value produced by ") + op);
  }
  auto node = std::make_shared<Node>();
  node->op = op;
  node->shape = std::move(shape);
  node->value = std::move(values);
  bool needs = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.shared());
    node->backward_fn = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace pw::nn
