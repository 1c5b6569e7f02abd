#include "pointwavelet/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pointwavelet/errors.hpp"
#include "pointwavelet/graph.hpp"

namespace pw::nn {

namespace {

auto ei(std::size_t v) { return static_cast<Eigen::Index>(v); }

Tensor positions_tensor(const std::vector<const Points*>& clouds) {
  std::size_t rows = 0;
  for (auto* p : clouds) rows += static_cast<std::size_t>(p->rows());
  std::vector<double> v;
  v.reserve(rows * 3);
  for (auto* p : clouds)
    for (Eigen::Index i = 0; i < p->rows(); ++i)
      for (int d = 0; d < 3; ++d) v.push_back((*p)(i, d));
  return Tensor::constant({rows, 3}, std::move(v));
}

}  // namespace

std::vector<std::size_t> farthest_point_sampling(const Points& points, std::size_t m, std::size_t start) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (m > n) throw InputError("farthest point sampling: m = " + std::to_string(m) + " exceeds n = " + std::to_string(n));
  if (m == 0) return {};
  if (start >= n) throw InputError("farthest point sampling: start index out of range");
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> picked{start};
  picked.reserve(m);
  std::size_t current = start;
  while (picked.size() < m) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = (points.row(ei(i)) - points.row(ei(current))).squaredNorm();
      dist[i] = std::min(dist[i], d);
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    picked.push_back(best);
    current = best;
  }
  return picked;
}

std::size_t nearest_to_center_of_mass(const Points& points) {
  if (points.rows() == 0) throw InputError("empty point set");
  Eigen::RowVector3d center = points.colwise().mean();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double d = (points.row(i) - center).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

std::vector<std::size_t> nearest_points(const Points& points, const Eigen::RowVector3d& center, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1 || k > n) throw InputError("neighbourhood size k = " + std::to_string(k) + " must be in [1, " + std::to_string(n) + "]");
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = {(points.row(ei(i)) - center).squaredNorm(), i};
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t r = 0; r < k; ++r) out[r] = dist[r].second;
  return out;
}

const char* to_string(BasisMode mode) {
  switch (mode) {
    case BasisMode::exact_eig: return "exact_eig";
    case BasisMode::learned_ortho: return "learned_ortho";
    case BasisMode::free_ortho: return "free_ortho";
    case BasisMode::chebyshev: return "chebyshev";
  }
  return "unknown";
}

BasisMode basis_mode_from_string(const std::string& name) {
  for (auto m : {BasisMode::exact_eig, BasisMode::learned_ortho, BasisMode::free_ortho, BasisMode::chebyshev})
    if (name == to_string(m)) return m;
  throw InputError("unknown basis mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// Set abstraction

SetAbstraction::SetAbstraction(ParameterStore& store, const std::string& name, std::size_t in_channels,
                               SALayerConfig cfg, std::mt19937_64& rng)
    : cfg_(cfg), in_channels_(in_channels) {
  if (cfg.k < 1 || cfg.centroids < 1 || cfg.out_channels < 1) throw InputError("invalid SA configuration");
  mlp1_ = Linear(store, name + ".mlp1", in_channels + 3, cfg.out_channels, rng);
  mlp2_ = Linear(store, name + ".mlp2", cfg.out_channels, cfg.out_channels, rng);
}

SAPlan SetAbstraction::plan(const Points& points) const {
  const auto n = static_cast<std::size_t>(points.rows());
  if (cfg_.centroids > n) throw InputError("SA: more centroids than input points");
  if (cfg_.k > n) throw InputError("SA: k = " + std::to_string(cfg_.k) + " exceeds " + std::to_string(n) + " input points");
  SAPlan plan;
  auto picked = farthest_point_sampling(points, cfg_.centroids, nearest_to_center_of_mass(points));
  plan.centroids.resize(ei(picked.size()), 3);
  plan.groups.reserve(picked.size() * cfg_.k);
  plan.relative.reserve(picked.size() * cfg_.k * 3);
  for (std::size_t c = 0; c < picked.size(); ++c) {
    Eigen::RowVector3d center = points.row(ei(picked[c]));
    plan.centroids.row(ei(c)) = center;
    for (auto j : nearest_points(points, center, cfg_.k)) {
      plan.groups.push_back(j);
      for (int d = 0; d < 3; ++d) plan.relative.push_back(points(ei(j), d) - center(d));
    }
  }
  return plan;
}

Tensor SetAbstraction::operator()(const Tensor& feats, const std::vector<const SAPlan*>& plans, std::size_t n_in) const {
  if (feats.rank() != 2 || feats.dim(1) != in_channels_ || feats.dim(0) != plans.size() * n_in)
    throw InputError("SA: features must be [batch * " + std::to_string(n_in) + ", " + std::to_string(in_channels_) +
                     "], got " + shape_string(feats.shape()));
  std::vector<std::size_t> index;
  std::vector<double> relative;
  for (std::size_t b = 0; b < plans.size(); ++b) {
    for (auto j : plans[b]->groups) index.push_back(b * n_in + j);
    relative.insert(relative.end(), plans[b]->relative.begin(), plans[b]->relative.end());
  }
  const std::size_t rows = index.size();
  Tensor local = concat({Tensor::constant({rows, 3}, std::move(relative)), gather(feats, index)}, 1);
  Tensor h = relu(mlp2_(relu(mlp1_(local))));
  const std::size_t groups = rows / cfg_.k;
  return max_pool(reshape(h, {groups, cfg_.k, cfg_.out_channels}), 1);
}

std::pair<Points, Tensor> SetAbstraction::apply(const Points& points, const Tensor& feats) const {
  SAPlan p = plan(points);
  Tensor out = (*this)(feats, {&p}, static_cast<std::size_t>(points.rows()));
  return {p.centroids, out};
}

// ---------------------------------------------------------------------------
// WaveletFormer

WaveletFormer::WaveletFormer(ParameterStore& store, const std::string& name, WFLayerConfig cfg,
                             std::size_t local_size, std::mt19937_64& rng, double qeps_std, double theta_std,
                             double free_noise_std)
    : cfg_(cfg), n_(local_size) {
  if (cfg.J < 1) throw InputError("WaveletFormer: J must be at least 1");
  if (cfg.heads == 0 || cfg.dim % cfg.heads != 0) throw InputError("WaveletFormer: dim must be divisible by heads");
  if (n_ < 2) throw InputError("WaveletFormer: local graphs need at least two vertices");
  KernelPair kernels(cfg.family);
  scales_ = default_scales(kernels, cfg.J);

  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](std::size_t count, double stddev) {
    std::vector<double> v(count);
    for (auto& x : v) x = stddev * normal(rng);
    return v;
  };
  if (cfg.basis_mode == BasisMode::learned_ortho) {
    c_ = store.add(name + ".q_c", {1}, {1.0 / std::sqrt(static_cast<double>(n_))});
    q_eps_ = store.add(name + ".q_eps", {n_}, draw(n_, qeps_std));
    lambda_theta_ = store.add(name + ".lambda_theta", {n_ - 1}, draw(n_ - 1, theta_std));
  } else if (cfg.basis_mode == BasisMode::free_ortho) {
    Eigen::MatrixXd u0 = orthogonal_from_vector(Eigen::VectorXd::Constant(ei(n_), 1.0 / std::sqrt(static_cast<double>(n_))));
    std::vector<double> v(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) v[i * n_ + j] = u0(ei(i), ei(j)) + free_noise_std * normal(rng);
    free_u_ = store.add(name + ".u", {n_, n_}, std::move(v));
    lambda_theta_ = store.add(name + ".lambda_theta", {n_ - 1}, draw(n_ - 1, theta_std));
  }
  token_in_ = Linear(store, name + ".token_in", n_ * cfg.dim, cfg.dim, rng);
  for (std::size_t e = 0; e < cfg.encoders; ++e)
    encoders_.emplace_back(store, name + ".encoder" + std::to_string(e), cfg.dim, cfg.heads, 2 * cfg.dim, rng);
  token_out_ = Linear(store, name + ".token_out", (1 + cfg.J) * cfg.dim, cfg.dim, rng);
}

WFPlan WaveletFormer::plan(const Points& centroids) const {
  const auto m = static_cast<std::size_t>(centroids.rows());
  if (m < n_) throw InputError("WaveletFormer: fewer centroids than local graph size");
  WFPlan plan;
  plan.neighborhoods.reserve(m * n_);
  const bool needs_graph = cfg_.basis_mode == BasisMode::exact_eig || cfg_.basis_mode == BasisMode::chebyshev;
  std::optional<ChebyshevWaveletBank> bank;
  if (cfg_.basis_mode == BasisMode::chebyshev)
    bank = fit_chebyshev_bank(KernelPair(cfg_.family), scales_, 2.0, cfg_.chebyshev_order);
  const std::size_t scales = 1 + cfg_.J;
  if (needs_graph) plan.operators.reserve(m * scales * n_ * n_);
  for (std::size_t i = 0; i < m; ++i) {
    auto nbrs = nearest_points(centroids, centroids.row(ei(i)), n_);
    plan.neighborhoods.insert(plan.neighborhoods.end(), nbrs.begin(), nbrs.end());
    if (!needs_graph) continue;
    Points local(ei(n_), 3);
    for (std::size_t r = 0; r < n_; ++r) local.row(ei(r)) = centroids.row(ei(nbrs[r]));
    LocalGraph graph = build_knn_graph(local, std::min(cfg_.graph_k, n_ - 1));
    std::vector<Eigen::MatrixXd> ops;
    if (cfg_.basis_mode == BasisMode::exact_eig) {
      ops = build_frame(eigendecompose(graph.laplacian), KernelPair(cfg_.family), scales_).operators;
    } else {
      Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(ei(n_), ei(n_));
      for (const auto& theta : bank->coefficients)
        ops.push_back(chebyshev_filter(graph.laplacian, bank->lambda_max, theta, identity));
    }
    for (const auto& op : ops)
      for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t c = 0; c < n_; ++c) plan.operators.push_back(op(ei(r), ei(c)));
  }
  return plan;
}

Tensor WaveletFormer::learned_basis() const {
  if (cfg_.basis_mode == BasisMode::free_ortho) return free_u_;
  if (cfg_.basis_mode != BasisMode::learned_ortho) throw InputError("WaveletFormer: no trainable basis in this mode");
  Tensor ones = Tensor::constant({n_, 1}, std::vector<double>(n_, 1.0));
  Tensor q_ini = reshape(matmul(ones, reshape(c_, {1, 1})), {n_});
  return ortho_from_vector(l2_normalize(add(q_ini, q_eps_)));
}

Tensor WaveletFormer::learned_spectrum() const {
  if (!lambda_theta_.defined()) throw InputError("WaveletFormer: no trainable spectrum in this mode");
  Tensor raw = add_scalar(tanh(lambda_theta_), 1.0);
  std::vector<std::size_t> order(n_ - 1);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto values = raw.values();
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  Tensor sorted = gather(reshape(raw, {n_ - 1, 1}), order);
  return reshape(concat({Tensor::zeros({1, 1}), sorted}, 0), {n_});
}

Tensor WaveletFormer::learned_operators() const {
  Tensor u = learned_basis();
  Tensor ut = transpose(u);
  Tensor lambda = learned_spectrum();
  KernelPair kernels(cfg_.family);
  std::vector<Tensor> blocks;
  Tensor w0 = map(lambda, [kernels](double x) { return kernels.h(x); }, [kernels](double x) { return kernels.dh(x); }, "kernel_h");
  blocks.push_back(matmul(mul_bias(u, w0), ut));
  for (double s : scales_) {
    Tensor w = map(scale(lambda, s), [kernels](double x) { return kernels.g(x); },
                   [kernels](double x) { return kernels.dg(x); }, "kernel_g");
    blocks.push_back(matmul(mul_bias(u, w), ut));
  }
  return concat(blocks, 0);
}

Tensor WaveletFormer::qeps_l1() const {
  if (!q_eps_.defined()) throw InputError("WaveletFormer: q_eps exists only in learned_ortho mode");
  return l1_norm(q_eps_);
}

Tensor WaveletFormer::orthogonality_deviation() const {
  Tensor u = learned_basis();
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(ei(n_), ei(n_));
  return squared_norm(sub(from_matrix(eye), matmul(u, transpose(u))));
}

OrthoParam WaveletFormer::ortho_param() const {
  if (cfg_.basis_mode != BasisMode::learned_ortho) throw InputError("WaveletFormer: not in learned_ortho mode");
  OrthoParam p;
  p.c = c_.item();
  p.q_eps = Eigen::Map<const Eigen::VectorXd>(q_eps_.values().data(), ei(n_));
  p.lambda_theta = Eigen::Map<const Eigen::VectorXd>(lambda_theta_.values().data(), ei(n_ - 1));
  return p;
}

Tensor WaveletFormer::encode(const Tensor& tokens) const {
  Tensor x = tokens;
  for (const auto& enc : encoders_) x = enc(x);
  return x;
}

WaveletFormerTrace WaveletFormer::trace(const Tensor& feats, const std::vector<const WFPlan*>& plans,
                                        std::size_t m) const {
  const std::size_t dim = cfg_.dim;
  if (feats.rank() != 2 || feats.dim(1) != dim || feats.dim(0) != plans.size() * m)
    throw InputError("WaveletFormer: features must be [batch * " + std::to_string(m) + ", " + std::to_string(dim) +
                     "], got " + shape_string(feats.shape()));
  const std::size_t groups = plans.size() * m;
  const std::size_t scales = 1 + cfg_.J;
  std::vector<std::size_t> index;
  index.reserve(groups * n_);
  for (std::size_t b = 0; b < plans.size(); ++b)
    for (auto j : plans[b]->neighborhoods) index.push_back(b * m + j);
  Tensor local = reshape(gather(feats, index), {groups, n_, dim});

  Tensor coeffs;  // [groups, (1+J) n, dim]
  if (cfg_.basis_mode == BasisMode::exact_eig || cfg_.basis_mode == BasisMode::chebyshev) {
    std::vector<double> ops;
    ops.reserve(groups * scales * n_ * n_);
    for (auto* p : plans) {
      if (p->operators.size() != m * scales * n_ * n_) throw InputError("WaveletFormer: plan lacks local operators");
      ops.insert(ops.end(), p->operators.begin(), p->operators.end());
    }
    coeffs = bmm(Tensor::constant({groups, scales * n_, n_}, std::move(ops)), local);
  } else {
    // One shared operator: apply it to every neighbourhood with a single product.
    Tensor stacked = reshape(permute(local, {1, 0, 2}), {n_, groups * dim});
    Tensor applied = matmul(learned_operators(), stacked);
    coeffs = permute(reshape(applied, {scales * n_, groups, dim}), {1, 0, 2});
  }
  WaveletFormerTrace out;
  out.tokens_in = reshape(token_in_(reshape(coeffs, {groups * scales, n_ * dim})), {groups, scales, dim});
  out.tokens_out = encode(out.tokens_in);
  out.output = add(feats, token_out_(reshape(out.tokens_out, {groups, scales * dim})));
  return out;
}

Tensor WaveletFormer::operator()(const Tensor& feats, const std::vector<const WFPlan*>& plans, std::size_t m) const {
  return trace(feats, plans, m).output;
}

// ---------------------------------------------------------------------------
// Network

NetConfig NetConfig::desk(BasisMode mode) {
  NetConfig cfg;
  cfg.sa = {{64, 8, 32}, {16, 8, 64}, {1, 16, 128}};
  cfg.wf.encoders = 1;
  cfg.wf.heads = 4;
  cfg.wf.J = 3;
  cfg.wf.basis_mode = mode;
  cfg.wf.neighbors = 8;
  cfg.wf.graph_k = 4;
  return cfg;
}

PointWaveletNet::PointWaveletNet(NetConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.sa.empty()) throw InputError("network needs at least one SA stage");
  if (cfg_.sa.back().centroids != 1) throw InputError("the last SA stage must reduce to a single centroid");
  if (cfg_.classes < 2) throw InputError("network needs at least two classes");
  std::mt19937_64 rng(cfg_.seed);
  std::size_t channels = 3;
  for (std::size_t s = 0; s < cfg_.sa.size(); ++s) {
    const auto& sa = cfg_.sa[s];
    sa_.emplace_back(store_, "sa" + std::to_string(s), channels, sa, rng);
    channels = sa.out_channels;
    if (sa.centroids >= 2) {
      WFLayerConfig wf = cfg_.wf;
      wf.dim = channels;
      const std::size_t local = std::min(wf.neighbors, sa.centroids);
      wf_.emplace_back(WaveletFormer(store_, "wf" + std::to_string(s), wf, local, rng, cfg_.qeps_init_std,
                                     cfg_.theta_init_std, cfg_.free_u_noise_std));
    } else {
      wf_.emplace_back(std::nullopt);
    }
  }
  head1_ = Linear(store_, "head1", channels, cfg_.head_hidden, rng);
  head2_ = Linear(store_, "head2", cfg_.head_hidden, cfg_.classes, rng);
}

CloudPlan PointWaveletNet::plan(const Points& points) const {
  CloudPlan plan;
  plan.input = points;
  const Points* current = &plan.input;
  plan.sa.reserve(sa_.size());
  for (std::size_t s = 0; s < sa_.size(); ++s) {
    plan.sa.push_back(sa_[s].plan(*current));
    current = &plan.sa.back().centroids;
    plan.wf.push_back(wf_[s] ? std::optional<WFPlan>(wf_[s]->plan(*current)) : std::nullopt);
  }
  return plan;
}

Tensor PointWaveletNet::forward(const std::vector<const CloudPlan*>& batch) const {
  if (batch.empty()) throw InputError("empty batch");
  std::vector<const Points*> inputs;
  for (auto* p : batch) {
    if (p->input.rows() != batch.front()->input.rows()) throw InputError("batch clouds must share a point count");
    inputs.push_back(&p->input);
  }
  Tensor feats = positions_tensor(inputs);
  std::size_t n_in = static_cast<std::size_t>(batch.front()->input.rows());
  for (std::size_t s = 0; s < sa_.size(); ++s) {
    std::vector<const SAPlan*> sa_plans;
    for (auto* p : batch) sa_plans.push_back(&p->sa[s]);
    feats = sa_[s](feats, sa_plans, n_in);
    n_in = sa_[s].config().centroids;
    if (wf_[s]) {
      std::vector<const WFPlan*> wf_plans;
      for (auto* p : batch) wf_plans.push_back(&*p->wf[s]);
      feats = (*wf_[s])(feats, wf_plans, n_in);
    }
  }
  return head2_(relu(head1_(feats)));
}

std::vector<const WaveletFormer*> PointWaveletNet::wf_layers() const {
  std::vector<const WaveletFormer*> out;
  for (const auto& w : wf_)
    if (w) out.push_back(&*w);
  return out;
}

}  // namespace pw::nn
