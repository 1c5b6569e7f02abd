#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pointwavelet/nn/layers.hpp"
#include "pointwavelet/ortho.hpp"
#include "pointwavelet/pointcloud.hpp"
#include "pointwavelet/wavelets.hpp"

namespace pw::nn {

// Greedy max-min selection beginning at `start`; indices in selection order.
std::vector<std::size_t> farthest_point_sampling(const Points& points, std::size_t m, std::size_t start);
// Index of the point closest to the centroid of mass (ties to the smaller index).
std::size_t nearest_to_center_of_mass(const Points& points);
// The k points nearest to `center` (the center itself included when present), nearest first.
std::vector<std::size_t> nearest_points(const Points& points, const Eigen::RowVector3d& center, std::size_t k);

struct SALayerConfig {
  std::size_t centroids = 64;
  std::size_t k = 8;
  std::size_t out_channels = 32;
};

enum class BasisMode { exact_eig, learned_ortho, free_ortho, chebyshev };
const char* to_string(BasisMode mode);
BasisMode basis_mode_from_string(const std::string& name);

struct WFLayerConfig {
  std::size_t encoders = 1;
  std::size_t dim = 32;
  std::size_t heads = 4;
  std::size_t J = 3;
  KernelFamily family = KernelFamily::mexican_hat;
  BasisMode basis_mode = BasisMode::learned_ortho;
  std::size_t chebyshev_order = 10;
  std::size_t neighbors = 8;  // vertices per local graph
  std::size_t graph_k = 4;    // k-NN inside a local graph
};

// Geometry of one cloud through one SA stage. Depends on positions only.
struct SAPlan {
  Points centroids;
  std::vector<std::size_t> groups;  // centroids * k input-point indices
  std::vector<double> relative;     // centroids * k * 3 offsets from the centroid
};

// Local graphs of one WF stage: neighbourhood indices into the centroid set and,
// for exact/chebyshev modes, the stacked [(1+J) n, n] operator of every neighbourhood.
struct WFPlan {
  std::vector<std::size_t> neighborhoods;  // centroids * n
  std::vector<double> operators;           // centroids * (1+J) n * n, empty for learned modes
};

class SetAbstraction {
 public:
  SetAbstraction() = default;
  SetAbstraction(ParameterStore& store, const std::string& name, std::size_t in_channels, SALayerConfig cfg,
                 std::mt19937_64& rng);

  SAPlan plan(const Points& points) const;
  // feats: [batch * n_in, in_channels] -> [batch * centroids, out_channels].
  Tensor operator()(const Tensor& feats, const std::vector<const SAPlan*>& plans, std::size_t n_in) const;
  // Single cloud convenience: returns the centroid positions and their features.
  std::pair<Points, Tensor> apply(const Points& points, const Tensor& feats) const;

  const SALayerConfig& config() const { return cfg_; }

 private:
  SALayerConfig cfg_;
  std::size_t in_channels_ = 0;
  Linear mlp1_, mlp2_;
};

struct WaveletFormerTrace {
  Tensor tokens_in;   // [groups, 1+J, dim]
  Tensor tokens_out;  // [groups, 1+J, dim]
  Tensor output;      // [groups, dim]
};

class WaveletFormer {
 public:
  WaveletFormer() = default;
  // `local_size` is the vertex count of every local graph this layer sees.
  WaveletFormer(ParameterStore& store, const std::string& name, WFLayerConfig cfg, std::size_t local_size,
                std::mt19937_64& rng, double qeps_std, double theta_std, double free_noise_std);

  WFPlan plan(const Points& centroids) const;
  Tensor operator()(const Tensor& feats, const std::vector<const WFPlan*>& plans, std::size_t m) const;
  WaveletFormerTrace trace(const Tensor& feats, const std::vector<const WFPlan*>& plans, std::size_t m) const;
  // Transformer stage alone on [groups, tokens, dim].
  Tensor encode(const Tensor& tokens) const;

  // Stacked [(1+J) n, n] operator built from the trainable basis (learned modes only).
  Tensor learned_operators() const;
  Tensor learned_basis() const;     // U as [n, n]
  Tensor learned_spectrum() const;  // [n], ascending, first entry 0
  Tensor qeps_l1() const;
  Tensor orthogonality_deviation() const;  // ||I - U U^T||_F^2

  // Snapshot of the trainable basis state (learned_ortho mode).
  OrthoParam ortho_param() const;
  const WFLayerConfig& config() const { return cfg_; }
  std::size_t local_size() const { return n_; }
  const std::vector<double>& scales() const { return scales_; }

 private:
  WFLayerConfig cfg_;
  std::size_t n_ = 0;
  std::vector<double> scales_;
  Tensor c_, q_eps_, lambda_theta_, free_u_;
  Linear token_in_, token_out_;
  std::vector<TransformerEncoderLayer> encoders_;
};

struct NetConfig {
  std::vector<SALayerConfig> sa;
  WFLayerConfig wf;  // dim is taken from each stage's out_channels
  std::size_t classes = 3;
  std::size_t head_hidden = 64;
  std::uint64_t seed = 1;
  double qeps_init_std = 0.05;
  double theta_init_std = 0.5;
  double free_u_noise_std = 0.05;

  // Proportional shrink of the full-size tables: centroids 64/16/1, k 8 (the
  // final stage groups all 16 remaining points), channels 32/64/128,
  // 1 encoder, 4 heads, J = 3.
  static NetConfig desk(BasisMode mode);
};

struct CloudPlan {
  Points input;
  std::vector<SAPlan> sa;
  std::vector<std::optional<WFPlan>> wf;
};

class PointWaveletNet {
 public:
  explicit PointWaveletNet(NetConfig cfg);

  CloudPlan plan(const Points& points) const;
  Tensor forward(const std::vector<const CloudPlan*>& batch) const;  // logits [batch, classes]

  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  const NetConfig& config() const { return cfg_; }
  // WaveletFormer layers in network order (stages with at least two centroids).
  std::vector<const WaveletFormer*> wf_layers() const;

 private:
  NetConfig cfg_;
  ParameterStore store_;
  std::vector<SetAbstraction> sa_;
  std::vector<std::optional<WaveletFormer>> wf_;
  Linear head1_, head2_;
};

}  // namespace pw::nn
