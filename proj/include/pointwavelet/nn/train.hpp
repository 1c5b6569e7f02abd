#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pointwavelet/nn/model.hpp"
#include "pointwavelet/pointcloud.hpp"

namespace pw::nn {

// exact: eigendecomposed local graphs; L: learned orthogonal basis with the
// ||q_eps||_1 penalty; U: free matrix with the ||I - U U^T||_F^2 penalty;
// Che: Chebyshev-filtered local graphs.
enum class Variant { exact, L, U, Che };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& name);
BasisMode basis_mode_for(Variant v);
// 0.05 for L, 1.0 for U, 0 otherwise.
double default_beta(Variant v);

// Per WaveletFormer layer: ||q_eps||_1 (L), ||I - U U^T||_F^2 (U); empty for exact/Che.
std::vector<Tensor> layer_regularizers(const PointWaveletNet& net, Variant v);

// task + beta * sum(regs) for L and U; the task loss itself for exact and Che.
Tensor total_loss(const Tensor& task_loss, Variant v, const std::vector<Tensor>& regs, double beta);

struct TrainConfig {
  Variant variant = Variant::L;
  std::optional<double> beta;  // defaults per variant
  std::size_t epochs = 20;
  std::size_t batch_size = 16;
  double learning_rate = 0.005;
  double momentum = 0.9;
  // Rescale the full gradient to this global L2 norm when it is larger; 0 disables.
  double clip_norm = 1.0;
  std::uint64_t seed = 7;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double task_loss = 0.0;  // mean over the epoch's steps
  std::vector<double> reg;  // per WaveletFormer layer, mean over the epoch's steps
  double train_acc = 0.0;
  double test_acc = 0.0;
  // Realized learned eigenvalues stayed inside [0, 2) at every step of the epoch.
  bool spectrum_in_range = true;
};

class SgdMomentum {
 public:
  SgdMomentum(ParameterStore& params, double learning_rate, double momentum, double clip_norm = 0.0);
  // Returns the gradient norm before clipping.
  double step();

 private:
  ParameterStore& params_;
  double lr_, momentum_, clip_norm_;
  std::vector<std::vector<double>> velocity_;
};

std::vector<CloudPlan> plan_all(const PointWaveletNet& net, const std::vector<PointCloud>& clouds);
std::vector<int> predict(const PointWaveletNet& net, const std::vector<CloudPlan>& plans, std::size_t batch_size);
double accuracy(const std::vector<int>& predicted, const std::vector<PointCloud>& clouds);

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Minibatch SGD with momentum over precomputed geometry plans. Deterministic per seed.
std::vector<EpochMetrics> train_toy(PointWaveletNet& net, const std::vector<PointCloud>& train,
                                    const std::vector<PointCloud>& test, const TrainConfig& cfg,
                                    const EpochCallback& on_epoch = {});

// epoch,task_loss,reg_wf<i>...,train_acc,test_acc with round-trip precision.
void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& history, std::size_t wf_layers);

}  // namespace pw::nn
