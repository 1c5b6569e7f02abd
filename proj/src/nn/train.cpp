#include "pointwavelet/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "pointwavelet/errors.hpp"

namespace pw::nn {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::exact: return "exact";
    case Variant::L: return "L";
    case Variant::U: return "U";
    case Variant::Che: return "che";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "exact") return Variant::exact;
  if (name == "L" || name == "l") return Variant::L;
  if (name == "U" || name == "u") return Variant::U;
  if (name == "che" || name == "Che" || name == "cheby") return Variant::Che;
  throw InputError("unknown variant '" + name + "' (expected exact, L, U or che)");
}

BasisMode basis_mode_for(Variant v) {
  switch (v) {
    case Variant::exact: return BasisMode::exact_eig;
    case Variant::L: return BasisMode::learned_ortho;
    case Variant::U: return BasisMode::free_ortho;
    case Variant::Che: return BasisMode::chebyshev;
  }
  return BasisMode::exact_eig;
}

double default_beta(Variant v) {
  if (v == Variant::L) return 0.05;
  if (v == Variant::U) return 1.0;
  return 0.0;
}

std::vector<Tensor> layer_regularizers(const PointWaveletNet& net, Variant v) {
  std::vector<Tensor> regs;
  if (v != Variant::L && v != Variant::U) return regs;
  for (const auto* wf : net.wf_layers()) regs.push_back(v == Variant::L ? wf->qeps_l1() : wf->orthogonality_deviation());
  return regs;
}

Tensor total_loss(const Tensor& task_loss, Variant v, const std::vector<Tensor>& regs, double beta) {
  if (v == Variant::exact || v == Variant::Che || regs.empty()) return task_loss;
  if (beta < 0.0) throw InputError("beta must be nonnegative");
  Tensor acc = regs.front();
  for (std::size_t i = 1; i < regs.size(); ++i) acc = add(acc, regs[i]);
  return add(task_loss, scale(acc, beta));
}

SgdMomentum::SgdMomentum(ParameterStore& params, double learning_rate, double momentum, double clip_norm)
    : params_(params), lr_(learning_rate), momentum_(momentum), clip_norm_(clip_norm) {
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw InputError("momentum must lie in [0, 1)");
  if (clip_norm < 0.0) throw InputError("clip norm must be nonnegative");
  for (const auto& [_, t] : params_.entries()) velocity_.emplace_back(t.numel(), 0.0);
}

double SgdMomentum::step() {
  auto& entries = params_.entries();
  double squared = 0.0;
  for (const auto& [_, t] : entries)
    for (double g : t.grad()) squared += g * g;
  const double norm = std::sqrt(squared);
  const double factor = (clip_norm_ > 0.0 && norm > clip_norm_) ? clip_norm_ / norm : 1.0;
  for (std::size_t p = 0; p < entries.size(); ++p) {
    Tensor t = entries[p].second;
    auto g = t.grad();
    auto w = t.mutable_values();
    auto& v = velocity_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] + factor * g[i];
      w[i] -= lr_ * v[i];
    }
  }
  return norm;
}

std::vector<CloudPlan> plan_all(const PointWaveletNet& net, const std::vector<PointCloud>& clouds) {
  std::vector<CloudPlan> plans;
  plans.reserve(clouds.size());
  for (const auto& c : clouds) plans.push_back(net.plan(c.positions));
  return plans;
}

std::vector<int> predict(const PointWaveletNet& net, const std::vector<CloudPlan>& plans, std::size_t batch_size) {
  NoGradGuard no_grad;
  std::vector<int> out;
  out.reserve(plans.size());
  for (std::size_t begin = 0; begin < plans.size(); begin += batch_size) {
    std::vector<const CloudPlan*> batch;
    for (std::size_t i = begin; i < std::min(plans.size(), begin + batch_size); ++i) batch.push_back(&plans[i]);
    Tensor logits = net.forward(batch);
    const std::size_t classes = logits.dim(1);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto row = logits.values().subspan(b * classes, classes);
      out.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
    }
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<PointCloud>& clouds) {
  if (clouds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < clouds.size(); ++i) hits += (clouds[i].label && *clouds[i].label == predicted[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(clouds.size());
}

namespace {

void check_labels(const std::vector<PointCloud>& clouds, std::size_t classes, const char* split) {
  for (const auto& c : clouds) {
    if (!c.label) throw InputError(std::string(split) + " set contains an unlabeled cloud");
    if (*c.label < 0 || static_cast<std::size_t>(*c.label) >= classes)
      throw InputError(std::string(split) + " label " + std::to_string(*c.label) + " outside the network's " +
                       std::to_string(classes) + " classes");
  }
}

bool learned_spectrum_in_range(const PointWaveletNet& net) {
  NoGradGuard no_grad;
  for (const auto* wf : net.wf_layers()) {
    auto mode = wf->config().basis_mode;
    if (mode != BasisMode::learned_ortho && mode != BasisMode::free_ortho) continue;
    Tensor lambda = wf->learned_spectrum();
    for (double v : lambda.values())
      if (!(v >= 0.0 && v < 2.0)) return false;
  }
  return true;
}

}  // namespace

std::vector<EpochMetrics> train_toy(PointWaveletNet& net, const std::vector<PointCloud>& train,
                                    const std::vector<PointCloud>& test, const TrainConfig& cfg,
                                    const EpochCallback& on_epoch) {
  if (train.empty()) throw InputError("training set is empty");
  if (cfg.batch_size == 0) throw InputError("batch size must be positive");
  const std::size_t classes = net.config().classes;
  check_labels(train, classes, "training");
  check_labels(test, classes, "test");
  std::set<int> seen;
  for (const auto& c : train) seen.insert(*c.label);
  if (seen.size() < 2) throw InputError("training needs at least two classes");
  if (basis_mode_for(cfg.variant) != net.config().wf.basis_mode)
    throw InputError(std::string("network basis mode ") + to_string(net.config().wf.basis_mode) +
                     " does not match variant " + to_string(cfg.variant));
  const double beta = cfg.beta.value_or(default_beta(cfg.variant));

  const auto train_plans = plan_all(net, train);
  const auto test_plans = plan_all(net, test);
  SgdMomentum optimizer(net.parameters(), cfg.learning_rate, cfg.momentum, cfg.clip_norm);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<EpochMetrics> history;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics m;
    m.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batches) {
      std::vector<const CloudPlan*> batch;
      std::vector<int> labels;
      for (std::size_t i = begin; i < std::min(order.size(), begin + cfg.batch_size); ++i) {
        batch.push_back(&train_plans[order[i]]);
        labels.push_back(*train[order[i]].label);
      }
      try {
        Tensor task = cross_entropy(net.forward(batch), labels);
        auto regs = layer_regularizers(net, cfg.variant);
        if (m.reg.empty()) m.reg.assign(regs.size(), 0.0);
        for (std::size_t r = 0; r < regs.size(); ++r) m.reg[r] += regs[r].item();
        Tensor loss = total_loss(task, cfg.variant, regs, beta);
        if (!std::isfinite(loss.item())) throw MathError("loss is not finite");
        net.parameters().zero_grad();
        loss.backward();
        optimizer.step();
        loss_sum += task.item();
      } catch (const MathError& e) {
        throw MathError("training diverged at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batches) +
                        ": " + e.what());
      }
      m.spectrum_in_range = m.spectrum_in_range && learned_spectrum_in_range(net);
    }
    m.task_loss = loss_sum / static_cast<double>(batches);
    for (auto& r : m.reg) r /= static_cast<double>(batches);
    m.train_acc = accuracy(predict(net, train_plans, cfg.batch_size), train);
    m.test_acc = test.empty() ? 0.0 : accuracy(predict(net, test_plans, cfg.batch_size), test);
    history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return history;
}

void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& history, std::size_t wf_layers) {
  const std::size_t regs = history.empty() ? wf_layers : history.front().reg.size();
  out << "epoch,task_loss";
  for (std::size_t i = 0; i < regs; ++i) out << ",reg_wf" << i;
  out << ",train_acc,test_acc\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& m : history) {
    out << m.epoch << ',' << m.task_loss;
    for (double r : m.reg) out << ',' << r;
    out << ',' << m.train_acc << ',' << m.test_acc << '\n';
  }
}

}  // namespace pw::nn
