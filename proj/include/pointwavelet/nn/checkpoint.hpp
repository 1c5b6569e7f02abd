#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pointwavelet/nn/model.hpp"
#include "pointwavelet/nn/train.hpp"
#include "pointwavelet/ortho.hpp"

namespace pw::nn {

// Dataset recipe for the synthetic sphere/cube/torus task.
struct SynthDatasetSpec {
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  std::size_t n_points = 256;
  double noise_sigma = 0.02;
  std::uint64_t seed = 2024;
  std::size_t classes = 3;
};

struct TrainRunConfig {
  NetConfig net = NetConfig::desk(BasisMode::learned_ortho);
  TrainConfig train;
  SynthDatasetSpec dataset;
};

// JSON (de)serialization. Missing keys keep their defaults; unknown keys are rejected.
// The "variant" key selects the network basis mode as well.
std::string to_json(const NetConfig& cfg);
std::string to_json(const TrainRunConfig& cfg);
NetConfig net_config_from_json(const std::string& text);
TrainRunConfig train_run_config_from_json(const std::string& text);

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  std::string config_json;  // echo of the network configuration
  std::vector<NamedArray> arrays;
};

// Little-endian layout:
//   "PWCK" | u32 version = 1 | u64 config length | config JSON bytes | u32 array count |
//   per array: u32 name length | name bytes | u32 rank | rank x u64 dims | f64 values (row-major).
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const PointWaveletNet& net);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies every stored parameter into `net`; names and shapes must match exactly.
void restore_parameters(PointWaveletNet& net, const Checkpoint& ckpt);
PointWaveletNet network_from_checkpoint(const Checkpoint& ckpt);

// The orthogonal parameterization of WaveletFormer layer `wf_index` (network order).
OrthoParam ortho_param_from_checkpoint(const Checkpoint& ckpt, std::size_t wf_index);

}  // namespace pw::nn
