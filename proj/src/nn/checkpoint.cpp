#include "pointwavelet/nn/checkpoint.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "pointwavelet/errors.hpp"
#include "pointwavelet/formats.hpp"

namespace pw::nn {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw InputError("unknown key '" + key + "' in " + where);
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json sa_json(const SALayerConfig& s) { return {{"centroids", s.centroids}, {"k", s.k}, {"out_channels", s.out_channels}}; }

json net_json(const NetConfig& c) {
  json sa = json::array();
  for (const auto& s : c.sa) sa.push_back(sa_json(s));
  return {{"sa", sa},
          {"wf",
           {{"encoders", c.wf.encoders},
            {"heads", c.wf.heads},
            {"J", c.wf.J},
            {"family", to_string(c.wf.family)},
            {"basis_mode", to_string(c.wf.basis_mode)},
            {"chebyshev_order", c.wf.chebyshev_order},
            {"neighbors", c.wf.neighbors},
            {"graph_k", c.wf.graph_k}}},
          {"classes", c.classes},
          {"head_hidden", c.head_hidden},
          {"seed", c.seed},
          {"qeps_init_std", c.qeps_init_std},
          {"theta_init_std", c.theta_init_std},
          {"free_u_noise_std", c.free_u_noise_std}};
}

void apply_net(const json& j, NetConfig& c) {
  reject_unknown(j,
                 {"sa", "wf", "classes", "head_hidden", "seed", "qeps_init_std", "theta_init_std", "free_u_noise_std"},
                 "network config");
  if (j.contains("sa")) {
    c.sa.clear();
    for (const auto& s : j.at("sa")) {
      reject_unknown(s, {"centroids", "k", "out_channels"}, "sa stage");
      SALayerConfig sc;
      read_if(s, "centroids", sc.centroids);
      read_if(s, "k", sc.k);
      read_if(s, "out_channels", sc.out_channels);
      c.sa.push_back(sc);
    }
  }
  if (j.contains("wf")) {
    const auto& w = j.at("wf");
    reject_unknown(w, {"encoders", "heads", "J", "family", "basis_mode", "chebyshev_order", "neighbors", "graph_k"},
                   "wf config");
    read_if(w, "encoders", c.wf.encoders);
    read_if(w, "heads", c.wf.heads);
    read_if(w, "J", c.wf.J);
    if (w.contains("family")) c.wf.family = kernel_family_from_string(w.at("family").get<std::string>());
    if (w.contains("basis_mode")) c.wf.basis_mode = basis_mode_from_string(w.at("basis_mode").get<std::string>());
    read_if(w, "chebyshev_order", c.wf.chebyshev_order);
    read_if(w, "neighbors", c.wf.neighbors);
    read_if(w, "graph_k", c.wf.graph_k);
  }
  read_if(j, "classes", c.classes);
  read_if(j, "head_hidden", c.head_hidden);
  read_if(j, "seed", c.seed);
  read_if(j, "qeps_init_std", c.qeps_init_std);
  read_if(j, "theta_init_std", c.theta_init_std);
  read_if(j, "free_u_noise_std", c.free_u_noise_std);
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string to_json(const NetConfig& cfg) { return net_json(cfg).dump(1); }

std::string to_json(const TrainRunConfig& cfg) {
  json train = {{"variant", to_string(cfg.train.variant)},
                {"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"learning_rate", cfg.train.learning_rate},
                {"momentum", cfg.train.momentum},
                {"clip_norm", cfg.train.clip_norm},
                {"seed", cfg.train.seed},
                {"beta", cfg.train.beta.value_or(default_beta(cfg.train.variant))}};
  json data = {{"train_per_class", cfg.dataset.train_per_class}, {"test_per_class", cfg.dataset.test_per_class},
               {"n_points", cfg.dataset.n_points},               {"noise_sigma", cfg.dataset.noise_sigma},
               {"seed", cfg.dataset.seed},                       {"classes", cfg.dataset.classes}};
  return json{{"net", net_json(cfg.net)}, {"train", train}, {"dataset", data}}.dump(1);
}

NetConfig net_config_from_json(const std::string& text) {
  NetConfig cfg = NetConfig::desk(BasisMode::learned_ortho);
  try {
    apply_net(parse(text, "network config"), cfg);
  } catch (const json::exception& e) {
    throw InputError(std::string("network config: ") + e.what());
  }
  return cfg;
}

TrainRunConfig train_run_config_from_json(const std::string& text) {
  const json j = parse(text, "training config");
  TrainRunConfig cfg;
  try {
    reject_unknown(j, {"net", "train", "dataset"}, "training config");
    if (j.contains("train")) {
      const auto& t = j.at("train");
      reject_unknown(t, {"variant", "epochs", "batch_size", "learning_rate", "momentum", "clip_norm", "seed", "beta"}, "train section");
      if (t.contains("variant")) cfg.train.variant = variant_from_string(t.at("variant").get<std::string>());
      read_if(t, "epochs", cfg.train.epochs);
      read_if(t, "batch_size", cfg.train.batch_size);
      read_if(t, "learning_rate", cfg.train.learning_rate);
      read_if(t, "momentum", cfg.train.momentum);
      read_if(t, "clip_norm", cfg.train.clip_norm);
      read_if(t, "seed", cfg.train.seed);
      if (t.contains("beta")) cfg.train.beta = t.at("beta").get<double>();
    }
    cfg.net = NetConfig::desk(basis_mode_for(cfg.train.variant));
    if (j.contains("net")) apply_net(j.at("net"), cfg.net);
    cfg.net.wf.basis_mode = basis_mode_for(cfg.train.variant);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      reject_unknown(d, {"train_per_class", "test_per_class", "n_points", "noise_sigma", "seed", "classes"},
                     "dataset section");
      read_if(d, "train_per_class", cfg.dataset.train_per_class);
      read_if(d, "test_per_class", cfg.dataset.test_per_class);
      read_if(d, "n_points", cfg.dataset.n_points);
      read_if(d, "noise_sigma", cfg.dataset.noise_sigma);
      read_if(d, "seed", cfg.dataset.seed);
      read_if(d, "classes", cfg.dataset.classes);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("training config: ") + e.what());
  }
  if (cfg.train.beta && *cfg.train.beta < 0.0) throw InputError("beta must be nonnegative");
  if (cfg.dataset.classes > cfg.net.classes)
    throw InputError("dataset has more classes than the network head");
  return cfg;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  binary::put_bytes(out, "PWCK");
  binary::put_u32(out, 1);
  binary::put_u64(out, ckpt.config_json.size());
  binary::put_bytes(out, ckpt.config_json);
  binary::put_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    binary::put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    binary::put_bytes(out, a.name);
    binary::put_u32(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) binary::put_u64(out, d);
    for (double v : a.values) binary::put_f64(out, v);
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  if (binary::get_bytes(in, 4) != "PWCK") throw InputError("not a checkpoint file (bad magic)");
  const auto version = binary::get_u32(in);
  if (version != 1) throw InputError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const auto len = binary::get_u64(in);
  if (len > (1u << 24)) throw InputError("checkpoint config block too large");
  ckpt.config_json = binary::get_bytes(in, len);
  const auto count = binary::get_u32(in);
  for (std::uint32_t t = 0; t < count; ++t) {
    NamedArray a;
    const auto name_len = binary::get_u32(in);
    if (name_len > 4096) throw InputError("checkpoint array name too long");
    a.name = binary::get_bytes(in, name_len);
    const auto rank = binary::get_u32(in);
    if (rank > 8) throw InputError("checkpoint array '" + a.name + "' has implausible rank");
    std::size_t total = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.shape.push_back(binary::get_u64(in));
      total *= a.shape.back();
    }
    if (total > (1u << 28)) throw InputError("checkpoint array '" + a.name + "' too large");
    a.values.resize(total);
    for (auto& v : a.values) v = binary::get_f64(in);
    ckpt.arrays.push_back(std::move(a));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const PointWaveletNet& net) {
  Checkpoint ckpt;
  ckpt.config_json = to_json(net.config());
  for (const auto& [name, t] : net.parameters().entries())
    ckpt.arrays.push_back({name, t.shape(), std::vector<double>(t.values().begin(), t.values().end())});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_checkpoint(in);
}

void restore_parameters(PointWaveletNet& net, const Checkpoint& ckpt) {
  auto& entries = net.parameters().entries();
  if (entries.size() != ckpt.arrays.size())
    throw InputError("checkpoint holds " + std::to_string(ckpt.arrays.size()) + " arrays, network expects " +
                     std::to_string(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor t = entries[i].second;
    const auto& a = ckpt.arrays[i];
    if (a.name != entries[i].first || a.shape != t.shape())
      throw InputError("checkpoint array '" + a.name + "' does not match parameter '" + entries[i].first + "'");
    std::copy(a.values.begin(), a.values.end(), t.mutable_values().begin());
  }
}

PointWaveletNet network_from_checkpoint(const Checkpoint& ckpt) {
  PointWaveletNet net(net_config_from_json(ckpt.config_json));
  restore_parameters(net, ckpt);
  return net;
}

OrthoParam ortho_param_from_checkpoint(const Checkpoint& ckpt, std::size_t wf_index) {
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  std::size_t seen = 0;
  for (std::size_t i = 0; i < ckpt.arrays.size(); ++i) {
    if (!ends_with(ckpt.arrays[i].name, ".q_c")) continue;
    if (seen++ != wf_index) continue;
    const std::string prefix = ckpt.arrays[i].name.substr(0, ckpt.arrays[i].name.size() - 4);
    const NamedArray* eps = nullptr;
    const NamedArray* theta = nullptr;
    for (const auto& a : ckpt.arrays) {
      if (a.name == prefix + ".q_eps") eps = &a;
      if (a.name == prefix + ".lambda_theta") theta = &a;
    }
    if (!eps || !theta) throw InputError("checkpoint layer " + prefix + " lacks q_eps or lambda_theta");
    OrthoParam p;
    p.c = ckpt.arrays[i].values.at(0);
    p.q_eps = Eigen::Map<const Eigen::VectorXd>(eps->values.data(), static_cast<Eigen::Index>(eps->values.size()));
    p.lambda_theta =
        Eigen::Map<const Eigen::VectorXd>(theta->values.data(), static_cast<Eigen::Index>(theta->values.size()));
    return p;
  }
  throw InputError("checkpoint has no learned orthogonal layer with index " + std::to_string(wf_index));
}

}  // namespace pw::nn
