#include "dcmr/config.hpp"

#include <fstream>

#include "dcmr/io.hpp"

namespace dcmr {

Json to_json(const DenoiserConfig& c) {
  return Json{{"base_channels", c.base_channels}, {"channel_multipliers", c.channel_multipliers},
              {"n_rrdb", c.n_rrdb},               {"time_embed_dim", c.time_embed_dim},
              {"T_max", c.T_max},                 {"in_h", c.in_h},
              {"in_w", c.in_w}};
}

DenoiserConfig denoiser_from_json(const Json& j) {
  DenoiserConfig c;
  c.base_channels = j.at("base_channels").get<int>();
  c.channel_multipliers = j.at("channel_multipliers").get<std::vector<int>>();
  c.n_rrdb = j.at("n_rrdb").get<int>();
  c.time_embed_dim = j.at("time_embed_dim").get<int>();
  c.T_max = j.at("T_max").get<int>();
  c.in_h = j.at("in_h").get<int>();
  c.in_w = j.at("in_w").get<int>();
  return c;
}

Json to_json(const TrainConfig& c) {
  return Json{{"T", c.T},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"seed", c.seed},
              {"flip_prob", c.flip_prob},
              {"clip_norm", c.clip_norm},
              {"early_stop", c.early_stop}};
}

TrainConfig train_from_json(const Json& j) {
  TrainConfig c;
  c.T = j.at("T").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.flip_prob = j.at("flip_prob").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.early_stop = j.at("early_stop").get<bool>();
  return c;
}

std::string first_difference(const Json& a, const Json& b, const std::string& prefix) {
  if (a.is_object() && b.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it) {
      const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
      if (!b.contains(it.key())) return key;
      if (auto d = first_difference(it.value(), b.at(it.key()), key); !d.empty()) return d;
    }
    for (auto it = b.begin(); it != b.end(); ++it)
      if (!a.contains(it.key())) return prefix.empty() ? it.key() : prefix + "." + it.key();
    return {};
  }
  return a == b ? std::string{} : (prefix.empty() ? std::string("<root>") : prefix);
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  const DenoiserConfig d;
  const TrainConfig t;
  const SampleConfig s;
  const MetricConfig m;
  c.tree_ = Json{
      {"datagen",
       {{"height", 64},
        {"width", 64},
        {"accel", 4},
        {"acs_lines", -1},
        {"coil_mode", "single"},
        {"kspace_pad", 0},
        {"resize", 0},
        {"smooth_phase", false},
        {"n_ellipses", 6},
        {"n_train", 64},
        {"n_valid", 16},
        {"seed", 1000}}},
      {"denoiser",
       {{"base_channels", d.base_channels},
        {"channel_multipliers", d.channel_multipliers},
        {"n_rrdb", d.n_rrdb},
        {"time_embed_dim", d.time_embed_dim}}},
      {"trainer", to_json(t)},
      {"sampler",
       {{"T", s.T},
        {"R", s.R},
        {"seed", s.seed},
        {"record_trajectory", s.record_trajectory},
        {"literal_update", s.literal_update},
        {"paper_mismatch", false},
        {"write_raw", false},
        {"ablate_T", {5, 10, 25, 50}},
        {"ablate_R", {1, 2, 4, 8}}}},
      {"metrics",
       {{"ssim_window", m.ssim_window},
        {"ssim_sigma", m.ssim_sigma},
        {"ssim_k1", m.ssim_k1},
        {"ssim_k2", m.ssim_k2},
        {"clamp", m.clamp}}}};
  return c;
}

namespace {

bool same_kind(const Json& def, const Json& v) {
  if (def.is_number_float()) return v.is_number();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    for (const auto& e : v)
      if (!e.is_number_integer()) return false;
    return true;
  }
  return def.type() == v.type();
}

}  // namespace

void RunConfig::merge(const Json& overlay, const std::string& where) {
  if (!overlay.is_object()) throw ConfigError(where + ": top level must be an object");
  for (auto sec = overlay.begin(); sec != overlay.end(); ++sec) {
    if (!tree_.contains(sec.key())) throw ConfigError(where + ": unknown section '" + sec.key() + "'");
    if (!sec.value().is_object()) throw ConfigError(where + ": section '" + sec.key() + "' must be an object");
    for (auto kv = sec.value().begin(); kv != sec.value().end(); ++kv) set(sec.key() + "." + kv.key(), kv.value());
  }
}

RunConfig RunConfig::from_json(const Json& j) {
  RunConfig c = defaults();
  c.merge(j, "config");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(io::read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const EnvironmentError& e) {
    throw ConfigError(e.what());
  }
  RunConfig c = defaults();
  c.merge(j, path.string());
  return c;
}

void RunConfig::set(const std::string& dotted_key, const Json& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ConfigError("config key must be section.key: " + dotted_key);
  const std::string sec = dotted_key.substr(0, dot), key = dotted_key.substr(dot + 1);
  if (!tree_.contains(sec)) throw ConfigError("unknown config section '" + sec + "'");
  if (!tree_[sec].contains(key)) throw ConfigError("unknown config key '" + dotted_key + "'");
  Json& slot = tree_[sec][key];
  if (!same_kind(slot, value)) throw ConfigError("config key '" + dotted_key + "' expects " + slot.type_name());
  slot = slot.is_number_float() ? Json(value.get<double>()) : value;
}

const Json& RunConfig::get(const std::string& dotted_key) const {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) throw ConfigError("config key must be section.key: " + dotted_key);
  const std::string sec = dotted_key.substr(0, dot), key = dotted_key.substr(dot + 1);
  if (!tree_.contains(sec) || !tree_.at(sec).contains(key)) throw ConfigError("unknown config key '" + dotted_key + "'");
  return tree_.at(sec).at(key);
}

void RunConfig::apply_override(const std::string& assignment) {
  std::string a = assignment;
  if (a.rfind("--", 0) == 0) a = a.substr(2);
  const auto eq = a.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like --section.key=value: " + assignment);
  const std::string key = a.substr(0, eq), text = a.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set(key, value);
}

void RunConfig::save(const std::filesystem::path& path) const { io::write_file_atomic(path, dump()); }

PairSpec RunConfig::pair_spec() const {
  const Json& d = tree_.at("datagen");
  PairSpec s;
  s.height = d.at("height").get<int>();
  s.width = d.at("width").get<int>();
  s.accel = d.at("accel").get<int>();
  s.acs_lines = d.at("acs_lines").get<int>();
  try {
    s.coil_mode = CoilMode::parse(d.at("coil_mode").get<std::string>());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("datagen.coil_mode: ") + e.what());
  }
  s.kspace_pad = d.at("kspace_pad").get<int>();
  s.resize = d.at("resize").get<int>();
  s.smooth_phase = d.at("smooth_phase").get<bool>();
  s.phantom.n_ellipses = d.at("n_ellipses").get<int>();
  if (s.height < 8 || s.width < 8) throw ConfigError("datagen: height and width must be >= 8");
  if (s.accel < 1 || s.accel > s.height) throw ConfigError("datagen.accel must lie in [1, height]");
  return s;
}

int RunConfig::n_train() const { return tree_.at("datagen").at("n_train").get<int>(); }
int RunConfig::n_valid() const { return tree_.at("datagen").at("n_valid").get<int>(); }
std::uint64_t RunConfig::data_seed() const { return tree_.at("datagen").at("seed").get<std::uint64_t>(); }

DenoiserConfig RunConfig::denoiser(int h, int w, int T) const {
  const Json& d = tree_.at("denoiser");
  DenoiserConfig c;
  c.base_channels = d.at("base_channels").get<int>();
  c.channel_multipliers = d.at("channel_multipliers").get<std::vector<int>>();
  c.n_rrdb = d.at("n_rrdb").get<int>();
  c.time_embed_dim = d.at("time_embed_dim").get<int>();
  c.T_max = T;
  c.in_h = h;
  c.in_w = w;
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

TrainConfig RunConfig::train() const {
  TrainConfig c = train_from_json(tree_.at("trainer"));
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

SampleConfig RunConfig::sample() const {
  const Json& s = tree_.at("sampler");
  SampleConfig c;
  c.T = s.at("T").get<int>();
  c.R = s.at("R").get<int>();
  c.seed = s.at("seed").get<std::uint64_t>();
  c.record_trajectory = s.at("record_trajectory").get<bool>();
  c.literal_update = s.at("literal_update").get<bool>();
  if (s.at("paper_mismatch").get<bool>()) c.T = 10 * train().T;
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

MetricConfig RunConfig::metrics() const {
  const Json& m = tree_.at("metrics");
  MetricConfig c;
  c.ssim_window = m.at("ssim_window").get<int>();
  c.ssim_sigma = m.at("ssim_sigma").get<double>();
  c.ssim_k1 = m.at("ssim_k1").get<double>();
  c.ssim_k2 = m.at("ssim_k2").get<double>();
  c.clamp = m.at("clamp").get<bool>();
  try {
    c.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::vector<int> RunConfig::ablate_T() const { return tree_.at("sampler").at("ablate_T").get<std::vector<int>>(); }
std::vector<int> RunConfig::ablate_R() const { return tree_.at("sampler").at("ablate_R").get<std::vector<int>>(); }

}  // namespace dcmr
