#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcmr/datagen.hpp"
#include "dcmr/denoiser.hpp"
#include "dcmr/metrics.hpp"
#include "dcmr/sampler.hpp"
#include "dcmr/trainer.hpp"

namespace dcmr {

using Json = nlohmann::json;

Json to_json(const DenoiserConfig& c);
DenoiserConfig denoiser_from_json(const Json& j);
Json to_json(const TrainConfig& c);
TrainConfig train_from_json(const Json& j);

/// Name of the first field where two configs differ, or empty.
std::string first_difference(const Json& a, const Json& b, const std::string& prefix = "");

/// Merged configuration tree with sections datagen, denoiser, trainer,
/// sampler and metrics. Keys and value types are fixed by the defaults;
/// anything else is rejected with ConfigError.
class RunConfig {
 public:
  /// Desk-scale profile: 64x64 slices, T = 50, C = 16, 64 train / 16 valid pairs, accel 4.
  static RunConfig defaults();
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig from_json(const Json& j);

  /// Applies "section.key=value"; the value is parsed as JSON, falling back to a string.
  void apply_override(const std::string& assignment);
  void set(const std::string& dotted_key, const Json& value);
  const Json& get(const std::string& dotted_key) const;

  void save(const std::filesystem::path& path) const;
  std::string dump() const { return tree_.dump(2) + "\n"; }
  const Json& tree() const { return tree_; }

  PairSpec pair_spec() const;
  int n_train() const;
  int n_valid() const;
  std::uint64_t data_seed() const;
  /// Architecture for data of size h x w trained with T steps.
  DenoiserConfig denoiser(int h, int w, int T) const;
  TrainConfig train() const;
  SampleConfig sample() const;
  MetricConfig metrics() const;
  std::vector<int> ablate_T() const;
  std::vector<int> ablate_R() const;

  friend bool operator==(const RunConfig& a, const RunConfig& b) { return a.tree_ == b.tree_; }

 private:
  void merge(const Json& overlay, const std::string& where);
  Json tree_;
};

}  // namespace dcmr
