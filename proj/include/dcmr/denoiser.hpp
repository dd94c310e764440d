#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcmr/graph.hpp"
#include "dcmr/image.hpp"

namespace dcmr {

/// Scale knobs of the conditional noise estimator
///   eps_hat = E(F(x_t) + G(cond), H(t)).
/// F and G are input heads (G carries the dense residual blocks), H is a
/// learned embedding table and E is a U-Net whose residual blocks each add a
/// linear projection of H(t) per channel.
struct DenoiserConfig {
  int base_channels = 16;
  std::vector<int> channel_multipliers{1, 1, 2};
  int n_rrdb = 2;
  /// 0 selects 4 * base_channels.
  int time_embed_dim = 0;
  int T_max = 50;
  int in_h = 64;
  int in_w = 64;

  int depth() const { return static_cast<int>(channel_multipliers.size()); }
  int embed_dim() const { return time_embed_dim > 0 ? time_embed_dim : 4 * base_channels; }
  int channels(int level) const { return base_channels * channel_multipliers.at(level); }
  int growth() const { return std::max(1, base_channels / 2); }
  /// Throws InvalidInput on an inconsistent config.
  void validate() const;
  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

/// Full-scale architecture (C=128, six levels, ten dense residual blocks).
DenoiserConfig full_scale_config(int T_max, int size = 128);

enum class InitKind { fan_in_uniform, zeros, ones, normal };

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  InitKind init = InitKind::zeros;
  int fan_in = 1;
  std::size_t numel() const;
};

/// Every learnable tensor in a fixed order.
std::vector<TensorSpec> parameter_layout(const DenoiserConfig& cfg);
/// Closed-form parameter count, derived independently of parameter_layout.
std::size_t param_count(const DenoiserConfig& cfg);

template <typename T>
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<T> data;
  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

template <typename T>
struct ParamSet {
  DenoiserConfig config;
  std::vector<ParamTensor<T>> tensors;

  std::size_t count() const;
  std::size_t index_of(const std::string& name) const;
  const ParamTensor<T>& get(const std::string& name) const { return tensors[index_of(name)]; }
  ParamTensor<T>& get(const std::string& name) { return tensors[index_of(name)]; }
  /// Zero-filled tensors with the same layout (gradient or moment buffers).
  std::vector<std::vector<T>> zeros_like() const;
  bool all_finite() const;
  friend bool operator==(const ParamSet& a, const ParamSet& b) {
    return a.config == b.config && a.tensors == b.tensors;
  }

  void reindex();
  std::unordered_map<std::string, std::size_t> index;
};

template <typename T>
ParamSet<T> init_params(const DenoiserConfig& cfg, std::uint64_t seed);

template <typename To, typename From>
ParamSet<To> cast_params(const ParamSet<From>& p);

template <typename T>
struct Batch {
  std::vector<Image<T>> x_t;
  std::vector<Image<T>> cond;
  std::vector<int> t;
  std::vector<Image<T>> eps;
  std::size_t size() const { return t.size(); }
};

/// Output of G for a fixed condition image; reusable across timesteps.
template <typename T>
struct ConditionFeatures {
  Shape shape;
  std::vector<T> data;
};

template <typename T>
Image<T> forward(const ParamSet<T>& p, const Image<T>& x_t, const Image<T>& cond, int t);
template <typename T>
ConditionFeatures<T> encode_condition(const ParamSet<T>& p, const Image<T>& cond);
/// forward() with G(cond) precomputed; bit-identical to forward().
template <typename T>
Image<T> forward_with(const ParamSet<T>& p, const Image<T>& x_t, const ConditionFeatures<T>& cond, int t);

template <typename T>
T mse_eps_loss(const ParamSet<T>& p, const Batch<T>& batch);

template <typename T>
struct LossAndGrads {
  T loss = 0;
  std::vector<std::vector<T>> grads;
};

/// Exact gradient of mse_eps_loss with respect to every tensor.
template <typename T>
LossAndGrads<T> grads(const ParamSet<T>& p, const Batch<T>& batch);

}  // namespace dcmr
