#pragma once

#include <cstdint>
#include <vector>

#include "dcmr/denoiser.hpp"
#include "dcmr/schedule.hpp"

namespace dcmr {

struct SampleConfig {
  int T = 50;
  int R = 4;
  std::uint64_t seed = 0;
  bool record_trajectory = false;
  /// Use the leading factor sqrt(alpha_t) exactly as printed instead of 1/sqrt(alpha_t).
  bool literal_update = false;

  void validate() const;
  friend bool operator==(const SampleConfig&, const SampleConfig&) = default;
};

/// Embedding row for inference step t when sampling with T_infer steps on a
/// model whose table has T_max rows: round(t * T_max / T_infer) clamped to
/// [1, T_max]. Identity when T_infer == T_max.
int table_index(int t, int T_infer, int T_max);

/// x_{t-1} = alpha_t^{-1/2} (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat)
///           + [t > 1] sqrt(posterior_variance_t) * z
template <typename T>
Image<T> reverse_update(const Image<T>& x_t, const Image<T>& eps_hat, int t, const Image<T>& z,
                        const DiffusionSchedule& sched, bool literal = false);

/// One reverse step with eps_hat from the network.
RealImage reverse_step(const ParamSet<float>& p, const RealImage& x_t, const RealImage& cond, int t,
                       const RealImage& z, const DiffusionSchedule& sched, bool literal = false);

struct SampleOptions {
  bool literal_update = false;
  /// When non-null, receives x_t for t = T, T - k, ... with k = ceil(T / 10), and x_0.
  std::vector<RealImage>* trajectory = nullptr;
};

/// Runs t = T..1 from x_T ~ N(0, I). Returns the raw (unclamped) x_0.
RealImage sample_one(const ParamSet<float>& p, const RealImage& cond, const DiffusionSchedule& sched,
                     std::uint64_t seed, const SampleOptions& opts = {});

/// Mean of R sample_one runs seeded seed+1 .. seed+R.
RealImage ensemble_sample(const ParamSet<float>& p, const RealImage& cond, const DiffusionSchedule& sched, int R,
                          std::uint64_t seed, const SampleOptions& opts = {});

/// Pixelwise mean of equally shaped images, accumulated in double.
RealImage mean_image(const std::vector<RealImage>& images);

}  // namespace dcmr
