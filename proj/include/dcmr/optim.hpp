#pragma once

#include <cstdint>
#include <vector>

namespace dcmr {

struct AdamWConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

template <typename T>
struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Moment buffers shaped like `params`.
template <typename T>
AdamState<T> make_adam_state(const std::vector<std::vector<T>>& like);

/// One AdamW update with decoupled weight decay:
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p)
/// `params[i]` points at the i-th tensor's storage.
template <typename T>
void adamw_step(const std::vector<T*>& params, const std::vector<std::vector<T>>& grads, AdamState<T>& state,
                const AdamWConfig& cfg);

template <typename T>
double global_norm(const std::vector<std::vector<T>>& grads);

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns the pre-clip norm.
template <typename T>
double clip_global_norm(std::vector<std::vector<T>>& grads, double max_norm);

}  // namespace dcmr
