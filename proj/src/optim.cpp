#include "dcmr/optim.hpp"

#include <cmath>

#include "dcmr/error.hpp"

namespace dcmr {

template <typename T>
AdamState<T> make_adam_state(const std::vector<std::vector<T>>& like) {
  AdamState<T> s;
  for (const auto& t : like) {
    s.m.emplace_back(t.size(), T(0));
    s.v.emplace_back(t.size(), T(0));
  }
  return s;
}

template <typename T>
void adamw_step(const std::vector<T*>& params, const std::vector<std::vector<T>>& grads, AdamState<T>& state,
                const AdamWConfig& cfg) {
  require(params.size() == grads.size() && grads.size() == state.m.size(), "adamw_step: tensor count mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i];
    const auto& g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    require(m.size() == g.size(), "adamw_step: tensor size mismatch");
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double gk = g[k];
      const double mk = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      const double vk = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = (mk / bc1) / (std::sqrt(vk / bc2) + cfg.eps) + cfg.weight_decay * p[k];
      p[k] = static_cast<T>(p[k] - cfg.learning_rate * update);
    }
  }
}

template <typename T>
double global_norm(const std::vector<std::vector<T>>& grads) {
  double s = 0;
  for (const auto& g : grads)
    for (T v : g) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

template <typename T>
double clip_global_norm(std::vector<std::vector<T>>& grads, double max_norm) {
  const double n = global_norm(grads);
  if (max_norm > 0 && n > max_norm) {
    const T scale = static_cast<T>(max_norm / n);
    for (auto& g : grads)
      for (T& v : g) v *= scale;
  }
  return n;
}

template AdamState<float> make_adam_state(const std::vector<std::vector<float>>&);
template AdamState<double> make_adam_state(const std::vector<std::vector<double>>&);
template void adamw_step(const std::vector<float*>&, const std::vector<std::vector<float>>&, AdamState<float>&,
                         const AdamWConfig&);
template void adamw_step(const std::vector<double*>&, const std::vector<std::vector<double>>&, AdamState<double>&,
                         const AdamWConfig&);
template double global_norm(const std::vector<std::vector<float>>&);
template double global_norm(const std::vector<std::vector<double>>&);
template double clip_global_norm(std::vector<std::vector<float>>&, double);
template double clip_global_norm(std::vector<std::vector<double>>&, double);

}  // namespace dcmr
