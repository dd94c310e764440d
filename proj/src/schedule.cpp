#include "dcmr/schedule.hpp"

#include <cmath>
#include <string>

namespace dcmr {

double linear_beta(int t, int T) {
  require(T >= 1, "linear_beta: T must be >= 1");
  require(t >= 1 && t <= T, "linear_beta: t=" + std::to_string(t) + " outside [1, " + std::to_string(T) + "]");
  // Endpoints are returned verbatim so they hold exactly in floating point.
  if (t == 1) return 1e-4;
  if (t == T) return 2e-2;
  return (1e-4 * (T - t) + 2e-2 * (t - 1)) / (T - 1);
}

DiffusionSchedule::DiffusionSchedule(int T) : T_(T) {
  require(T >= 1, "build_schedule: T must be >= 1");
  betas_.assign(T + 1, 0.0);
  alphas_.assign(T + 1, 1.0);
  alpha_bars_.assign(T + 1, 1.0);
  posterior_vars_.assign(T + 1, 0.0);
  for (int t = 1; t <= T; ++t) {
    betas_[t] = linear_beta(t, T);
    alphas_[t] = 1.0 - betas_[t];
    alpha_bars_[t] = alpha_bars_[t - 1] * alphas_[t];
    posterior_vars_[t] = (1.0 - alpha_bars_[t - 1]) / (1.0 - alpha_bars_[t]) * betas_[t];
  }
}

int DiffusionSchedule::check(int t) const {
  require(t >= 0 && t <= T_, "schedule index t=" + std::to_string(t) + " outside [0, " + std::to_string(T_) + "]");
  return t;
}

DiffusionSchedule build_schedule(int T) { return DiffusionSchedule(T); }

template <typename T>
Image<T> q_sample(const Image<T>& x0, int t, const Image<T>& eps, const DiffusionSchedule& s) {
  require_same_shape(x0, eps, "q_sample");
  require(t >= 1 && t <= s.steps(), "q_sample: t out of range");
  const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1.0 - s.alpha_bar(t));
  Image<T> out(x0.height, x0.width);
  for (std::size_t i = 0; i < x0.size(); ++i) out.data[i] = static_cast<T>(a * x0.data[i] + b * eps.data[i]);
  return out;
}

template <typename T>
Image<T> predict_x0(const Image<T>& xt, const Image<T>& eps, int t, const DiffusionSchedule& s) {
  require_same_shape(xt, eps, "predict_x0");
  require(t >= 1 && t <= s.steps(), "predict_x0: t out of range");
  const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1.0 - s.alpha_bar(t));
  Image<T> out(xt.height, xt.width);
  for (std::size_t i = 0; i < xt.size(); ++i) out.data[i] = static_cast<T>((xt.data[i] - b * eps.data[i]) / a);
  return out;
}

template Image<float> q_sample(const Image<float>&, int, const Image<float>&, const DiffusionSchedule&);
template Image<double> q_sample(const Image<double>&, int, const Image<double>&, const DiffusionSchedule&);
template Image<float> predict_x0(const Image<float>&, const Image<float>&, int, const DiffusionSchedule&);
template Image<double> predict_x0(const Image<double>&, const Image<double>&, int, const DiffusionSchedule&);

}  // namespace dcmr
