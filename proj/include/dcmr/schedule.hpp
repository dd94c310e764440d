#pragma once

#include <vector>

#include "dcmr/image.hpp"

namespace dcmr {

/// beta_t = (1e-4 * (T - t) + 2e-2 * (t - 1)) / (T - 1); T == 1 yields 1e-4.
double linear_beta(int t, int T);

/// Precomputed forward-process tables, indexed by t in [0, T]. Index 0 is the
/// clean state: alpha_bar(0) == 1 and beta(0) == 0.
class DiffusionSchedule {
 public:
  explicit DiffusionSchedule(int T);

  int steps() const { return T_; }
  double beta(int t) const { return betas_.at(check(t)); }
  double alpha(int t) const { return alphas_.at(check(t)); }
  double alpha_bar(int t) const { return alpha_bars_.at(check(t)); }
  /// (1 - alpha_bar(t-1)) / (1 - alpha_bar(t)) * beta(t); zero at t == 1.
  double posterior_variance(int t) const { return posterior_vars_.at(check(t)); }

 private:
  int check(int t) const;

  int T_;
  std::vector<double> betas_, alphas_, alpha_bars_, posterior_vars_;
};

DiffusionSchedule build_schedule(int T);

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps
template <typename T>
Image<T> q_sample(const Image<T>& x0, int t, const Image<T>& eps, const DiffusionSchedule& s);

/// Inverse of q_sample for a known eps.
template <typename T>
Image<T> predict_x0(const Image<T>& xt, const Image<T>& eps, int t, const DiffusionSchedule& s);

}  // namespace dcmr
