#include "dcmr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcmr/rng.hpp"

namespace dcmr {

void SampleConfig::validate() const {
  require(T >= 1, "sampler.T must be >= 1");
  require(R >= 1, "sampler.R must be >= 1");
}

int table_index(int t, int T_infer, int T_max) {
  require(T_infer >= 1 && T_max >= 1, "table_index: step counts must be >= 1");
  require(t >= 1 && t <= T_infer, "table_index: t outside [1, T_infer]");
  if (T_infer == T_max) return t;
  const long idx = std::lround(static_cast<double>(t) * T_max / T_infer);
  return static_cast<int>(std::clamp<long>(idx, 1, T_max));
}

template <typename T>
Image<T> reverse_update(const Image<T>& x_t, const Image<T>& eps_hat, int t, const Image<T>& z,
                        const DiffusionSchedule& sched, bool literal) {
  require_same_shape(x_t, eps_hat, "reverse_update");
  require(t >= 1 && t <= sched.steps(), "reverse_update: t=" + std::to_string(t) + " out of range");
  const double a = sched.alpha(t);
  const double lead = literal ? std::sqrt(a) : 1.0 / std::sqrt(a);
  const double coef = (1.0 - a) / std::sqrt(1.0 - sched.alpha_bar(t));
  const double sigma = t > 1 ? std::sqrt(sched.posterior_variance(t)) : 0.0;
  if (t > 1) require_same_shape(x_t, z, "reverse_update noise");
  Image<T> out(x_t.height, x_t.width);
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    double v = lead * (x_t.data[i] - coef * eps_hat.data[i]);
    if (t > 1) v += sigma * z.data[i];
    out.data[i] = static_cast<T>(v);
  }
  return out;
}

template Image<float> reverse_update(const Image<float>&, const Image<float>&, int, const Image<float>&,
                                     const DiffusionSchedule&, bool);
template Image<double> reverse_update(const Image<double>&, const Image<double>&, int, const Image<double>&,
                                      const DiffusionSchedule&, bool);

RealImage reverse_step(const ParamSet<float>& p, const RealImage& x_t, const RealImage& cond, int t,
                       const RealImage& z, const DiffusionSchedule& sched, bool literal) {
  require(t >= 1 && t <= sched.steps(), "reverse_step: t=" + std::to_string(t) + " out of range");
  const RealImage eps = forward(p, x_t, cond, table_index(t, sched.steps(), p.config.T_max));
  return reverse_update(x_t, eps, t, z, sched, literal);
}

RealImage sample_one(const ParamSet<float>& p, const RealImage& cond, const DiffusionSchedule& sched,
                     std::uint64_t seed, const SampleOptions& opts) {
  const int T = sched.steps();
  const int stride = (T + 9) / 10;
  const ConditionFeatures<float> features = encode_condition(p, cond);
  Rng rng(seed, "sample");
  RealImage x(cond.height, cond.width);
  rng.fill_normal(std::span<float>(x.data));
  RealImage z(cond.height, cond.width);
  for (int t = T; t >= 1; --t) {
    if (opts.trajectory && (T - t) % stride == 0) opts.trajectory->push_back(x);
    const RealImage eps = forward_with(p, x, features, table_index(t, T, p.config.T_max));
    if (t > 1) rng.fill_normal(std::span<float>(z.data));
    x = reverse_update(x, eps, t, z, sched, opts.literal_update);
    for (float v : x.data)
      if (!std::isfinite(v)) throw NumericalError("non-finite sampler state at step t=" + std::to_string(t));
  }
  if (opts.trajectory) opts.trajectory->push_back(x);
  return x;
}

RealImage mean_image(const std::vector<RealImage>& images) {
  require(!images.empty(), "mean_image: no images");
  std::vector<double> acc(images.front().size(), 0.0);
  for (const auto& img : images) {
    require_same_shape(img, images.front(), "mean_image");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += img.data[i];
  }
  RealImage out(images.front().height, images.front().width);
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(acc[i] / images.size());
  return out;
}

RealImage ensemble_sample(const ParamSet<float>& p, const RealImage& cond, const DiffusionSchedule& sched, int R,
                          std::uint64_t seed, const SampleOptions& opts) {
  require(R >= 1, "ensemble_sample: R must be >= 1");
  std::vector<RealImage> rounds;
  for (int r = 1; r <= R; ++r) rounds.push_back(sample_one(p, cond, sched, seed + r, opts));
  return mean_image(rounds);
}

}  // namespace dcmr
