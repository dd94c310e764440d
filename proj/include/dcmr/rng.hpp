#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace dcmr {

/// splitmix64 finalizer; used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Seed for the named substream `name` of `root`.
std::uint64_t substream_seed(std::uint64_t root, std::string_view name);

/// Seeded engine with the handful of draws the pipeline needs. State is
/// serializable so checkpoints can resume bit-exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(mix_seed(seed)) {}
  Rng(std::uint64_t root, std::string_view stream) : engine_(substream_seed(root, stream)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void fill_normal(std::span<T> out) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& v : out) v = static_cast<T>(dist(engine_));
  }

  std::mt19937_64& engine() { return engine_; }

  std::string state() const;
  void restore(const std::string& state);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dcmr
