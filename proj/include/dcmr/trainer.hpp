#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dcmr/datagen.hpp"
#include "dcmr/denoiser.hpp"
#include "dcmr/optim.hpp"
#include "dcmr/rng.hpp"
#include "dcmr/schedule.hpp"

namespace dcmr {

struct TrainConfig {
  int T = 50;
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 1e-4;
  double weight_decay = 1e-2;
  std::uint64_t seed = 7;
  double flip_prob = 0.5;
  /// Global-norm gradient clip; 0 disables.
  double clip_norm = 1.0;
  /// Stop once the best loss of the last 5 epochs improves < 1% on the 5 before.
  bool early_stop = false;

  void validate() const;
  AdamWConfig optimizer() const { return {learning_rate, 0.9, 0.999, 1e-8, weight_decay}; }
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LossRecord {
  std::int64_t step = 0;
  int epoch = 0;
  float loss = 0;
  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

/// Per-purpose random streams, all derived from the training seed.
struct TrainRngs {
  Rng order, eps, t, augment;
  explicit TrainRngs(std::uint64_t seed)
      : order(seed, "order"), eps(seed, "eps"), t(seed, "timestep"), augment(seed, "augment") {}
  friend bool operator==(const TrainRngs&, const TrainRngs&) = default;
};

/// Everything needed to resume training or run inference.
struct Checkpoint {
  DenoiserConfig denoiser;
  TrainConfig train;
  ParamSet<float> params;
  AdamState<float> optimizer;
  TrainRngs rngs{0};
  std::int64_t step = 0;
  int epoch = 0;
  std::vector<LossRecord> history;
};

Checkpoint fresh_checkpoint(const DenoiserConfig& dcfg, const TrainConfig& tcfg);

/// One Adam step on a batch of pairs: draws t ~ U{1..T} and eps ~ N(0, I) per
/// sample, forms x_t, and minimises the mean squared eps error. Returns the
/// batch loss. Throws NumericalError on a non-finite loss.
float train_step(Checkpoint& state, std::span<const SlicePair> pairs, const DiffusionSchedule& sched);

/// Flips both images of a pair with the same draw.
SlicePair augment_pair(const SlicePair& p, Rng& rng, double flip_prob);

struct FitOptions {
  /// Called after every epoch with (epoch, mean loss).
  std::function<void(int, double)> on_epoch;
};

/// Trains on every pair of `manifest` for cfg.epochs epochs, writing
/// `out/checkpoint.dcmr` and `out/loss.csv` after each epoch.
Checkpoint fit(const DatasetManifest& manifest, const TrainConfig& cfg, DenoiserConfig dcfg,
               const std::filesystem::path& out, const FitOptions& opts = {});

/// Per-epoch mean of the loss history.
std::vector<double> epoch_means(const std::vector<LossRecord>& history);

}  // namespace dcmr
