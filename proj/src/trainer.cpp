#include "dcmr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dcmr/checkpoint.hpp"
#include "dcmr/io.hpp"

namespace dcmr {

void TrainConfig::validate() const {
  require(T >= 1, "trainer.T must be >= 1");
  require(epochs >= 0, "trainer.epochs must be >= 0");
  require(batch_size >= 1, "trainer.batch_size must be >= 1");
  require(learning_rate >= 0, "trainer.learning_rate must be >= 0");
  require(weight_decay >= 0, "trainer.weight_decay must be >= 0");
  require(flip_prob >= 0 && flip_prob <= 1, "trainer.flip_prob must lie in [0, 1]");
  require(clip_norm >= 0, "trainer.clip_norm must be >= 0");
}

Checkpoint fresh_checkpoint(const DenoiserConfig& dcfg, const TrainConfig& tcfg) {
  tcfg.validate();
  Checkpoint c;
  c.denoiser = dcfg;
  c.train = tcfg;
  c.params = init_params<float>(dcfg, substream_seed(tcfg.seed, "init"));
  c.optimizer = make_adam_state(c.params.zeros_like());
  c.rngs = TrainRngs(tcfg.seed);
  return c;
}

float train_step(Checkpoint& state, std::span<const SlicePair> pairs, const DiffusionSchedule& sched) {
  require(!pairs.empty(), "train_step: empty batch");
  require(sched.steps() == state.train.T, "train_step: schedule T differs from the training config");
  require(state.denoiser.T_max >= sched.steps(), "train_step: embedding table smaller than T");

  Batch<float> batch;
  for (const auto& p : pairs) {
    const int t = state.rngs.t.uniform_int(1, sched.steps());
    RealImage eps(p.full.height, p.full.width);
    state.rngs.eps.fill_normal(std::span<float>(eps.data));
    batch.x_t.push_back(q_sample(p.full, t, eps, sched));
    batch.cond.push_back(p.under);
    batch.t.push_back(t);
    batch.eps.push_back(std::move(eps));
  }

  auto lg = grads(state.params, batch);
  bool finite = std::isfinite(lg.loss);
  for (const auto& g : lg.grads)
    for (float v : g) finite = finite && std::isfinite(v);
  if (!finite) {
    std::ostringstream os;
    os << "non-finite loss at step " << state.step << " (loss " << lg.loss << ", t =";
    for (int t : batch.t) os << ' ' << t;
    os << ")";
    throw NumericalError(os.str());
  }

  if (state.train.clip_norm > 0) clip_global_norm(lg.grads, state.train.clip_norm);
  std::vector<float*> ptrs;
  for (auto& t : state.params.tensors) ptrs.push_back(t.data.data());
  adamw_step(ptrs, lg.grads, state.optimizer, state.train.optimizer());
  ++state.step;
  return lg.loss;
}

SlicePair augment_pair(const SlicePair& p, Rng& rng, double flip_prob) {
  const bool h = rng.bernoulli(flip_prob);
  const bool v = rng.bernoulli(flip_prob);
  SlicePair out = p;
  out.under = flip(p.under, h, v);
  out.full = flip(p.full, h, v);
  return out;
}

std::vector<double> epoch_means(const std::vector<LossRecord>& history) {
  std::vector<double> sums, counts;
  for (const auto& r : history) {
    if (r.epoch >= static_cast<int>(sums.size())) {
      sums.resize(r.epoch + 1, 0.0);
      counts.resize(r.epoch + 1, 0.0);
    }
    sums[r.epoch] += r.loss;
    counts[r.epoch] += 1;
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < sums.size(); ++i)
    if (counts[i] > 0) out.push_back(sums[i] / counts[i]);
  return out;
}

namespace {

std::string loss_csv(const std::vector<LossRecord>& history) {
  std::ostringstream os;
  os << "step,epoch,loss\n";
  os.precision(9);
  for (const auto& r : history) os << r.step << ',' << r.epoch << ',' << r.loss << '\n';
  return os.str();
}

bool plateaued(const std::vector<double>& means) {
  if (means.size() < 10) return false;
  const auto n = means.size();
  const double recent = *std::min_element(means.end() - 5, means.end());
  const double before = *std::min_element(means.begin() + (n - 10), means.begin() + (n - 5));
  return before - recent < 0.01 * before;
}

}  // namespace

Checkpoint fit(const DatasetManifest& manifest, const TrainConfig& cfg, DenoiserConfig dcfg,
               const std::filesystem::path& out, const FitOptions& opts) {
  require(!manifest.empty(), "fit: manifest is empty");
  cfg.validate();
  const std::vector<SlicePair> pairs = load_pairs(manifest);
  dcfg.T_max = cfg.T;
  dcfg.in_h = pairs.front().full.height;
  dcfg.in_w = pairs.front().full.width;
  dcfg.validate();

  Checkpoint state = fresh_checkpoint(dcfg, cfg);
  const DiffusionSchedule sched(cfg.T);
  const auto ckpt_path = out / "checkpoint.dcmr";
  const auto log_path = out / "loss.csv";
  save_checkpoint(state, ckpt_path);
  io::write_file_atomic(log_path, loss_csv(state.history));

  std::vector<std::size_t> order(pairs.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state.rngs.order.engine());
    double sum = 0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<SlicePair> batch;
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(augment_pair(pairs[order[i]], state.rngs.augment, cfg.flip_prob));
      const float loss = train_step(state, batch, sched);
      state.history.push_back({state.step, epoch, loss});
      sum += loss;
      ++steps;
    }
    state.epoch = epoch + 1;
    save_checkpoint(state, ckpt_path);
    io::write_file_atomic(log_path, loss_csv(state.history));
    if (opts.on_epoch) opts.on_epoch(epoch, sum / steps);
    if (cfg.early_stop && plateaued(epoch_means(state.history))) break;
  }
  return state;
}

}  // namespace dcmr
