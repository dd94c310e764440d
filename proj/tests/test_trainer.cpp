#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dcmr/metrics.hpp"
#include "dcmr/optim.hpp"
#include "dcmr/trainer.hpp"
#include "test_util.hpp"

using namespace dcmr;

namespace {

DenoiserConfig small_denoiser(int size, int T) {
  DenoiserConfig c;
  c.base_channels = 8;
  c.channel_multipliers = {1, 2};
  c.n_rrdb = 1;
  c.T_max = T;
  c.in_h = c.in_w = size;
  return c;
}

std::vector<SlicePair> make_pairs(int n, int size, std::uint64_t seed) {
  PairSpec spec;
  spec.height = spec.width = size;
  std::vector<SlicePair> out;
  for (int i = 0; i < n; ++i) out.push_back(make_pair(spec, seed + i));
  return out;
}

}  // namespace

TEST_CASE("AdamW converges on a quadratic") {
  const std::vector<double> target{0.5, -1.25, 3.0, 0.0, -0.1};
  std::vector<std::vector<double>> w{std::vector<double>(target.size(), 0.0)};
  auto state = make_adam_state(w);
  AdamWConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.weight_decay = 0;
  int steps = 0;
  auto dist = [&] {
    double d = 0;
    for (std::size_t i = 0; i < target.size(); ++i) d = std::max(d, std::abs(w[0][i] - target[i]));
    return d;
  };
  for (; steps < 5000 && dist() > 1e-3; ++steps) {
    std::vector<std::vector<double>> g{std::vector<double>(target.size())};
    for (std::size_t i = 0; i < target.size(); ++i) g[0][i] = 2 * (w[0][i] - target[i]);
    adamw_step({w[0].data()}, g, state, cfg);
  }
  MESSAGE("converged in " << steps << " steps");
  CHECK(dist() <= 1e-3);
  CHECK(state.step == steps);
}

TEST_CASE("AdamW first step and decoupled decay") {
  std::vector<std::vector<double>> w{{1.0, -2.0}};
  auto state = make_adam_state(w);
  AdamWConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.5;
  adamw_step({w[0].data()}, {{0.3, -4.0}}, state, cfg);
  // bias-corrected first step moves each coordinate by lr * sign(g) (up to eps) plus lr * wd * p
  CHECK(w[0][0] == doctest::Approx(1.0 - 0.1 * (0.3 / (0.3 + 1e-8)) - 0.1 * 0.5 * 1.0).epsilon(1e-12));
  CHECK(w[0][1] == doctest::Approx(-2.0 + 0.1 * (4.0 / (4.0 + 1e-8)) + 0.1 * 0.5 * 2.0).epsilon(1e-12));
}

TEST_CASE("global norm clipping") {
  std::vector<std::vector<float>> g{{3.f, 0.f}, {4.f}};
  CHECK(global_norm(g) == doctest::Approx(5.0));
  CHECK(clip_global_norm(g, 1.0) == doctest::Approx(5.0));
  CHECK(global_norm(g) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(g[0][0] == doctest::Approx(0.6f));
  std::vector<std::vector<float>> small{{0.1f}};
  clip_global_norm(small, 1.0);
  CHECK(small[0][0] == 0.1f);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  TrainConfig cfg;
  cfg.T = 10;
  cfg.learning_rate = 0;
  auto state = fresh_checkpoint(small_denoiser(16, 10), cfg);
  const auto before = state.params;
  const auto pairs = make_pairs(3, 16, 5);
  const float loss = train_step(state, pairs, DiffusionSchedule(10));
  CHECK(std::isfinite(loss));
  CHECK(loss > 0);
  CHECK(state.params == before);
  CHECK(state.step == 1);
}

TEST_CASE("training is reproducible for a fixed seed") {
  TrainConfig cfg;
  cfg.T = 10;
  cfg.learning_rate = 1e-3;
  const auto pairs = make_pairs(4, 16, 9);
  auto run = [&] {
    auto s = fresh_checkpoint(small_denoiser(16, 10), cfg);
    std::vector<float> losses;
    for (int i = 0; i < 3; ++i) losses.push_back(train_step(s, pairs, DiffusionSchedule(10)));
    return std::pair{losses, s.params};
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("non-finite parameters abort the step with a diagnostic") {
  TrainConfig cfg;
  cfg.T = 10;
  auto state = fresh_checkpoint(small_denoiser(16, 10), cfg);
  state.params.get("E.out.conv.b").data[0] = std::nanf("");
  try {
    train_step(state, make_pairs(2, 16, 1), DiffusionSchedule(10));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    CHECK(std::string(e.what()).find("t =") != std::string::npos);
  }
}

TEST_CASE("schedule and batch preconditions") {
  TrainConfig cfg;
  cfg.T = 10;
  auto state = fresh_checkpoint(small_denoiser(16, 10), cfg);
  CHECK_THROWS_AS(train_step(state, make_pairs(1, 16, 1), DiffusionSchedule(20)), InvalidInput);
  CHECK_THROWS_AS(train_step(state, std::vector<SlicePair>{}, DiffusionSchedule(10)), InvalidInput);
  TrainConfig bad;
  bad.flip_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("paired flips keep the pair aligned") {
  const auto pair = make_pairs(1, 32, 3)[0];
  Rng rng(4, "aug");
  for (int i = 0; i < 8; ++i) {
    const auto a = augment_pair(pair, rng, 0.5);
    CHECK(nmse(a.under, a.full) == doctest::Approx(nmse(pair.under, pair.full)).epsilon(1e-9));
    const bool h = a.full == flip(pair.full, true, false) || a.full == flip(pair.full, true, true);
    const bool v = a.full == flip(pair.full, false, true) || a.full == flip(pair.full, true, true);
    const bool none = a.full == pair.full;
    CHECK((h || v || none));
    for (bool fh : {false, true})
      for (bool fv : {false, true})
        if (a.full == flip(pair.full, fh, fv)) CHECK(a.under == flip(pair.under, fh, fv));
  }
  Rng never(1, "aug");
  CHECK(augment_pair(pair, never, 0.0).full == pair.full);
}

TEST_CASE("micro run descends") {
  TrainConfig cfg;
  cfg.T = 10;
  cfg.learning_rate = 1e-3;
  auto state = fresh_checkpoint(small_denoiser(32, 10), cfg);
  const auto pairs = make_pairs(16, 32, 300);
  const DiffusionSchedule sched(10);
  Rng order(1, "order");
  std::vector<float> losses;
  for (int step = 0; step < 50; ++step) {
    std::vector<SlicePair> batch;
    for (int i = 0; i < cfg.batch_size; ++i) batch.push_back(pairs[(step * cfg.batch_size + i) % pairs.size()]);
    losses.push_back(train_step(state, batch, sched));
  }
  const double first = std::accumulate(losses.begin(), losses.begin() + 10, 0.0) / 10;
  const double last = std::accumulate(losses.end() - 10, losses.end(), 0.0) / 10;
  MESSAGE("first-10 mean " << first << ", last-10 mean " << last);
  CHECK(last < first);
}

TEST_CASE("fit writes checkpoints and loss logs") {
  const auto dir = testutil::scratch_dir("fit");
  PairSpec spec;
  spec.height = spec.width = 16;
  const auto m = build_dataset(spec, 5, 70, dir / "data");
  TrainConfig cfg;
  cfg.T = 8;
  cfg.epochs = 0;
  DenoiserConfig dcfg = small_denoiser(16, 8);
  const auto fresh = fit(m, cfg, dcfg, dir / "run0");
  CHECK(fresh.step == 0);
  CHECK(fresh.params == fresh_checkpoint(fresh.denoiser, cfg).params);
  CHECK(std::filesystem::exists(dir / "run0" / "checkpoint.dcmr"));
  CHECK(testutil::read_all(dir / "run0" / "loss.csv") == "step,epoch,loss\n");

  cfg.epochs = 2;
  cfg.batch_size = 2;
  std::vector<int> seen;
  FitOptions opts;
  opts.on_epoch = [&](int e, double) { seen.push_back(e); };
  const auto a = fit(m, cfg, dcfg, dir / "runA", opts);
  fit(m, cfg, dcfg, dir / "runB");
  CHECK(seen == std::vector<int>{0, 1});
  CHECK(a.step == 6);  // 2 epochs x ceil(5 / 2)
  CHECK(a.history.size() == 6u);
  CHECK(epoch_means(a.history).size() == 2u);
  CHECK(testutil::read_all(dir / "runA" / "loss.csv") == testutil::read_all(dir / "runB" / "loss.csv"));
  CHECK(testutil::read_all(dir / "runA" / "checkpoint.dcmr") == testutil::read_all(dir / "runB" / "checkpoint.dcmr"));

  DatasetManifest empty;
  CHECK_THROWS_AS(fit(empty, cfg, dcfg, dir / "runC"), InvalidInput);
}

TEST_CASE("epoch means") {
  std::vector<LossRecord> h{{1, 0, 1.f}, {2, 0, 3.f}, {3, 1, 0.5f}};
  CHECK(epoch_means(h) == std::vector<double>{2.0, 0.5});
  CHECK(epoch_means({}).empty());
}

TEST_CASE("early stopping on a plateau") {
  const auto dir = testutil::scratch_dir("plateau");
  PairSpec spec;
  spec.height = spec.width = 16;
  const auto m = build_dataset(spec, 2, 3, dir / "data");
  TrainConfig cfg;
  cfg.T = 4;
  cfg.epochs = 40;
  cfg.learning_rate = 0;
  cfg.early_stop = true;
  const auto ckpt = fit(m, cfg, small_denoiser(16, 4), dir / "run");
  // A frozen model cannot keep improving by 1% per five epochs.
  CHECK(ckpt.epoch < 40);
}
