#include <doctest.h>

#include "dcmr/config.hpp"
#include "test_util.hpp"

using namespace dcmr;

TEST_CASE("desk defaults") {
  const auto c = RunConfig::defaults();
  const auto spec = c.pair_spec();
  CHECK(spec.height == 64);
  CHECK(spec.accel == 4);
  CHECK(c.n_train() == 64);
  CHECK(c.n_valid() == 16);
  CHECK(c.train().T == 50);
  CHECK(c.train().seed == 7u);
  CHECK(c.sample().T == 50);
  CHECK(c.sample().R == 4);
  const auto d = c.denoiser(64, 64, 50);
  CHECK(d.base_channels == 16);
  CHECK(d.T_max == 50);
  CHECK(c.ablate_R() == std::vector<int>{1, 2, 4, 8});
}

TEST_CASE("overrides are typed and keys are closed") {
  auto c = RunConfig::defaults();
  c.apply_override("--trainer.epochs=3");
  c.apply_override("trainer.learning_rate=0.002");
  c.apply_override("--datagen.coil_mode=multi:4");
  c.apply_override("--denoiser.channel_multipliers=[1,2]");
  c.apply_override("--trainer.weight_decay=0");
  CHECK(c.train().epochs == 3);
  CHECK(c.train().learning_rate == 0.002);
  CHECK(c.train().weight_decay == 0.0);
  CHECK(c.get("trainer.weight_decay").is_number_float());
  CHECK(c.pair_spec().coil_mode == CoilMode::multi_coil(4));
  CHECK(c.denoiser(32, 32, 10).channel_multipliers == std::vector<int>{1, 2});

  CHECK_THROWS_AS(c.apply_override("--trainer.epoch=3"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("--nosuch.key=1"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("--trainer.epochs=many"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("--trainer.epochs=1.5"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("--trainer.epochs"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("--sampler.ablate_T=[1,\"x\"]"), ConfigError);
  CHECK_THROWS_AS(c.get("trainer"), ConfigError);

  c.apply_override("--trainer.batch_size=0");
  CHECK_THROWS_AS(c.train(), ConfigError);
  c = RunConfig::defaults();
  c.apply_override("--datagen.coil_mode=triple");
  CHECK_THROWS_AS(c.pair_spec(), ConfigError);
  c = RunConfig::defaults();
  c.apply_override("--denoiser.channel_multipliers=[1,1,1,1,1,1,1,1]");
  CHECK_THROWS_AS(c.denoiser(64, 64, 50), ConfigError);
}

TEST_CASE("mismatch mode runs inference with ten times the training steps") {
  auto c = RunConfig::defaults();
  c.apply_override("--trainer.T=20");
  c.apply_override("--sampler.paper_mismatch=true");
  CHECK(c.sample().T == 200);
}

TEST_CASE("config echo reloads identically") {
  auto c = RunConfig::defaults();
  c.apply_override("--sampler.R=2");
  c.apply_override("--metrics.ssim_sigma=2");
  const auto dir = testutil::scratch_dir("config");
  c.save(dir / "config.json");
  CHECK(RunConfig::load(dir / "config.json") == c);
  CHECK(RunConfig::from_json(Json::parse(c.dump())) == c);

  std::ofstream(dir / "bad.json") << "{\"trainer\": {\"epochz\": 1}}";
  CHECK_THROWS_AS(RunConfig::load(dir / "bad.json"), ConfigError);
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(RunConfig::load(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(dir / "missing.json"), ConfigError);

  std::ofstream(dir / "partial.json") << "{\"sampler\": {\"R\": 8}}";
  const auto p = RunConfig::load(dir / "partial.json");
  CHECK(p.sample().R == 8);
  CHECK(p.train() == RunConfig::defaults().train());
}

TEST_CASE("json conversions and first difference") {
  DenoiserConfig d;
  d.n_rrdb = 3;
  CHECK(denoiser_from_json(to_json(d)) == d);
  TrainConfig t;
  t.seed = 99;
  t.early_stop = true;
  CHECK(train_from_json(to_json(t)) == t);
  DenoiserConfig e = d;
  e.in_w = 32;
  CHECK(first_difference(to_json(d), to_json(e)) == "in_w");
  CHECK(first_difference(to_json(d), to_json(d)).empty());
}
