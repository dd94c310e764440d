#include <doctest.h>

#include <cstdlib>
#include <string>

#include "dcmr/config.hpp"
#include "dcmr/container.hpp"
#include "test_util.hpp"

#ifndef DCMR_BIN
#error "DCMR_BIN must point at the dcmr executable"
#endif

using namespace dcmr;
namespace fs = std::filesystem;

namespace {

const char* kTiny =
    " --datagen.height=16 --datagen.width=16 --datagen.n_train=6 --datagen.n_valid=3"
    " --denoiser.base_channels=4 --denoiser.channel_multipliers=[1,2] --denoiser.n_rrdb=1"
    " --trainer.T=4 --trainer.epochs=1 --trainer.batch_size=3 --sampler.T=4 --sampler.R=1"
    " --sampler.ablate_T=[2,4] --sampler.ablate_R=[1,2]";

int run(const std::string& args) {
  const std::string cmd = std::string(DCMR_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

}  // namespace

TEST_CASE("phantom command") {
  const auto dir = testutil::scratch_dir("cli_phantom");
  const auto out = (dir / "data").string();
  REQUIRE(run("phantom -o " + out + kTiny) == 0);
  CHECK(load_manifest(dir / "data" / "train").size() == 6u);
  CHECK(load_manifest(dir / "data" / "valid").size() == 3u);
  CHECK(load_manifest(dir / "data" / "valid").entries[0].seed == 1006u);
  CHECK(RunConfig::load(dir / "data" / "config.json").n_train() == 6);

  CHECK(run("phantom -o " + out + kTiny) == 2);
  CHECK(run("phantom --force -o " + out + kTiny) == 0);

  const auto empty = (dir / "empty").string();
  CHECK(run("phantom -o " + empty + " --datagen.n_train=0 --datagen.n_valid=0") == 0);
  CHECK(load_manifest(dir / "empty" / "train").empty());
  CHECK(run("phantom -o " + (dir / "x").string() + " --datagen.n_trian=3") == 2);
  CHECK(run("phantom -o " + (dir / "y").string() + " stray") == 2);
  CHECK(run("nosuchcommand") == 2);
}

TEST_CASE("train, infer, eval and ablate") {
  const auto dir = testutil::scratch_dir("cli_pipeline");
  const std::string data = (dir / "data").string();
  REQUIRE(run("phantom -o " + data + kTiny) == 0);

  SUBCASE("zero epochs") {
    REQUIRE(run("train -d " + data + " -o " + (dir / "r0").string() + kTiny + " --trainer.epochs=0") == 0);
    CHECK(fs::exists(dir / "r0" / "checkpoint.dcmr"));
    CHECK(testutil::read_all(dir / "r0" / "loss.csv") == "step,epoch,loss\n");
  }

  SUBCASE("pipeline") {
    REQUIRE(run("train -d " + data + " -o " + (dir / "ra").string() + kTiny) == 0);
    REQUIRE(run("train -d " + data + " -o " + (dir / "rb").string() + kTiny) == 0);
    CHECK(testutil::read_all(dir / "ra" / "loss.csv") == testutil::read_all(dir / "rb" / "loss.csv"));
    CHECK(RunConfig::load(dir / "ra" / "config.json").train().epochs == 1);

    const std::string ckpt = (dir / "ra" / "checkpoint.dcmr").string();
    REQUIRE(run("infer -k " + ckpt + " -d " + data + " -o " + (dir / "i1").string() + kTiny) == 0);
    REQUIRE(run("infer -k " + ckpt + " -d " + data + " -o " + (dir / "i2").string() + kTiny) == 0);
    CHECK(count_files(dir / "i1", ".cmrs") == 3u);
    for (const auto& e : load_manifest(dir / "data" / "valid").entries)
      CHECK(testutil::read_all(dir / "i1" / (e.id + ".cmrs")) == testutil::read_all(dir / "i2" / (e.id + ".cmrs")));
    CHECK(run("infer -k " + (dir / "nope.dcmr").string() + " -d " + data + " -o " + (dir / "i3").string() + kTiny) == 3);

    REQUIRE(run("infer -k " + ckpt + " -d " + data + " -o " + (dir / "traj").string() + kTiny +
                " --sampler.record_trajectory=true") == 0);
    CHECK(fs::exists(dir / "traj" / "trajectory" / "p00000" / "frame_000.cmrs"));

    REQUIRE(run("eval -d " + data + " -r " + (dir / "i1").string() + " -o " + (dir / "e1").string() + kTiny) == 0);
    const std::string csv = testutil::read_all(dir / "e1" / "metrics.csv");
    CHECK(csv.rfind("id,psnr,ssim,nmse\n", 0) == 0);
    CHECK(fs::exists(dir / "e1" / "raw.csv"));
    CHECK(fs::exists(dir / "e1" / "summary.txt"));
    fs::remove(dir / "i2" / "p00001.cmrs");
    CHECK(run("eval -d " + data + " -r " + (dir / "i2").string() + kTiny) == 3);

    REQUIRE(run("ablate -k " + ckpt + " -d " + data + " -o " + (dir / "ab").string() + kTiny) == 0);
    const std::string table = testutil::read_all(dir / "ab" / "ablation.csv");
    CHECK(table.find("T,2,") != std::string::npos);
    CHECK(table.find("T,4,") != std::string::npos);
    CHECK(table.find("R,1,") != std::string::npos);
    CHECK(table.find("R,2,") != std::string::npos);
    CHECK(std::count(table.begin(), table.end(), '\n') == 5);
    // The (T=4, R=1) cell reproduces infer + eval.
    const auto report = evaluate(load_manifest(dir / "data" / "valid"), dir / "i1");
    CHECK(table.find("T,4," + format_metric(report.summary.psnr_mean, 6)) != std::string::npos);
    CHECK(table.find("R,1," + format_metric(report.summary.psnr_mean, 6)) != std::string::npos);

    CHECK(run("ablate -k " + ckpt + " -d " + data + " -o " + (dir / "ab2").string() + kTiny +
              " --sampler.ablate_R=[]") == 2);
  }
}

TEST_CASE("corrupt data reports a data error") {
  const auto dir = testutil::scratch_dir("cli_corrupt");
  const std::string data = (dir / "data").string();
  REQUIRE(run("phantom -o " + data + kTiny) == 0);
  std::ofstream(dir / "bad.dcmr") << "DCMRgarbage";
  CHECK(run("infer -k " + (dir / "bad.dcmr").string() + " -d " + data + " -o " + (dir / "o").string() + kTiny) == 3);
}
