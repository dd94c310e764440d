// dcmr: phantom data, training, inference, evaluation and ablation.
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dcmr/commands.hpp"
#include "dcmr/kernels/gemm.hpp"
#include "dcmr/runtime.hpp"

namespace {

using namespace dcmr;

struct Common {
  std::string config;
  bool force = false;
};

RunConfig resolve(const Common& c, const std::vector<std::string>& extras) {
  RunConfig cfg = c.config.empty() ? RunConfig::defaults() : RunConfig::load(c.config);
  for (const auto& arg : extras) {
    if (arg.rfind("--", 0) != 0 || arg.find('=') == std::string::npos)
      throw ConfigError("unrecognised argument '" + arg + "' (overrides look like --section.key=value)");
    cfg.apply_override(arg.substr(2));
  }
  return cfg;
}

int run(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Conditional diffusion reconstruction of under-sampled MR slices"};
  app.require_subcommand(1);
  Common common;
  std::string data, out, checkpoint, recon;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "JSON run configuration (defaults to the desk profile)");
    sub->add_flag("--force", common.force, "Overwrite a non-empty output directory");
    sub->allow_extras();
  };

  auto* phantom = app.add_subcommand("phantom", "Generate train/valid phantom pairs");
  add_common(phantom);
  phantom->add_option("-o,--out", out, "Dataset directory")->required();

  auto* train = app.add_subcommand("train", "Train the denoiser");
  add_common(train);
  train->add_option("-d,--data", data, "Dataset directory (or its train split)")->required();
  train->add_option("-o,--out", out, "Run directory for checkpoint.dcmr and loss.csv")->required();

  auto* infer = app.add_subcommand("infer", "Reconstruct every pair of a split");
  add_common(infer);
  infer->add_option("-k,--checkpoint", checkpoint, "Checkpoint file")->required();
  infer->add_option("-d,--data", data, "Dataset directory (or its valid split)")->required();
  infer->add_option("-o,--out", out, "Reconstruction directory")->required();

  auto* eval = app.add_subcommand("eval", "Score reconstructions against the fully-sampled slices");
  add_common(eval);
  eval->add_option("-d,--data", data, "Dataset directory (or its valid split)")->required();
  eval->add_option("-r,--recon", recon, "Reconstruction directory")->required();
  eval->add_option("-o,--out", out, "Report directory (optional)");

  auto* ablate = app.add_subcommand("ablate", "Grid over inference steps and ensemble size");
  add_common(ablate);
  ablate->add_option("-k,--checkpoint", checkpoint, "Checkpoint file")->required();
  ablate->add_option("-d,--data", data, "Dataset directory (or its valid split)")->required();
  ablate->add_option("-o,--out", out, "Output directory for ablation tables")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const RunConfig cfg = resolve(common, sub->remaining());
  std::cerr << "kernels: " << kernels::backend_name(kernels::active_backend()) << '\n';

  if (sub == phantom) {
    cmd_phantom(cfg, out, common.force);
    std::cout << "wrote " << cfg.n_train() << " train and " << cfg.n_valid() << " valid pairs to " << out << '\n';
  } else if (sub == train) {
    FitOptions opts;
    opts.on_epoch = [](int epoch, double loss) { std::cout << "epoch " << epoch << " loss " << loss << std::endl; };
    const Checkpoint ckpt = cmd_train(cfg, data, out, common.force, opts);
    std::cout << "trained " << ckpt.step << " steps; checkpoint in " << out << '\n';
  } else if (sub == infer) {
    const auto written = cmd_infer(cfg, checkpoint, data, out, common.force);
    std::cout << "wrote " << written.size() << " reconstructions to " << out << '\n';
  } else if (sub == eval) {
    const MetricReport report = cmd_eval(cfg, data, recon, out, common.force);
    std::cout << report.text();
  } else if (sub == ablate) {
    const AblationTable table = cmd_ablate(cfg, checkpoint, data, out, common.force);
    std::cout << table.text();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dcmr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const dcmr::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const dcmr::FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const dcmr::IncompatibleError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const dcmr::EnvironmentError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const dcmr::InvalidInput& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
