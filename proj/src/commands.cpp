#include "dcmr/commands.hpp"

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dcmr/checkpoint.hpp"
#include "dcmr/container.hpp"
#include "dcmr/io.hpp"
#include "dcmr/rng.hpp"
#include "dcmr/sampler.hpp"

namespace dcmr {

void prepare_output_dir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir) && !fs::is_directory(dir)) throw EnvironmentError(dir.string() + " exists and is not a directory");
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw ConfigError("output directory " + dir.string() + " is not empty (pass --force to overwrite)");
  fs::create_directories(dir, ec);
  if (ec) throw EnvironmentError("cannot create " + dir.string() + ": " + ec.message());
}

DatasetManifest resolve_manifest(const fs::path& dir, const std::string& split) {
  if (fs::exists(dir / kManifestFile)) return load_manifest(dir);
  if (fs::exists(dir / split / kManifestFile)) return load_manifest(dir / split);
  throw EnvironmentError("no " + std::string(kManifestFile) + " in " + dir.string() + " or " +
                         (dir / split).string());
}

std::uint64_t pair_seed(std::uint64_t root, const std::string& id) { return substream_seed(root, "pair/" + id); }

void cmd_phantom(const RunConfig& cfg, const fs::path& out, bool force) {
  const PairSpec spec = cfg.pair_spec();
  const int n_train = cfg.n_train(), n_valid = cfg.n_valid();
  const std::uint64_t seed = cfg.data_seed();
  prepare_output_dir(out, force);
  if (force) {
    fs::remove_all(out / "train");
    fs::remove_all(out / "valid");
  }
  build_dataset(spec, n_train, seed, out / "train", "train");
  build_dataset(spec, n_valid, seed + static_cast<std::uint64_t>(n_train), out / "valid", "valid");
  cfg.save(out / "config.json");
}

Checkpoint cmd_train(const RunConfig& cfg, const fs::path& data, const fs::path& out, bool force,
                     const FitOptions& opts) {
  const TrainConfig tcfg = cfg.train();
  const DatasetManifest m = resolve_manifest(data, "train");
  if (m.empty()) throw InvalidInput("training manifest " + (m.root / kManifestFile).string() + " has no pairs");
  const SlicePair first = load_pair(m, m.entries.front());
  const DenoiserConfig dcfg = cfg.denoiser(first.full.height, first.full.width, tcfg.T);
  prepare_output_dir(out, force);
  cfg.save(out / "config.json");
  return fit(m, tcfg, dcfg, out, opts);
}

namespace {

struct Inference {
  Checkpoint ckpt;
  SampleConfig scfg;
};

Inference load_for_inference(const RunConfig& cfg, const fs::path& checkpoint) {
  if (!fs::exists(checkpoint)) throw EnvironmentError("checkpoint not found: " + checkpoint.string());
  Inference inf{load_checkpoint(checkpoint), cfg.sample()};
  if (cfg.get("sampler.paper_mismatch").get<bool>()) inf.scfg.T = 10 * inf.ckpt.train.T;
  return inf;
}

void check_pair_shape(const Checkpoint& ckpt, const SlicePair& pair, const std::string& id) {
  if (pair.under.height != ckpt.denoiser.in_h || pair.under.width != ckpt.denoiser.in_w)
    throw IncompatibleError("pair " + id + " is " + std::to_string(pair.under.height) + "x" +
                            std::to_string(pair.under.width) + " but the checkpoint expects " +
                            std::to_string(ckpt.denoiser.in_h) + "x" + std::to_string(ckpt.denoiser.in_w));
}

std::string step_name(int i) {
  std::ostringstream os;
  os << "frame_" << std::setw(3) << std::setfill('0') << i << ".cmrs";
  return os.str();
}

}  // namespace

std::vector<fs::path> cmd_infer(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& data,
                                const fs::path& out, bool force) {
  const Inference inf = load_for_inference(cfg, checkpoint);
  const DatasetManifest m = resolve_manifest(data, "valid");
  const bool write_raw = cfg.get("sampler.write_raw").get<bool>();
  prepare_output_dir(out, force);
  cfg.save(out / "config.json");
  const DiffusionSchedule sched(inf.scfg.T);
  std::vector<fs::path> written;
  for (const auto& e : m.entries) {
    const SlicePair pair = load_pair(m, e);
    check_pair_shape(inf.ckpt, pair, e.id);
    const std::uint64_t base = pair_seed(inf.scfg.seed, e.id);
    std::vector<RealImage> rounds, trajectory;
    for (int r = 1; r <= inf.scfg.R; ++r) {
      SampleOptions opts{inf.scfg.literal_update, nullptr};
      if (r == 1 && inf.scfg.record_trajectory) opts.trajectory = &trajectory;
      rounds.push_back(sample_one(inf.ckpt.params, pair.under, sched, base + r, opts));
    }
    RealImage recon = mean_image(rounds);
    if (!write_raw) recon = clamp_unit(recon);
    const fs::path path = out / (e.id + ".cmrs");
    container::write(path, recon);
    written.push_back(path);
    if (!trajectory.empty()) {
      const fs::path tdir = out / "trajectory" / e.id;
      fs::create_directories(tdir);
      for (std::size_t i = 0; i < trajectory.size(); ++i) container::write(tdir / step_name(static_cast<int>(i)), trajectory[i]);
    }
  }
  return written;
}

MetricReport cmd_eval(const RunConfig& cfg, const fs::path& data, const fs::path& recon, const fs::path& out,
                      bool force) {
  const DatasetManifest m = resolve_manifest(data, "valid");
  MetricReport report = evaluate(m, recon, cfg.metrics());
  if (!out.empty()) {
    prepare_output_dir(out, force);
    cfg.save(out / "config.json");
    io::write_file_atomic(out / "metrics.csv", report.csv());
    io::write_file_atomic(out / "raw.csv", report.raw_csv());
    io::write_file_atomic(out / "summary.txt", report.text());
  }
  return report;
}

std::string AblationTable::csv() const {
  std::ostringstream os;
  os << "axis,value,psnr,ssim,nmse\n";
  auto put = [&](const char* axis, const AblationRow& r) {
    os << axis << ',' << r.value << ',' << format_metric(r.summary.psnr_mean, 6) << ','
       << format_metric(r.summary.ssim_mean, 6) << ',' << format_metric(r.summary.nmse_mean, 6) << '\n';
  };
  for (const auto& r : T_rows) put("T", r);
  for (const auto& r : R_rows) put("R", r);
  return os.str();
}

std::string AblationTable::text() const {
  std::ostringstream os;
  auto block = [&](const std::string& title, const char* col, const std::vector<AblationRow>& rows) {
    os << title << '\n';
    os << std::left << std::setw(8) << col << std::setw(10) << "PSNR" << std::setw(10) << "SSIM" << "NMSE" << '\n';
    os << std::left << std::setw(8) << "RAW" << std::setw(10) << format_metric(raw.psnr_mean, 2) << std::setw(10)
       << format_metric(raw.ssim_mean, 4) << format_metric(raw.nmse_mean, 4) << '\n';
    for (const auto& r : rows)
      os << std::left << std::setw(8) << r.value << std::setw(10) << format_metric(r.summary.psnr_mean, 2)
         << std::setw(10) << format_metric(r.summary.ssim_mean, 4) << format_metric(r.summary.nmse_mean, 4) << '\n';
  };
  block("(a) inference steps, R = " + std::to_string(fixed_R), "T", T_rows);
  os << '\n';
  block("(b) ensemble size, T = " + std::to_string(fixed_T), "R", R_rows);
  return os.str();
}

AblationTable cmd_ablate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& data,
                         const fs::path& out, bool force) {
  std::vector<int> Ts = cfg.ablate_T(), Rs = cfg.ablate_R();
  if (Ts.empty() || Rs.empty()) throw ConfigError("sampler.ablate_T and sampler.ablate_R must be non-empty");
  for (int t : Ts)
    if (t < 1) throw ConfigError("sampler.ablate_T entries must be >= 1");
  for (int r : Rs)
    if (r < 1) throw ConfigError("sampler.ablate_R entries must be >= 1");
  const Inference inf = load_for_inference(cfg, checkpoint);
  const DatasetManifest m = resolve_manifest(data, "valid");
  const MetricConfig mcfg = cfg.metrics();
  prepare_output_dir(out, force);
  cfg.save(out / "config.json");

  std::vector<SlicePair> pairs;
  for (const auto& e : m.entries) {
    pairs.push_back(load_pair(m, e));
    check_pair_shape(inf.ckpt, pairs.back(), e.id);
  }

  AblationTable table;
  table.fixed_R = inf.scfg.R;
  table.fixed_T = inf.scfg.T;
  std::vector<MetricRecord> raw;
  for (std::size_t i = 0; i < pairs.size(); ++i) raw.push_back(score(m.entries[i].id, pairs[i].under, pairs[i].full, mcfg));
  table.raw = summarize(raw);

  const SampleOptions opts{inf.scfg.literal_update, nullptr};
  for (int T : Ts) {
    const DiffusionSchedule sched(T);
    std::vector<MetricRecord> rows;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& id = m.entries[i].id;
      const RealImage x = ensemble_sample(inf.ckpt.params, pairs[i].under, sched, inf.scfg.R,
                                          pair_seed(inf.scfg.seed, id), opts);
      rows.push_back(score(id, x, pairs[i].full, mcfg));
    }
    table.T_rows.push_back({T, summarize(rows)});
  }

  // Ensembles of every size share their leading rounds.
  const int R_max = *std::max_element(Rs.begin(), Rs.end());
  const DiffusionSchedule sched(inf.scfg.T);
  std::vector<std::vector<MetricRecord>> by_R(Rs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& id = m.entries[i].id;
    const std::uint64_t base = pair_seed(inf.scfg.seed, id);
    std::vector<RealImage> rounds;
    for (int r = 1; r <= R_max; ++r) rounds.push_back(sample_one(inf.ckpt.params, pairs[i].under, sched, base + r, opts));
    for (std::size_t k = 0; k < Rs.size(); ++k) {
      const std::vector<RealImage> head(rounds.begin(), rounds.begin() + Rs[k]);
      by_R[k].push_back(score(id, mean_image(head), pairs[i].full, mcfg));
    }
  }
  for (std::size_t k = 0; k < Rs.size(); ++k) table.R_rows.push_back({Rs[k], summarize(by_R[k])});

  io::write_file_atomic(out / "ablation.csv", table.csv());
  io::write_file_atomic(out / "ablation.txt", table.text());
  return table;
}

}  // namespace dcmr
