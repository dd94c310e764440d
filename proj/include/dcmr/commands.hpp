#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dcmr/config.hpp"
#include "dcmr/metrics.hpp"
#include "dcmr/trainer.hpp"

namespace dcmr {

namespace fs = std::filesystem;

/// Refuses to write into a non-empty directory unless `force` is set.
void prepare_output_dir(const fs::path& dir, bool force);

/// `dir/manifest.tsv` when present, otherwise `dir/<split>/manifest.tsv`.
DatasetManifest resolve_manifest(const fs::path& dir, const std::string& split);

/// Base seed of the sampling rounds for one pair id.
std::uint64_t pair_seed(std::uint64_t root, const std::string& id);

/// Writes `out/train` (n_train pairs) and `out/valid` (n_valid pairs).
void cmd_phantom(const RunConfig& cfg, const fs::path& out, bool force);

Checkpoint cmd_train(const RunConfig& cfg, const fs::path& data, const fs::path& out, bool force,
                     const FitOptions& opts = {});

/// Writes `out/<id>.cmrs` for every pair. Returns the written paths.
std::vector<fs::path> cmd_infer(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& data,
                                const fs::path& out, bool force);

/// Scores `recon` against `data`; writes metrics.csv, raw.csv and summary.txt
/// to `out` when it is non-empty.
MetricReport cmd_eval(const RunConfig& cfg, const fs::path& data, const fs::path& recon, const fs::path& out,
                      bool force);

struct AblationRow {
  int value = 0;
  MetricSummary summary;
};

struct AblationTable {
  int fixed_R = 0;
  int fixed_T = 0;
  MetricSummary raw;
  /// Inference step count varied at R = fixed_R.
  std::vector<AblationRow> T_rows;
  /// Ensemble size varied at T = fixed_T.
  std::vector<AblationRow> R_rows;

  std::string csv() const;
  std::string text() const;
};

AblationTable cmd_ablate(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& data,
                         const fs::path& out, bool force);

}  // namespace dcmr
