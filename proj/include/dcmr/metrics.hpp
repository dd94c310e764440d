#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "dcmr/datagen.hpp"
#include "dcmr/image.hpp"

namespace dcmr {

struct MetricConfig {
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double ssim_k1 = 0.01;
  double ssim_k2 = 0.03;
  /// Clamp reconstructions to [0, 1] before scoring.
  bool clamp = true;

  void validate() const;
  friend bool operator==(const MetricConfig&, const MetricConfig&) = default;
};

/// 10 log10(max(ref)^2 / MSE); +inf when the images are identical.
double psnr(const RealImage& x, const RealImage& ref);
/// ||x - ref||^2 / ||ref||^2
double nmse(const RealImage& x, const RealImage& ref);
/// Gaussian-window SSIM averaged over valid window positions, with dynamic
/// range L = max(ref) - min(ref) (1 when ref is constant).
double ssim(const RealImage& x, const RealImage& ref, const MetricConfig& cfg = {});

struct MetricRecord {
  std::string id;
  double psnr = 0;
  double ssim = 0;
  double nmse = 0;
};

struct MetricSummary {
  double psnr_mean = 0, psnr_std = 0;
  double ssim_mean = 0, ssim_std = 0;
  double nmse_mean = 0, nmse_std = 0;
};

MetricSummary summarize(const std::vector<MetricRecord>& rows);
MetricRecord score(const std::string& id, const RealImage& x, const RealImage& ref, const MetricConfig& cfg = {});

struct MetricReport {
  std::vector<MetricRecord> rows;
  /// Under-sampled input scored against the fully-sampled slice.
  std::vector<MetricRecord> raw_rows;
  MetricSummary summary;
  MetricSummary raw_summary;

  std::string csv() const;
  std::string raw_csv() const;
  /// Aligned text table with RAW and reconstruction rows.
  std::string text(const std::string& label = "Recon") const;
};

/// Scores `recon_dir/<id>.cmrs` against each pair's fully-sampled slice.
/// Throws InvalidInput listing every id without a reconstruction.
MetricReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& recon_dir,
                      const MetricConfig& cfg = {});

std::string format_metric(double v, int precision);

}  // namespace dcmr
