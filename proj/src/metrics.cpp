#include "dcmr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "dcmr/container.hpp"

namespace dcmr {

void MetricConfig::validate() const {
  require(ssim_window >= 1 && ssim_window % 2 == 1, "metrics.ssim_window must be a positive odd integer");
  require(ssim_sigma > 0, "metrics.ssim_sigma must be > 0");
  require(ssim_k1 > 0 && ssim_k2 > 0, "metrics.ssim_k1 and ssim_k2 must be > 0");
}

namespace {

double energy(const RealImage& img) {
  double s = 0;
  for (float v : img.data) s += static_cast<double>(v) * v;
  return s;
}

double squared_error(const RealImage& x, const RealImage& ref) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x.data[i]) - ref.data[i];
    s += d * d;
  }
  return s;
}

std::vector<double> gaussian_window(int n, double sigma) {
  std::vector<double> g(n);
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const double d = i - (n - 1) / 2.0;
    g[i] = std::exp(-d * d / (2 * sigma * sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable weighted sums over every valid window position.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w, const std::vector<double>& g) {
  const int n = static_cast<int>(g.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += g[k] * img[static_cast<std::size_t>(r) * w + c + k];
      tmp[static_cast<std::size_t>(r) * ow + c] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += g[k] * tmp[static_cast<std::size_t>(r + k) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = s;
    }
  return out;
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0;
  sd = 0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= v.size();
  if (!std::isfinite(mean)) return;
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / v.size());
}

}  // namespace

double psnr(const RealImage& x, const RealImage& ref) {
  require_same_shape(x, ref, "psnr");
  const float peak = *std::max_element(ref.data.begin(), ref.data.end());
  if (energy(ref) == 0) throw InvalidInput("psnr: reference image is identically zero");
  const double mse = squared_error(x, ref) / x.size();
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(peak) * peak / mse);
}

double nmse(const RealImage& x, const RealImage& ref) {
  require_same_shape(x, ref, "nmse");
  const double e = energy(ref);
  if (e == 0) throw InvalidInput("nmse: reference image is identically zero");
  return squared_error(x, ref) / e;
}

double ssim(const RealImage& x, const RealImage& ref, const MetricConfig& cfg) {
  require_same_shape(x, ref, "ssim");
  cfg.validate();
  const int n = cfg.ssim_window;
  if (x.height < n || x.width < n)
    throw InvalidInput("ssim: image " + std::to_string(x.height) + "x" + std::to_string(x.width) +
                       " smaller than the " + std::to_string(n) + "x" + std::to_string(n) + " window");
  const auto [lo, hi] = std::minmax_element(ref.data.begin(), ref.data.end());
  const double L = *hi > *lo ? static_cast<double>(*hi) - *lo : 1.0;
  const double c1 = (cfg.ssim_k1 * L) * (cfg.ssim_k1 * L);
  const double c2 = (cfg.ssim_k2 * L) * (cfg.ssim_k2 * L);

  const std::size_t N = x.size();
  std::vector<double> a(N), b(N), aa(N), bb(N), ab(N);
  for (std::size_t i = 0; i < N; ++i) {
    a[i] = x.data[i];
    b[i] = ref.data[i];
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto g = gaussian_window(n, cfg.ssim_sigma);
  const int h = x.height, w = x.width;
  const auto mu_a = filter_valid(a, h, w, g), mu_b = filter_valid(b, h, w, g);
  const auto e_aa = filter_valid(aa, h, w, g), e_bb = filter_valid(bb, h, w, g), e_ab = filter_valid(ab, h, w, g);

  double total = 0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double va = e_aa[i] - mu_a[i] * mu_a[i];
    const double vb = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
    total += num / den;
  }
  return std::clamp(total / mu_a.size(), -1.0, 1.0);
}

MetricSummary summarize(const std::vector<MetricRecord>& rows) {
  std::vector<double> p, s, e;
  for (const auto& r : rows) {
    p.push_back(r.psnr);
    s.push_back(r.ssim);
    e.push_back(r.nmse);
  }
  MetricSummary out;
  mean_std(p, out.psnr_mean, out.psnr_std);
  mean_std(s, out.ssim_mean, out.ssim_std);
  mean_std(e, out.nmse_mean, out.nmse_std);
  return out;
}

MetricRecord score(const std::string& id, const RealImage& x, const RealImage& ref, const MetricConfig& cfg) {
  const RealImage v = cfg.clamp ? clamp_unit(x) : x;
  return {id, psnr(v, ref), ssim(v, ref, cfg), nmse(v, ref)};
}

std::string format_metric(double v, int precision) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

namespace {

std::string rows_csv(const std::vector<MetricRecord>& rows) {
  std::ostringstream os;
  os << "id,psnr,ssim,nmse\n";
  for (const auto& r : rows)
    os << r.id << ',' << format_metric(r.psnr, 6) << ',' << format_metric(r.ssim, 6) << ','
       << format_metric(r.nmse, 6) << '\n';
  return os.str();
}

std::string pm(double mean, double sd, int precision) {
  return format_metric(mean, precision) + " +/- " + format_metric(sd, precision);
}

}  // namespace

std::string MetricReport::csv() const { return rows_csv(rows); }
std::string MetricReport::raw_csv() const { return rows_csv(raw_rows); }

std::string MetricReport::text(const std::string& label) const {
  std::ostringstream os;
  os << std::left << std::setw(10) << "Method" << std::setw(20) << "PSNR" << std::setw(20) << "SSIM"
     << "NMSE" << '\n';
  auto line = [&](const std::string& name, const MetricSummary& s) {
    os << std::left << std::setw(10) << name << std::setw(20) << pm(s.psnr_mean, s.psnr_std, 2) << std::setw(20)
       << pm(s.ssim_mean, s.ssim_std, 4) << pm(s.nmse_mean, s.nmse_std, 4) << '\n';
  };
  line("RAW", raw_summary);
  line(label, summary);
  os << "pairs: " << rows.size() << '\n';
  return os.str();
}

MetricReport evaluate(const DatasetManifest& manifest, const std::filesystem::path& recon_dir,
                      const MetricConfig& cfg) {
  cfg.validate();
  std::vector<std::string> missing;
  for (const auto& e : manifest.entries)
    if (!std::filesystem::exists(recon_dir / (e.id + ".cmrs"))) missing.push_back(e.id);
  if (!missing.empty()) {
    std::string msg = "missing reconstructions in " + recon_dir.string() + ":";
    for (const auto& id : missing) msg += " " + id;
    throw InvalidInput(msg);
  }
  MetricReport report;
  for (const auto& e : manifest.entries) {
    const SlicePair pair = load_pair(manifest, e);
    const RealImage recon = container::read_real(recon_dir / (e.id + ".cmrs"));
    if (!recon.same_shape(pair.full))
      throw InvalidInput("reconstruction " + e.id + " has shape " + std::to_string(recon.height) + "x" +
                         std::to_string(recon.width) + ", expected " + std::to_string(pair.full.height) + "x" +
                         std::to_string(pair.full.width));
    report.rows.push_back(score(e.id, recon, pair.full, cfg));
    report.raw_rows.push_back(score(e.id, pair.under, pair.full, cfg));
  }
  report.summary = summarize(report.rows);
  report.raw_summary = summarize(report.raw_rows);
  return report;
}

}  // namespace dcmr
