#include "dcmr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dcmr/container.hpp"
#include "dcmr/io.hpp"
#include "dcmr/rng.hpp"

namespace dcmr {

namespace fs = std::filesystem;

RealImage generate_phantom(const PhantomParams& p, int h, int w) {
  require(h >= 8 && w >= 8, "generate_phantom: dimensions must be >= 8");
  require(p.n_ellipses >= 0, "generate_phantom: n_ellipses must be >= 0");
  require(p.intensity_min >= 0 && p.intensity_max <= 1 && p.intensity_min <= p.intensity_max,
          "generate_phantom: intensity range must lie in [0, 1]");
  require(p.size_min > 0 && p.size_min <= p.size_max, "generate_phantom: invalid size range");

  Rng rng(p.seed, "phantom");
  std::vector<double> acc(static_cast<std::size_t>(h) * w, 0.0);
  const double pixel = 2.0 / std::min(h, w);  // one pixel in normalized units

  for (int e = 0; e < p.n_ellipses; ++e) {
    double cy, cx, a, b, value;
    if (e == 0) {
      cy = rng.uniform(-0.1, 0.1);
      cx = rng.uniform(-0.1, 0.1);
      a = rng.uniform(0.6, 0.8);
      b = rng.uniform(0.5, 0.75);
      value = rng.uniform(p.intensity_min, 0.5 * (p.intensity_min + p.intensity_max));
    } else {
      cy = rng.uniform(-0.5, 0.5);
      cx = rng.uniform(-0.5, 0.5);
      a = rng.uniform(p.size_min, p.size_max);
      b = rng.uniform(p.size_min, p.size_max);
      value = rng.uniform(p.intensity_min, p.intensity_max);
    }
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double ct = std::cos(theta), st = std::sin(theta);
    // Edge ramp spans one pixel measured along the shorter semi-axis.
    const double ramp = pixel / std::min(a, b);

    for (int r = 0; r < h; ++r) {
      const double y = (r - (h - 1) / 2.0) / (h / 2.0) - cy;
      for (int c = 0; c < w; ++c) {
        const double x = (c - (w - 1) / 2.0) / (w / 2.0) - cx;
        const double u = (x * ct + y * st) / a;
        const double v = (-x * st + y * ct) / b;
        const double d = std::sqrt(u * u + v * v);
        const double cover = std::clamp((1.0 - d) / ramp + 0.5, 0.0, 1.0);
        acc[static_cast<std::size_t>(r) * w + c] += value * cover;
      }
    }
  }

  RealImage img(h, w);
  for (std::size_t i = 0; i < acc.size(); ++i) img.data[i] = static_cast<float>(std::clamp(acc[i], 0.0, 1.0));
  return img;
}

std::string CoilMode::str() const { return multi ? "multi:" + std::to_string(n_coils) : "single"; }

CoilMode CoilMode::parse(const std::string& s) {
  if (s == "single") return single();
  if (s.rfind("multi:", 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(s.substr(6));
    } catch (const std::exception&) {
      throw InvalidInput("invalid coil mode: " + s);
    }
    require(n >= 1, "coil mode needs at least one coil: " + s);
    return multi_coil(n);
  }
  throw InvalidInput("invalid coil mode: " + s);
}

std::vector<RealImage> coil_sensitivities(int h, int w, int n_coils, std::uint64_t seed, CoilOptions opts) {
  require(n_coils >= 1, "simulate_coils: n_coils must be >= 1");
  std::vector<RealImage> out;
  out.reserve(n_coils);
  Rng rng(seed, "coils");
  const double offset = rng.uniform(0.0, 2.0 * std::numbers::pi / n_coils);
  const double extent = std::max(h, w);
  const double radius = extent / 2.0;
  const double sigma = extent / 2.0;
  const double cy0 = (h - 1) / 2.0, cx0 = (w - 1) / 2.0;
  for (int c = 0; c < n_coils; ++c) {
    RealImage s(h, w);
    if (opts.uniform_override) {
      std::fill(s.data.begin(), s.data.end(), 1.0f);
    } else {
      const double ang = 2.0 * std::numbers::pi * c / n_coils + offset;
      const double cy = cy0 + radius * std::sin(ang), cx = cx0 + radius * std::cos(ang);
      for (int r = 0; r < h; ++r)
        for (int col = 0; col < w; ++col) {
          const double d2 = (r - cy) * (r - cy) + (col - cx) * (col - cx);
          s.at(r, col) = static_cast<float>(std::exp(-d2 / (2.0 * sigma * sigma)));
        }
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

CoilStack apply_sensitivities(const ComplexGrid& img, const std::vector<RealImage>& sens) {
  std::vector<ComplexGrid> grids;
  grids.reserve(sens.size());
  for (const auto& s : sens) {
    ComplexGrid g(img.height, img.width);
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = img.data[i] * s.data[i];
    grids.push_back(std::move(g));
  }
  return CoilStack(std::move(grids));
}

RealImage combined_profile(const std::vector<RealImage>& sens) {
  std::vector<ComplexGrid> g;
  for (const auto& s : sens) g.push_back(to_complex(s));
  return rss(CoilStack(std::move(g)));
}

void divide_by(RealImage& img, const RealImage& profile) {
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] /= profile.data[i];
}

// k-space -> (optional zero padding) -> image domain.
ComplexGrid to_image(const ComplexGrid& k, int pad) {
  return pad > 0 ? idft2(zero_pad_center(k, pad, pad)) : idft2(k);
}

}  // namespace

CoilStack simulate_coils(const RealImage& img, int n_coils, std::uint64_t seed, CoilOptions opts) {
  return apply_sensitivities(to_complex(img), coil_sensitivities(img.height, img.width, n_coils, seed, opts));
}

RealImage degrade(const RealImage& full, const SamplingMask& mask, CoilMode mode, std::uint64_t coil_seed) {
  require(mask.height == full.height, "degrade: mask height does not match image height");
  if (!mode.multi) return magnitude(idft2(apply_mask(dft2(to_complex(full)), mask)));

  const auto sens = coil_sensitivities(full.height, full.width, mode.n_coils, coil_seed);
  CoilStack coils = apply_sensitivities(to_complex(full), sens);
  for (auto& g : coils.grids) g = idft2(apply_mask(dft2(g), mask));
  RealImage out = rss(coils);
  divide_by(out, combined_profile(sens));
  return out;
}

RealImage resize_bilinear(const RealImage& img, int h, int w) {
  require(h >= 1 && w >= 1, "resize_bilinear: dimensions must be >= 1");
  if (h == img.height && w == img.width) return img;
  RealImage out(h, w);
  const double sy = h > 1 ? static_cast<double>(img.height - 1) / (h - 1) : 0.0;
  const double sx = w > 1 ? static_cast<double>(img.width - 1) / (w - 1) : 0.0;
  for (int r = 0; r < h; ++r) {
    const double y = r * sy;
    const int y0 = std::min(static_cast<int>(y), img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = y - y0;
    for (int c = 0; c < w; ++c) {
      const double x = c * sx;
      const int x0 = std::min(static_cast<int>(x), img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = x - x0;
      const double top = (1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1);
      const double bot = (1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1);
      out.at(r, c) = static_cast<float>((1 - fy) * top + fy * bot);
    }
  }
  return out;
}

SlicePair make_pair(const PairSpec& spec, std::uint64_t seed) {
  require(spec.kspace_pad == 0 || (spec.kspace_pad >= spec.height && spec.kspace_pad >= spec.width),
          "make_pair: kspace_pad smaller than the slice");
  PhantomParams pp = spec.phantom;
  pp.seed = seed;
  const RealImage phantom = generate_phantom(pp, spec.height, spec.width);
  const int acs = spec.acs_lines < 0 ? default_acs_lines(spec.height) : spec.acs_lines;
  const SamplingMask mask = make_striped_mask(spec.height, spec.accel, acs);

  ComplexGrid image = to_complex(phantom);
  if (spec.smooth_phase) {
    Rng rng(seed, "phase");
    const double a = rng.uniform(-1.5, 1.5), b = rng.uniform(-1.5, 1.5), q = rng.uniform(-1.0, 1.0);
    for (int r = 0; r < image.height; ++r)
      for (int c = 0; c < image.width; ++c) {
        const double y = 2.0 * r / image.height - 1.0, x = 2.0 * c / image.width - 1.0;
        image.at(r, c) *= std::polar(1.0f, static_cast<float>(a * x + b * y + q * (x * x + y * y)));
      }
  }

  RealImage full, under;
  if (!spec.coil_mode.multi) {
    const ComplexGrid k = dft2(image);
    full = magnitude(to_image(k, spec.kspace_pad));
    under = magnitude(to_image(apply_mask(k, mask), spec.kspace_pad));
  } else {
    const auto sens = coil_sensitivities(spec.height, spec.width, spec.coil_mode.n_coils, seed);
    const CoilStack coils = apply_sensitivities(image, sens);
    CoilStack full_coils, under_coils;
    for (const auto& g : coils.grids) {
      const ComplexGrid k = dft2(g);
      full_coils.grids.push_back(to_image(k, spec.kspace_pad));
      under_coils.grids.push_back(to_image(apply_mask(k, mask), spec.kspace_pad));
    }
    RealImage profile = combined_profile(sens);
    full = rss(full_coils);
    under = rss(under_coils);
    if (spec.kspace_pad > 0) profile = resize_bilinear(profile, full.height, full.width);
    divide_by(full, profile);
    divide_by(under, profile);
  }

  if (spec.resize > 0) {
    full = resize_bilinear(full, spec.resize, spec.resize);
    under = resize_bilinear(under, spec.resize, spec.resize);
  }

  const float peak = *std::max_element(full.data.begin(), full.data.end());
  const float scale = peak > 0 ? 1.0f / peak : 1.0f;
  for (auto& v : full.data) v = std::clamp(v * scale, 0.0f, 1.0f);
  for (auto& v : under.data) v = std::clamp(v * scale, 0.0f, 1.0f);
  return {std::move(under), std::move(full), spec.accel, spec.coil_mode, seed};
}

namespace {

std::string pair_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%05d", i);
  return buf;
}

}  // namespace

void write_manifest(const DatasetManifest& m) {
  std::ostringstream os;
  os << "# split=" << m.split << '\n';
  for (const auto& e : m.entries)
    os << e.id << '\t' << e.relative_path << '\t' << e.accel << '\t' << e.coil_mode.str() << '\t' << e.seed << '\n';
  io::write_file_atomic(m.root / kManifestFile, os.str());
}

DatasetManifest build_dataset(const PairSpec& spec, int n_pairs, std::uint64_t seed, const fs::path& out_dir,
                              const std::string& split) {
  require(n_pairs >= 0, "build_dataset: n_pairs must be >= 0");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw EnvironmentError("cannot create dataset directory " + out_dir.string() + ": " + ec.message());

  DatasetManifest m{out_dir, split, {}};
  for (int i = 0; i < n_pairs; ++i) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    const SlicePair pair = make_pair(spec, s);
    ManifestEntry e{pair_id(i), "pairs/" + pair_id(i), spec.accel, spec.coil_mode, s};
    container::write(out_dir / e.relative_path / "under.cmrs", pair.under);
    container::write(out_dir / e.relative_path / "full.cmrs", pair.full);
    m.entries.push_back(std::move(e));
  }
  write_manifest(m);
  return m;
}

DatasetManifest load_manifest(const fs::path& dir) {
  const fs::path file = dir / kManifestFile;
  std::ifstream in(file);
  if (!in) throw EnvironmentError("cannot open manifest " + file.string());
  DatasetManifest m{dir, "train", {}};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# split=", 0) == 0) m.split = line.substr(8);
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, '\t');) f.push_back(tok);
    if (f.size() != 5) throw FormatError(file.string() + ":" + std::to_string(lineno) + ": expected 5 fields");
    ManifestEntry e;
    e.id = f[0];
    e.relative_path = f[1];
    try {
      e.accel = std::stoi(f[2]);
      e.seed = std::stoull(f[4]);
    } catch (const std::exception&) {
      throw FormatError(file.string() + ":" + std::to_string(lineno) + ": bad numeric field");
    }
    e.coil_mode = CoilMode::parse(f[3]);
    for (const auto& existing : m.entries)
      if (existing.id == e.id) throw FormatError(file.string() + ": duplicate id " + e.id);
    for (const char* name : {"under.cmrs", "full.cmrs"})
      if (!fs::exists(dir / e.relative_path / name))
        throw EnvironmentError("manifest entry " + e.id + ": missing " + (dir / e.relative_path / name).string());
    m.entries.push_back(std::move(e));
  }
  return m;
}

SlicePair load_pair(const DatasetManifest& m, const ManifestEntry& e) {
  SlicePair p;
  p.under = container::read_real(m.root / e.relative_path / "under.cmrs");
  p.full = container::read_real(m.root / e.relative_path / "full.cmrs");
  if (!p.under.same_shape(p.full)) throw FormatError("pair " + e.id + ": under/full shapes differ");
  p.accel = e.accel;
  p.coil_mode = e.coil_mode;
  p.seed = e.seed;
  return p;
}

std::vector<SlicePair> load_pairs(const DatasetManifest& m) {
  std::vector<SlicePair> out;
  out.reserve(m.size());
  for (const auto& e : m.entries) out.push_back(load_pair(m, e));
  return out;
}

}  // namespace dcmr
