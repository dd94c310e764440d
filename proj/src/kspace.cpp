#include "dcmr/kspace.hpp"

#include <fftw3.h>

#include <cmath>
#include <stdexcept>

namespace dcmr {

namespace {

using cd = std::complex<double>;

void check_finite(const ComplexGrid& g, const char* what) {
  require(g.height >= 1 && g.width >= 1 && g.size() == static_cast<std::size_t>(g.height) * g.width,
          std::string(what) + ": invalid grid dimensions");
  for (const auto& v : g.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InvalidInput(std::string(what) + ": non-finite sample");
}

// Centered orthonormal transform: out[k] = n^{-1/2} sum_j x[j] exp(sign 2 pi i (k - c)(j - c) / n)
// with c = n / 2 per axis, computed by shifting around an FFTW transform.
ComplexGrid transform(const ComplexGrid& in, int sign) {
  const int h = in.height, w = in.width, ch = h / 2, cw = w / 2;
  std::vector<cd> buf(in.size());
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      buf[static_cast<std::size_t>(r) * w + c] = cd(in.at((r + ch) % h, (c + cw) % w));

  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan plan = fftw_plan_dft_2d(h, w, data, data, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!plan) throw std::runtime_error("fftw: planning failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
  ComplexGrid out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      out.at(r, c) = std::complex<float>(buf[static_cast<std::size_t>((r - ch + h) % h) * w + (c - cw + w) % w] * scale);
  return out;
}

}  // namespace

ComplexGrid dft2(const ComplexGrid& img) {
  check_finite(img, "dft2");
  return transform(img, -1);
}

ComplexGrid idft2(const ComplexGrid& k) {
  check_finite(k, "idft2");
  return transform(k, +1);
}

ComplexGrid zero_pad_center(const ComplexGrid& k, int target_h, int target_w) {
  require(target_h >= k.height && target_w >= k.width, "zero_pad_center: target smaller than source");
  ComplexGrid out(target_h, target_w);
  const int r0 = (target_h - k.height) / 2, c0 = (target_w - k.width) / 2;
  for (int r = 0; r < k.height; ++r)
    for (int c = 0; c < k.width; ++c) out.at(r0 + r, c0 + c) = k.at(r, c);
  return out;
}

ComplexGrid crop_center(const ComplexGrid& k, int h, int w) {
  require(h >= 1 && w >= 1 && h <= k.height && w <= k.width, "crop_center: target larger than source");
  ComplexGrid out(h, w);
  const int r0 = (k.height - h) / 2, c0 = (k.width - w) / 2;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = k.at(r0 + r, c0 + c);
  return out;
}

SamplingMask make_striped_mask(int height, int accel, int acs_lines) {
  require(height >= 1, "make_striped_mask: height must be >= 1");
  require(accel >= 1, "make_striped_mask: acceleration must be >= 1");
  require(accel <= height, "make_striped_mask: acceleration exceeds height");
  require(acs_lines >= 0 && acs_lines <= height, "make_striped_mask: acs_lines out of range");
  SamplingMask m{height, {}};
  for (int r = 0; r < height; r += accel) m.kept_rows.insert(r);
  const int start = height / 2 - acs_lines / 2;
  for (int i = 0; i < acs_lines; ++i) {
    const int r = start + i;
    if (r >= 0 && r < height) m.kept_rows.insert(r);
  }
  return m;
}

int default_acs_lines(int height) { return static_cast<int>(std::lround(height * 24.0 / 512.0)); }

SamplingMask full_mask(int height) { return make_striped_mask(height, 1, 0); }

ComplexGrid apply_mask(const ComplexGrid& k, const SamplingMask& m) {
  require(m.height == k.height, "apply_mask: mask height does not match grid height");
  ComplexGrid out(k.height, k.width);
  for (int r : m.kept_rows) {
    require(r >= 0 && r < k.height, "apply_mask: mask row out of range");
    auto src = k.row(r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

CoilStack::CoilStack(std::vector<ComplexGrid> g) : grids(std::move(g)) {
  for (const auto& c : grids) require(c.same_shape(grids.front()), "CoilStack: coil grids differ in shape");
}

RealImage rss(const CoilStack& coils) {
  require(!coils.grids.empty(), "rss: empty coil stack");
  const auto& first = coils.grids.front();
  std::vector<double> acc(first.size(), 0.0);
  for (const auto& g : coils.grids) {
    require(g.same_shape(first), "rss: coil grids differ in shape");
    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += std::norm(std::complex<double>(g.data[i]));
  }
  RealImage out(first.height, first.width);
  for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = static_cast<float>(std::sqrt(acc[i]));
  return out;
}

RealImage magnitude(const ComplexGrid& g) {
  RealImage out(g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) out.data[i] = std::abs(g.data[i]);
  return out;
}

ComplexGrid to_complex(const RealImage& img) {
  ComplexGrid out(img.height, img.width);
  for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = img.data[i];
  return out;
}

double l2_norm(const ComplexGrid& g) {
  double s = 0;
  for (const auto& v : g.data) s += std::norm(std::complex<double>(v));
  return std::sqrt(s);
}

RealImage clamp_unit(const RealImage& img) {
  RealImage out = img;
  for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

}  // namespace dcmr
