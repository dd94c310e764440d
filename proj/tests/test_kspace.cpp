#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dcmr/kspace.hpp"
#include "test_util.hpp"

using namespace dcmr;
using testutil::random_complex;

namespace {

// Direct 2D sum with the shift written explicitly: X[k] = sum_j x[j] e^{-2 pi i (k-c)(j-c)/n} / sqrt(n).
ComplexGrid naive_dft(const ComplexGrid& x) {
  const int h = x.height, w = x.width, ch = h / 2, cw = w / 2;
  ComplexGrid out(h, w);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      std::complex<double> s = 0;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double ang = -2 * std::numbers::pi *
                             (static_cast<double>((u - ch) * (r - ch)) / h + static_cast<double>((v - cw) * (c - cw)) / w);
          s += std::complex<double>(x.at(r, c)) * std::polar(1.0, ang);
        }
      out.at(u, v) = std::complex<float>(s / std::sqrt(static_cast<double>(h) * w));
    }
  return out;
}

double rel_diff(const ComplexGrid& a, const ComplexGrid& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(std::complex<double>(a.data[i]) - std::complex<double>(b.data[i]));
    den += std::norm(std::complex<double>(b.data[i]));
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("dft2 matches a direct centered sum") {
  for (auto [h, w] : {std::pair{5, 4}, {8, 8}, {7, 3}, {1, 6}}) {
    const auto x = random_complex(h, w, 11 + h * w);
    CHECK(rel_diff(dft2(x), naive_dft(x)) < 1e-6);
  }
}

TEST_CASE("dc term of a constant image sits at the center index") {
  for (int n : {4, 5}) {
    ComplexGrid x(n, n);
    for (auto& v : x.data) v = 1.f;
    const auto k = dft2(x);
    CHECK(std::abs(k.at(n / 2, n / 2) - std::complex<float>(static_cast<float>(n), 0.f)) < 1e-5);
    float off = 0;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        if (r != n / 2 || c != n / 2) off = std::max(off, std::abs(k.at(r, c)));
    CHECK(off < 1e-5);
  }
}

TEST_CASE("round trip, Parseval and linearity over both parities") {
  for (int h : {2, 3, 8, 17, 32, 64})
    for (int w : {2, 5, 16, 33}) {
      CAPTURE(h);
      CAPTURE(w);
      const auto x = random_complex(h, w, h * 100 + w);
      const auto k = dft2(x);
      CHECK(rel_diff(idft2(k), x) <= 1e-6);
      const double ratio = l2_norm(k) / l2_norm(x);
      CHECK(ratio >= 1 - 1e-6);
      CHECK(ratio <= 1 + 1e-6);

      const auto y = random_complex(h, w, h * 100 + w + 1);
      const std::complex<float> a(0.5f, -1.25f), b(-2.f, 0.75f);
      ComplexGrid lin(h, w), expect(h, w);
      const auto ky = dft2(y);
      for (std::size_t i = 0; i < lin.size(); ++i) {
        lin.data[i] = a * x.data[i] + b * y.data[i];
        expect.data[i] = a * k.data[i] + b * ky.data[i];
      }
      CHECK(rel_diff(dft2(lin), expect) <= 1e-6);
    }
}

TEST_CASE("empty grids are rejected") {
  ComplexGrid g;
  CHECK_THROWS_AS(dft2(g), InvalidInput);
}

TEST_CASE("zero padding and cropping") {
  const auto k = random_complex(5, 6, 3);
  const auto p = zero_pad_center(k, 9, 11);
  CHECK(p.height == 9);
  CHECK(p.width == 11);
  // source block starts at floor((9-5)/2) = 2 and floor((11-6)/2) = 2
  CHECK(p.at(2, 2) == k.at(0, 0));
  CHECK(p.at(6, 7) == k.at(4, 5));
  CHECK(p.at(0, 0) == std::complex<float>(0.f, 0.f));
  CHECK(crop_center(p, 5, 6) == k);
  CHECK(zero_pad_center(k, 5, 6) == k);
  CHECK_THROWS_AS(zero_pad_center(k, 4, 6), InvalidInput);
  CHECK_THROWS_AS(crop_center(k, 6, 6), InvalidInput);
}

TEST_CASE("striped mask layout") {
  const auto m = make_striped_mask(16, 4, 2);
  CHECK(m.height == 16);
  CHECK(m.kept_rows == std::set<int>{0, 4, 7, 8, 12});
  CHECK(default_acs_lines(512) == 24);
  CHECK(default_acs_lines(64) == 3);
  CHECK(full_mask(7).kept_rows.size() == 7u);
  CHECK_THROWS_AS(make_striped_mask(8, 0, 0), InvalidInput);
  CHECK_THROWS_AS(make_striped_mask(8, 9, 0), InvalidInput);
  CHECK_THROWS_AS(make_striped_mask(8, 2, 9), InvalidInput);
}

TEST_CASE("mask row fraction bound by enumeration") {
  for (int h = 1; h <= 64; ++h)
    for (int accel = 1; accel <= h; ++accel)
      for (int acs = 0; acs <= std::min(h, 8); ++acs) {
        const auto m = make_striped_mask(h, accel, acs);
        const int stripes = (h + accel - 1) / accel;
        CHECK_LE(static_cast<int>(m.kept_rows.size()), stripes + acs);
        if (h % accel == 0) CHECK_LE(m.fraction(), 1.0 / accel + static_cast<double>(acs) / h + 1e-12);
      }
}

TEST_CASE("apply_mask is an idempotent non-expanding projection") {
  const auto k = random_complex(12, 9, 5);
  const auto m = make_striped_mask(12, 3, 2);
  const auto once = apply_mask(k, m);
  CHECK(apply_mask(once, m) == once);
  CHECK(l2_norm(once) <= l2_norm(k));
  for (int r = 0; r < 12; ++r)
    for (int c = 0; c < 9; ++c)
      CHECK(once.at(r, c) == (m.keeps(r) ? k.at(r, c) : std::complex<float>(0.f, 0.f)));
  CHECK_THROWS_AS(apply_mask(k, make_striped_mask(10, 2, 0)), InvalidInput);
}

TEST_CASE("rss of the 3-4-5 case is exact") {
  ComplexGrid a(1, 1), b(1, 1);
  a.data[0] = {3.f, 0.f};
  b.data[0] = {0.f, 4.f};
  const auto r = rss(CoilStack({a, b}));
  CHECK(r.data[0] == 5.f);
}

TEST_CASE("adding a coil never decreases rss") {
  std::vector<ComplexGrid> coils{random_complex(6, 7, 1)};
  RealImage prev = rss(CoilStack(coils));
  for (unsigned s = 2; s < 6; ++s) {
    coils.push_back(random_complex(6, 7, s));
    const RealImage next = rss(CoilStack(coils));
    for (std::size_t i = 0; i < next.size(); ++i) CHECK(next.data[i] >= prev.data[i]);
    prev = next;
  }
}

TEST_CASE("magnitude and to_complex") {
  const auto img = testutil::random_image(4, 4, 9);
  CHECK(magnitude(to_complex(img)) == img);
  CHECK_THROWS_AS(CoilStack({random_complex(2, 2, 1), random_complex(3, 2, 1)}), InvalidInput);
}
