#include <doctest.h>

#include <cmath>
#include <random>

#include "dcmr/container.hpp"
#include "dcmr/metrics.hpp"
#include "test_util.hpp"

using namespace dcmr;

namespace {

// Direct 2D-window SSIM written independently of the separable version.
double naive_ssim(const RealImage& x, const RealImage& y) {
  const int n = 11;
  const double sigma = 1.5;
  std::vector<double> w(n * n);
  double tot = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double di = i - 5, dj = j - 5;
      w[i * n + j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      tot += w[i * n + j];
    }
  double lo = y.data[0], hi = y.data[0];
  for (float v : y.data) {
    lo = std::min<double>(lo, v);
    hi = std::max<double>(hi, v);
  }
  const double L = hi > lo ? hi - lo : 1.0;
  const double c1 = std::pow(0.01 * L, 2), c2 = std::pow(0.03 * L, 2);
  double acc = 0;
  int count = 0;
  for (int r = 0; r + n <= x.height; ++r)
    for (int c = 0; c + n <= x.width; ++c) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double k = w[i * n + j] / tot, a = x.at(r + i, c + j), b = y.at(r + i, c + j);
          mx += k * a;
          my += k * b;
        }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double k = w[i * n + j] / tot, a = x.at(r + i, c + j) - mx, b = y.at(r + i, c + j) - my;
          sxx += k * a * a;
          syy += k * b * b;
          sxy += k * a * b;
        }
      acc += (2 * mx * my + c1) * (2 * sxy + c2) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
      ++count;
    }
  return acc / count;
}

RealImage checkerboard(int n, bool invert) {
  RealImage g(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) g.at(r, c) = static_cast<float>(((r + c) % 2 == 0) != invert);
  return g;
}

RealImage noisy(const RealImage& ref, double sd, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> n(0, sd);
  RealImage out = ref;
  for (auto& v : out.data) v = static_cast<float>(v + n(gen));
  return out;
}

}  // namespace

TEST_CASE("psnr") {
  RealImage ref(10, 10);
  ref.data[0] = 1.f;
  RealImage x = ref;
  for (auto& v : x.data) v += 0.1f;
  CHECK(psnr(x, ref) == doctest::Approx(20.0).epsilon(1e-5));
  for (auto& v : x.data) v -= 0.09f;
  CHECK(psnr(x, ref) == doctest::Approx(40.0).epsilon(1e-4));
  CHECK(std::isinf(psnr(ref, ref)));
  CHECK(format_metric(psnr(ref, ref), 2) == "inf");
  CHECK_THROWS_AS(psnr(ref, RealImage(5, 5)), InvalidInput);
  CHECK_THROWS_AS(psnr(ref, RealImage(10, 10)), InvalidInput);
}

TEST_CASE("nmse") {
  const auto ref = testutil::random_image(8, 8, 1);
  const auto x = testutil::random_image(8, 8, 2);
  CHECK(nmse(ref, ref) == 0.0);
  CHECK(nmse(RealImage(8, 8), ref) == doctest::Approx(1.0).epsilon(1e-12));
  for (float c : {2.f, -0.5f, 4.f}) {
    RealImage cx = x, cr = ref;
    for (auto& v : cx.data) v *= c;
    for (auto& v : cr.data) v *= c;
    CHECK(nmse(cx, cr) == nmse(x, ref));
  }
  CHECK_THROWS_AS(nmse(x, RealImage(8, 8)), InvalidInput);
}

TEST_CASE("psnr and nmse duality at unit peak") {
  auto ref = testutil::random_image(16, 16, 3);
  ref.data[5] = 1.f;
  const auto x = noisy(ref, 0.05, 4);
  double p = 0;
  for (float v : ref.data) p += static_cast<double>(v) * v;
  p /= ref.size();
  CHECK(psnr(x, ref) == doctest::Approx(10 * std::log10(1 / (nmse(x, ref) * p))).epsilon(1e-10));
}

TEST_CASE("ssim matches a direct window evaluation") {
  const auto a = testutil::random_image(20, 17, 5), b = testutil::random_image(20, 17, 6);
  CHECK(ssim(a, b) == doctest::Approx(naive_ssim(a, b)).epsilon(1e-9));
  const auto c = noisy(a, 0.1, 7);
  CHECK(ssim(c, a) == doctest::Approx(naive_ssim(c, a)).epsilon(1e-9));

  const auto cb = checkerboard(16, false), inv = checkerboard(16, true);
  const double v = ssim(cb, inv);
  CHECK(v == doctest::Approx(naive_ssim(cb, inv)).epsilon(1e-9));
  CHECK(v < 0);
  MESSAGE("checkerboard vs inverse ssim " << v);
}

TEST_CASE("ssim identity, bounds and window requirement") {
  for (unsigned s = 1; s < 5; ++s) {
    const auto x = testutil::random_image(12, 14, s, -3.f, 5.f);
    CHECK(ssim(x, x) == 1.0);
  }
  RealImage flat(12, 12);
  std::fill(flat.data.begin(), flat.data.end(), 0.4f);
  CHECK(ssim(flat, flat) == 1.0);
  const auto a = testutil::random_image(16, 16, 8), b = testutil::random_image(16, 16, 9);
  const double v = ssim(a, b);
  CHECK(v >= -1.0);
  CHECK(v <= 1.0);
  CHECK_THROWS_AS(ssim(RealImage(10, 20), RealImage(10, 20)), InvalidInput);
}

TEST_CASE("metrics degrade monotonically with noise") {
  PairSpec spec;
  spec.height = spec.width = 32;
  const auto ref = make_pair(spec, 4).full;
  double last_p = 1e9, last_s = 2, last_n = -1;
  for (double sd : {0.01, 0.05, 0.2}) {
    const auto x = noisy(ref, sd, 11);
    const double p = psnr(x, ref), s = ssim(x, ref), n = nmse(x, ref);
    CHECK(p < last_p);
    CHECK(s < last_s);
    CHECK(n > last_n);
    last_p = p;
    last_s = s;
    last_n = n;
  }
}

TEST_CASE("summaries and report text") {
  std::vector<MetricRecord> rows{{"a", 30, 0.9, 0.1}, {"b", 20, 0.7, 0.3}};
  const auto s = summarize(rows);
  CHECK(s.psnr_mean == 25);
  CHECK(s.psnr_std == 5);
  CHECK(s.ssim_mean == doctest::Approx(0.8));
  CHECK(s.nmse_mean == doctest::Approx(0.2));
  MetricReport r;
  r.rows = rows;
  r.raw_rows = rows;
  r.summary = r.raw_summary = s;
  CHECK(r.csv().rfind("id,psnr,ssim,nmse\n", 0) == 0);
  CHECK(r.csv().find("a,30.000000,0.900000,0.100000\n") != std::string::npos);
  CHECK(r.text().find("RAW") != std::string::npos);
  MetricConfig bad;
  bad.ssim_window = 4;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("dataset evaluation") {
  const auto dir = testutil::scratch_dir("evaluate");
  PairSpec spec;
  spec.height = spec.width = 16;
  const auto m = build_dataset(spec, 4, 50, dir / "data");
  std::filesystem::create_directories(dir / "truth");
  std::filesystem::create_directories(dir / "input");
  for (const auto& e : m.entries) {
    const auto pair = load_pair(m, e);
    container::write(dir / "truth" / (e.id + ".cmrs"), pair.full);
    container::write(dir / "input" / (e.id + ".cmrs"), pair.under);
  }
  const auto truth = evaluate(m, dir / "truth");
  REQUIRE(truth.rows.size() == 4u);
  for (const auto& r : truth.rows) {
    CHECK(r.nmse == 0.0);
    CHECK(r.ssim == 1.0);
  }

  const auto input = evaluate(m, dir / "input");
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(input.rows[i].psnr == input.raw_rows[i].psnr);
    CHECK(input.rows[i].ssim == input.raw_rows[i].ssim);
    CHECK(input.rows[i].nmse == input.raw_rows[i].nmse);
  }
  double mean = 0;
  for (const auto& r : input.rows) mean += r.nmse;
  CHECK(input.summary.nmse_mean == doctest::Approx(mean / 4).epsilon(1e-12));

  std::filesystem::remove(dir / "input" / "p00001.cmrs");
  std::filesystem::remove(dir / "input" / "p00003.cmrs");
  try {
    evaluate(m, dir / "input");
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    const std::string msg = e.what();
    CHECK(msg.find("p00001") != std::string::npos);
    CHECK(msg.find("p00003") != std::string::npos);
    CHECK(msg.find("p00000") == std::string::npos);
  }
}
