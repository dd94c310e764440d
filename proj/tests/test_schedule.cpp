#include <doctest.h>

#include <cmath>
#include <random>

#include "dcmr/schedule.hpp"
#include "test_util.hpp"

using namespace dcmr;

TEST_CASE("linear beta endpoints and midpoint") {
  for (int T : {2, 3, 10, 50, 100, 999, 1000}) {
    CHECK(linear_beta(1, T) == 1e-4);
    CHECK(linear_beta(T, T) == 2e-2);
  }
  CHECK(linear_beta(500, 999) == doctest::Approx(1.005e-2).epsilon(1e-12));
  CHECK(linear_beta(1, 1) == 1e-4);
  CHECK_THROWS_AS(linear_beta(0, 10), InvalidInput);
  CHECK_THROWS_AS(linear_beta(11, 10), InvalidInput);
}

TEST_CASE("two-step schedule by hand") {
  const auto s = build_schedule(2);
  CHECK(s.beta(1) == 1e-4);
  CHECK(s.beta(2) == 2e-2);
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.alpha_bar(1) == doctest::Approx(0.9999).epsilon(1e-14));
  CHECK(s.alpha_bar(2) == doctest::Approx(0.979902).epsilon(1e-12));
  CHECK(s.posterior_variance(1) == 0.0);
  // (1 - 0.9999) / (1 - 0.979902) * 0.02
  CHECK(s.posterior_variance(2) == doctest::Approx(9.95124e-5).epsilon(1e-5));
  CHECK_THROWS_AS(build_schedule(0), InvalidInput);
  CHECK_THROWS_AS(s.beta(3), InvalidInput);
}

TEST_CASE("schedule invariants") {
  for (int T : {2, 10, 50, 100, 1000}) {
    CAPTURE(T);
    const auto s = build_schedule(T);
    const double step = s.beta(2) - s.beta(1);
    double log_sum = 0;
    for (int t = 1; t <= T; ++t) {
      CHECK(s.beta(t) > 0);
      CHECK(s.beta(t) < 1);
      CHECK(s.alpha(t) == 1 - s.beta(t));
      CHECK(s.posterior_variance(t) <= s.beta(t));
      if (t >= 2) CHECK(s.posterior_variance(t) < s.beta(t));
      if (t < T) {
        CHECK(s.beta(t + 1) > s.beta(t));
        CHECK(s.beta(t + 1) - s.beta(t) == doctest::Approx(step).epsilon(1e-9));
      }
      CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
      log_sum += std::log(s.alpha(t));
      CHECK(std::abs(std::log(s.alpha_bar(t)) - log_sum) < 1e-10);
    }
    CHECK(s.alpha_bar(T) > 0);
    CHECK(s.posterior_variance(1) == 0.0);
  }
  CHECK(build_schedule(1000).alpha_bar(1000) < 1e-4);
  CHECK(build_schedule(1).beta(1) == 1e-4);
}

TEST_CASE("q_sample and predict_x0") {
  const auto s = build_schedule(10);
  const auto x0 = testutil::random_image(8, 8, 1);
  const auto eps = testutil::random_image(8, 8, 2, -2.f, 2.f);
  const RealImage zero(8, 8);
  for (int t = 1; t <= 10; ++t) {
    const auto xt = q_sample(x0, t, eps, s);
    const auto back = predict_x0(xt, eps, t, s);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(std::abs(back.data[i] - x0.data[i]) <= 1e-5);
    const auto clean = q_sample(x0, t, zero, s);
    for (std::size_t i = 0; i < x0.size(); ++i)
      CHECK(clean.data[i] == doctest::Approx(std::sqrt(s.alpha_bar(t)) * x0.data[i]).epsilon(1e-6));
  }
  const auto noise_only = q_sample(zero, 10, eps, s);
  for (float v : predict_x0(noise_only, eps, 10, s).data) CHECK(std::abs(v) < 1e-5);
  CHECK_THROWS_AS(q_sample(x0, 1, RealImage(4, 4), s), InvalidInput);
  CHECK_THROWS_AS(q_sample(x0, 11, eps, s), InvalidInput);
}

TEST_CASE("forward-process moments by Monte Carlo") {
  const auto s = build_schedule(50);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0, 1);
  const int N = 100000;
  for (int t : {1, 25, 50}) {
    const double x0 = 0.7;
    RealImage x(1, N), e(1, N);
    for (auto& v : x.data) v = static_cast<float>(x0);
    for (auto& v : e.data) v = static_cast<float>(n(gen));
    const auto xt = q_sample(x, t, e, s);
    double mean = 0, var = 0;
    for (float v : xt.data) mean += v;
    mean /= N;
    for (float v : xt.data) var += (v - mean) * (v - mean);
    var /= N - 1;
    const double want_var = 1 - s.alpha_bar(t);
    CHECK(std::abs(mean - std::sqrt(s.alpha_bar(t)) * x0) < 3 * std::sqrt(want_var / N) + 1e-6);
    CHECK(std::abs(var / want_var - 1) < 0.02);
  }
}
