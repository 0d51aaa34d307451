#include <doctest.h>

#include <cmath>
#include <random>

#include "csslab/diagnostics.hpp"
#include "csslab/types.hpp"

using namespace csslab;

namespace {

// Dense log-spaced samples of a power law on [t0, -t_min].
TimeSeries power_series(double t0, double t_min, double q, int n = 4000) {
  TimeSeries s;
  for (int i = 0; i < n; ++i) {
    const double t = -std::exp(std::log(-t0) + (std::log(t_min) - std::log(-t0)) * i / (n - 1));
    s.times.push_back(t);
    s.values.push_back(std::pow(-t, q));
  }
  return s;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("dyadic count") {
    CHECK(dyadic_count(-1.0, 0.0) == -1);
    CHECK(dyadic_count(-0.05, 0.1) == 0);
    CHECK(dyadic_count(-1.0, 0.25) == 2);
    CHECK(dyadic_count(-1.0, 0.3) == 2);
  }

  TEST_CASE("maximal function dominates the series") {
    const TimeSeries s = power_series(-1.0, 1e-4, -0.5);
    for (double eta : {0.0, 0.01, 0.1})
      for (std::size_t i = 0; i < s.times.size(); i += 97)
        CHECK(t_maximal(s, s.times[i], eta, 1.25) >= s.values[i]);
  }

  TEST_CASE("maximal function is monotone, homogeneous and sub-additive") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    TimeSeries f = power_series(-1.0, 1e-3, 0.3), g = f, sum = f;
    for (std::size_t i = 0; i < f.times.size(); ++i) {
      f.values[i] *= u(rng);
      g.values[i] = u(rng);
      sum.values[i] = f.values[i] + g.values[i];
    }
    TimeSeries scaled = f;
    for (double& v : scaled.values) v *= 3.5;
    for (std::size_t i = 0; i < f.times.size(); i += 131) {
      const double t = f.times[i];
      CHECK(t_maximal(sum, t, 0.01, 1.0) <= t_maximal(f, t, 0.01, 1.0) + t_maximal(g, t, 0.01, 1.0) + 1e-12);
      CHECK(t_maximal(sum, t, 0.01, 1.0) >= t_maximal(f, t, 0.01, 1.0));
      CHECK(t_maximal(scaled, t, 0.01, 1.0) == doctest::Approx(3.5 * t_maximal(f, t, 0.01, 1.0)));
    }
  }

  TEST_CASE("a constant series sums the dyadic weights") {
    TimeSeries s = power_series(-1.0, 1e-4, 0.0);
    // Blocks j = 0..n with n = 4 at t = -1, eta = 1/16.
    double expected = 0;
    for (int j = 0; j <= 4; ++j) expected += std::pow(2.0, 1.5 * j) / (j * j + 1.0);
    CHECK(t_maximal(s, -1.0, 1.0 / 16, 1.5) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("eta = 0 truncates at the sampling floor") {
    const TimeSeries s = power_series(-1.0, 1e-2, 0.0, 200);
    const TMaxResult r = t_maximal_detail(s, -1.0, 0.0, 1.0);
    CHECK(r.truncated);
    CHECK(r.last_block >= 5);
    CHECK(r.last_block <= 8);
  }

  TEST_CASE("eta > 0 with an empty dyadic block is a gap error") {
    TimeSeries s;
    s.times = {-1.0, -0.9, -0.01};
    s.values = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(t_maximal(s, -1.0, 1e-3, 1.0), NumericalError);
  }

  TEST_CASE("series validation") {
    TimeSeries s;
    CHECK_THROWS_AS(validate_series(s), ValidationError);
    s.times = {-1.0, -2.0};
    s.values = {1.0, 1.0};
    CHECK_THROWS_AS(validate_series(s), ValidationError);
    s.times = {-2.0, 0.5};
    CHECK_THROWS_AS(validate_series(s), ValidationError);
    s.times = {-2.0, -1.0};
    s.values = {1.0, -1.0};
    CHECK_THROWS_AS(validate_series(s), ValidationError);
  }

  TEST_CASE("property report on a power law") {
    const TimeSeries s = power_series(-1.0, 1e-5, -0.25);
    const EnvReport r = env_properties_check(s, 0.01, 1.25, 1.0, -1.0);
    CHECK(r.domination);
    CHECK(r.evaluated > 0);
    CHECK(r.idempotence_min >= 1.0);
    CHECK(std::isfinite(r.idempotence_max));
    CHECK(std::isfinite(r.integral_max));
    CHECK_THROWS_AS(env_properties_check(s, 0.01, 0.0, 1.0, -2.0), ValidationError);
  }
}
