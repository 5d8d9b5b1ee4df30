#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "promocast/ets.hpp"
#include "promocast/rng.hpp"
#include "test_util.hpp"

using namespace promocast;
using testutil::thrown_code;

namespace {

std::vector<double> run_recursion(ets::EtsParams p, int n, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> y(n);
  double l = p.l0, b = p.b0;
  for (int t = 0; t < n; ++t) {
    const double eps = sigma > 0.0 ? sigma * rng.next_normal() : 0.0;
    y[t] = l + p.phi * b + eps;
    l = l + p.phi * b + p.alpha * eps;
    b = p.phi * b + p.beta * eps;
  }
  return y;
}

}  // namespace

TEST_CASE("an exactly-generated series has zero residuals") {
  ets::EtsParams p{0.4, 0.2, 0.92, std::nullopt, 5.0, 0.3, 0.0};
  const auto y = run_recursion(p, 40, 0.0, 0);
  const auto out = ets::ets_filter(y, p);
  for (double r : out.residuals) REQUIRE(std::fabs(r) < 1e-10);
}

TEST_CASE("alpha near one makes the level track the series") {
  Rng rng(21);
  std::vector<double> y(200);
  for (auto& v : y) v = rng.next_normal();
  ets::EtsParams p{0.999, 0.0001, 0.8, std::nullopt, y[0], 0.0, 0.0};
  const auto out = ets::ets_filter(y, p);
  for (std::size_t t = 20; t < y.size(); ++t)
    REQUIRE(std::fabs(out.levels[t] - y[t]) < 0.01);
}

TEST_CASE("three-step hand recursion") {
  // l0=10, b0=1, phi=0.9, alpha=0.5, beta=0.1, y = 11.5, 12.0, 12.5:
  //   yhat1 = 10.9          -> eps1 = 0.6;   l1 = 11.2,   b1 = 0.96
  //   yhat2 = 12.064        -> eps2 = -0.064; l2 = 12.032, b2 = 0.8576
  //   yhat3 = 12.80384      -> eps3 = -0.30384
  ets::EtsParams p{0.5, 0.1, 0.9, std::nullopt, 10.0, 1.0, 0.0};
  const auto out = ets::ets_filter(std::vector<double>{11.5, 12.0, 12.5}, p);
  REQUIRE(out.residuals[0] == Catch::Approx(0.6).margin(1e-3));
  REQUIRE(out.residuals[1] == Catch::Approx(-0.064).margin(1e-3));
  REQUIRE(out.residuals[2] == Catch::Approx(-0.30384).margin(1e-3));
}

TEST_CASE("ets_filter validates the parameter box") {
  REQUIRE(thrown_code([] {
            ets::ets_filter(std::vector<double>{1, 2, 3},
                            ets::EtsParams{0.5, 0.6, 0.9, std::nullopt, 0, 0, 0});
          }) == ErrorCode::ParamOutOfRange);
  REQUIRE(thrown_code([] {
            ets::ets_filter(std::vector<double>{1, 2, 3},
                            ets::EtsParams{0.5, 0.1, 0.5, std::nullopt, 0, 0, 0});
          }) == ErrorCode::ParamOutOfRange);
}

TEST_CASE("a constant series is fit exactly") {
  const std::vector<double> y(30, 7.5);
  const auto p = ets::fit_ets(y);
  const auto out = ets::ets_filter(y, p);
  double sse = 0.0;
  for (double r : out.residuals) sse += r * r;
  REQUIRE(sse < 1e-6);
}

TEST_CASE("simulation recovery: in-sample MSE near the true variance") {
  ets::EtsParams truth{0.3, 0.1, 0.9, std::nullopt, 10.0, 0.1, 0.0};
  const auto y = run_recursion(truth, 500, 0.05, 9);
  const auto p = ets::fit_ets(y);
  const double mse = p.sigma2;  // SSE/n by construction
  REQUIRE(mse > 0.05 * 0.05 * 0.9);
  REQUIRE(mse < 0.05 * 0.05 * 1.1);
}

TEST_CASE("ETSX recovers a covariate coefficient near the OLS slope") {
  Rng rng(33);
  const int n = 200;
  std::vector<double> x(n), y(n);
  for (int t = 0; t < n; ++t) {
    x[t] = rng.next_double();
    y[t] = 5.0 - 2.0 * x[t] + 0.02 * rng.next_normal();
  }
  const auto p = ets::fit_ets(y, &x);
  REQUIRE(p.c.has_value());
  REQUIRE(*p.c > -2.2);
  REQUIRE(*p.c < -1.8);
}

TEST_CASE("forecasts are flat when the slope state is zero") {
  ets::EtsParams p{0.3, 0.1, 0.9, std::nullopt, 0, 0, 1.0};
  const auto fc = ets::forecast_ets(p, 50.0, 0.0, 5);
  for (double v : fc.point) REQUIRE(v == Catch::Approx(50.0).margin(1e-12));
}

TEST_CASE("damped-trend hand sums") {
  ets::EtsParams p{0.3, 0.1, 0.9, std::nullopt, 0, 0, 1.0};
  const auto fc = ets::forecast_ets(p, 100.0, 10.0, 2);
  REQUIRE(fc.point[0] == Catch::Approx(109.0).margin(1e-10));
  REQUIRE(fc.point[1] == Catch::Approx(117.1).margin(1e-10));
}

TEST_CASE("damping converges to the geometric limit") {
  ets::EtsParams p{0.3, 0.1, 0.9, std::nullopt, 0, 0, 1.0};
  const double l = 100.0, b = 10.0;
  const auto fc = ets::forecast_ets(p, l, b, 200);
  const double limit = l + b * p.phi / (1.0 - p.phi);
  REQUIRE(fc.point.back() == Catch::Approx(limit).margin(1e-6));
}

TEST_CASE("forecast variance never decreases") {
  ets::EtsParams p{0.6, 0.2, 0.95, std::nullopt, 0, 0, 2.0};
  const auto fc = ets::forecast_ets(p, 10.0, 1.0, 30);
  for (std::size_t i = 1; i < fc.sigma.size(); ++i) REQUIRE(fc.sigma[i] >= fc.sigma[i - 1]);
}

TEST_CASE("ETSX with c = 0 equals ETS exactly") {
  Rng rng(4);
  std::vector<double> y(60), x(60);
  for (int t = 0; t < 60; ++t) {
    y[t] = 10 + 0.05 * t + 0.3 * rng.next_normal();
    x[t] = rng.next_double();
  }
  ets::EtsParams plain{0.35, 0.12, 0.9, std::nullopt, 10.0, 0.05, 1.0};
  ets::EtsParams with_c = plain;
  with_c.c = 0.0;
  const auto a = ets::ets_filter(y, plain);
  const auto b = ets::ets_filter(y, with_c, &x);
  REQUIRE(a.residuals == b.residuals);
  const std::vector<double> xf(4, 0.7);
  const auto fa = ets::forecast_ets(plain, a.levels.back(), a.slopes.back(), 4);
  const auto fb = ets::forecast_ets(with_c, b.levels.back(), b.slopes.back(), 4, &xf);
  REQUIRE(fa.point == fb.point);
  REQUIRE(fa.sigma == fb.sigma);
}

TEST_CASE("state-update consistency: forecasting then observing the forecast") {
  ets::EtsParams p{0.4, 0.15, 0.9, std::nullopt, 5.0, 0.2, 1.0};
  std::vector<double> y = run_recursion(p, 25, 0.1, 77);
  const auto filt = ets::ets_filter(y, p);
  const auto fc = ets::forecast_ets(p, filt.levels.back(), filt.slopes.back(), 1);
  std::vector<double> extended = y;
  extended.push_back(fc.point[0]);  // epsilon_{t+1} = 0
  const auto filt2 = ets::ets_filter(extended, p);
  REQUIRE(std::fabs(filt2.residuals.back()) < 1e-12);
  REQUIRE(filt2.levels.back() ==
          Catch::Approx(filt.levels.back() + p.phi * filt.slopes.back()).margin(1e-12));
}

TEST_CASE("fit_ets rejects short series") {
  REQUIRE(thrown_code([] { ets::fit_ets(std::vector<double>(5, 1.0)); }) ==
          ErrorCode::SeriesTooShort);
}
