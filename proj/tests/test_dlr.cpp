#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "promocast/dlr.hpp"
#include "promocast/rng.hpp"
#include "promocast/smallmat.hpp"
#include "test_util.hpp"

using namespace promocast;
using testutil::thrown_code;

namespace {

// Brute-force multivariate normal log-density oracle with its own Cholesky.
// With state_t = state_0 + sum_{i<=t} eta_i (eta drawn before the first
// observation), cov(y_s, y_t) = H_s (C0 + min(s,t) W) H_t' + delta_st s2e.
double mvn_loglik_oracle(const std::vector<double>& log_y, const std::vector<double>& log_r,
                         const dlr::DlrParams& p) {
  const std::size_t n = log_y.size();
  std::vector<double> mean(n), cov(n * n);
  for (std::size_t t = 0; t < n; ++t) mean[t] = p.m0[0] + p.m0[1] * log_r[t];
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      const double k = static_cast<double>(std::min(s, t) + 1);
      const std::array<double, 4> c{p.c0[0] + k * p.sigma2_nu, p.c0[1], p.c0[2],
                                    p.c0[3] + k * p.sigma2_omega};
      // [1, r_s] C [1, r_t]'
      double v = c[0] + log_r[t] * c[1] + log_r[s] * c[2] + log_r[s] * log_r[t] * c[3];
      if (s == t) v += p.sigma2_eps;
      cov[s * n + t] = v;
    }
  // Cholesky cov = L L'
  std::vector<double> l(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = cov[i * n + j];
      for (std::size_t k = 0; k < j; ++k) acc -= l[i * n + k] * l[j * n + k];
      if (i == j)
        l[i * n + j] = std::sqrt(acc);
      else
        l[i * n + j] = acc / l[j * n + j];
    }
  // solve L z = (y - mean)
  std::vector<double> z(n);
  double logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = log_y[i] - mean[i];
    for (std::size_t k = 0; k < i; ++k) acc -= l[i * n + k] * z[k];
    z[i] = acc / l[i * n + i];
    logdet += 2.0 * std::log(l[i * n + i]);
  }
  double quad = 0.0;
  for (double v : z) quad += v * v;
  return -0.5 * (n * std::log(2.0 * M_PI) + logdet + quad);
}

SkulSeries series_from(const std::vector<double>& demand, const std::vector<double>& price) {
  SkulSeries s;
  s.id = "S";
  s.demand = demand;
  s.price = price;
  s.promo_type.assign(demand.size(), 0);
  return s;
}

}  // namespace

TEST_CASE("static-regression reduction: zero walk and zero prior covariance") {
  dlr::DlrParams p;
  p.sigma2_eps = 1.0;
  p.sigma2_nu = p.sigma2_omega = 0.0;
  p.m0 = {1.0, -2.0};
  p.c0 = {0, 0, 0, 0};
  dlr::KalmanState state{p.m0, p.c0};
  const auto step = dlr::kalman_step(state, 3.0, 0.7, p);
  REQUIRE(step.state.mean[0] == 1.0);
  REQUIRE(step.state.mean[1] == -2.0);
  REQUIRE(step.innovation == Catch::Approx(3.0 - (1.0 - 2.0 * 0.7)).margin(1e-14));
}

TEST_CASE("huge observation noise freezes the posterior at the prior") {
  dlr::DlrParams p;
  p.sigma2_eps = 1e12;
  p.sigma2_nu = p.sigma2_omega = 0.0;
  p.m0 = {0.5, 0.5};
  p.c0 = {1, 0, 0, 1};
  dlr::KalmanState state{p.m0, p.c0};
  const auto step = dlr::kalman_step(state, 100.0, 1.0, p);
  REQUIRE(std::fabs(step.state.mean[0] - 0.5) < 1e-6);
  REQUIRE(std::fabs(step.state.mean[1] - 0.5) < 1e-6);
}

TEST_CASE("worked single-step example: posterior [2/3, 2/3], innovation 2, variance 3") {
  dlr::DlrParams p;
  p.sigma2_eps = 1.0;
  p.sigma2_nu = p.sigma2_omega = 0.0;
  p.m0 = {0.0, 0.0};
  p.c0 = {1, 0, 0, 1};
  dlr::KalmanState state{p.m0, p.c0};
  const auto step = dlr::kalman_step(state, 2.0, 1.0, p);
  REQUIRE(step.innovation == Catch::Approx(2.0).margin(1e-10));
  REQUIRE(step.innovation_var == Catch::Approx(3.0).margin(1e-10));
  REQUIRE(step.state.mean[0] == Catch::Approx(2.0 / 3.0).margin(1e-10));
  REQUIRE(step.state.mean[1] == Catch::Approx(2.0 / 3.0).margin(1e-10));
  // posterior covariance I - (1/3) ones
  REQUIRE(step.state.cov[0] == Catch::Approx(2.0 / 3.0).margin(1e-10));
  REQUIRE(step.state.cov[1] == Catch::Approx(-1.0 / 3.0).margin(1e-10));

  // 1-step forecast continues the worked arithmetic: mean 4/3, var 5/3
  const auto fc = dlr::forecast_dlr(p, step.state, 1, {std::exp(1.0)});
  REQUIRE(fc.point[0] == Catch::Approx(std::exp(4.0 / 3.0)).margin(1e-8));
  REQUIRE(fc.sigma[0] == Catch::Approx(std::sqrt(5.0 / 3.0)).margin(1e-10));
}

TEST_CASE("filter log-likelihood equals the brute-force MVN density") {
  Rng rng(8);
  dlr::DlrParams p;
  p.sigma2_eps = 0.3;
  p.sigma2_nu = 0.05;
  p.sigma2_omega = 0.02;
  p.m0 = {1.2, -1.5};
  p.c0 = {2.0, 0.3, 0.3, 1.0};
  std::vector<double> log_y(8), log_r(8);
  for (int t = 0; t < 8; ++t) {
    log_r[t] = 0.5 + rng.next_double();
    log_y[t] = 1.0 - 1.5 * log_r[t] + 0.3 * rng.next_normal();
  }
  const auto filt = dlr::dlr_filter(log_y, log_r, p);
  REQUIRE(filt.loglik == Catch::Approx(mvn_loglik_oracle(log_y, log_r, p)).margin(1e-6));
}

TEST_CASE("zero-walk diffuse filter matches OLS") {
  Rng rng(18);
  const int n = 120;
  std::vector<double> log_y(n), log_r(n), ones(n, 1.0);
  for (int t = 0; t < n; ++t) {
    log_r[t] = 0.3 + rng.next_double();
    log_y[t] = 2.0 - 1.8 * log_r[t] + 0.1 * rng.next_normal();
  }
  const auto ols = smallmat::ols({ones, log_r}, log_y);
  dlr::DlrParams p;
  p.sigma2_eps = 0.01;
  p.sigma2_nu = p.sigma2_omega = 0.0;
  p.m0 = {0.0, 0.0};
  p.c0 = {1e7, 0, 0, 1e7};
  const auto filt = dlr::dlr_filter(log_y, log_r, p);
  REQUIRE(filt.final_state.mean[0] == Catch::Approx(ols[0]).epsilon(1e-4));
  REQUIRE(filt.final_state.mean[1] == Catch::Approx(ols[1]).epsilon(1e-4));
}

TEST_CASE("covariance stays symmetric PSD over 10000 random steps") {
  Rng rng(99);
  dlr::DlrParams p;
  p.sigma2_eps = 0.5;
  p.sigma2_nu = 0.01;
  p.sigma2_omega = 0.004;
  dlr::KalmanState state;
  state.mean = {0.0, 0.0};
  state.cov = {1.0, 0.0, 0.0, 1.0};
  for (int i = 0; i < 10000; ++i) {
    const double lr = rng.uniform(-2.0, 2.0);
    const double ly = rng.uniform(-3.0, 3.0);
    state = dlr::kalman_step(state, ly, lr, p).state;
    REQUIRE(std::fabs(state.cov[1] - state.cov[2]) <= 1e-10);
    // eigenvalues of a symmetric 2x2
    const double tr = state.cov[0] + state.cov[3];
    const double det = state.cov[0] * state.cov[3] - state.cov[1] * state.cov[2];
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    REQUIRE(tr / 2.0 - disc >= -1e-10);
  }
}

TEST_CASE("fit on static data keeps walk variances small") {
  Rng rng(55);
  const int n = 150;
  std::vector<double> demand(n), price(n);
  for (int t = 0; t < n; ++t) {
    price[t] = 2.0 + 2.0 * rng.next_double();
    demand[t] = std::exp(3.0 - 1.2 * std::log(price[t]) + 0.05 * rng.next_normal());
  }
  const auto fit = dlr::fit_dlr(series_from(demand, price));
  REQUIRE(fit.params.sigma2_nu < 0.1 * fit.params.sigma2_eps);
  REQUIRE(fit.params.sigma2_omega < 0.1 * fit.params.sigma2_eps);
}

TEST_CASE("a deliberate slope break moves the filtered slope in its direction") {
  Rng rng(77);
  const int n = 160;
  std::vector<double> demand(n), price(n);
  for (int t = 0; t < n; ++t) {
    price[t] = 2.0 + 2.0 * rng.next_double();
    const double slope = t < n / 2 ? -1.0 : -2.5;  // break toward steeper
    demand[t] = std::exp(4.0 + slope * std::log(price[t]) + 0.05 * rng.next_normal());
  }
  const auto fit = dlr::fit_dlr(series_from(demand, price));
  const auto filt = dlr::dlr_filter(log_transform(demand), log_transform(price), fit.params);
  const double before = filt.betas[n / 2 - 1];
  const double after = filt.betas.back();
  REQUIRE(after < before);
}

TEST_CASE("likelihood at the optimum beats random admissible points") {
  Rng rng(101);
  const int n = 100;
  std::vector<double> demand(n), price(n);
  for (int t = 0; t < n; ++t) {
    price[t] = 2.0 + 2.0 * rng.next_double();
    demand[t] = std::exp(2.0 - 1.0 * std::log(price[t]) + 0.1 * rng.next_normal());
  }
  const auto s = series_from(demand, price);
  const auto fit = dlr::fit_dlr(s);
  const auto ly = log_transform(demand), lr = log_transform(price);
  for (int i = 0; i < 10; ++i) {
    dlr::DlrParams p = fit.params;
    p.sigma2_eps = std::exp(rng.uniform(-8.0, 2.0));
    p.sigma2_nu = std::exp(rng.uniform(-12.0, 0.0));
    p.sigma2_omega = std::exp(rng.uniform(-12.0, 0.0));
    REQUIRE(fit.loglik >= dlr::dlr_filter(ly, lr, p).loglik - 1e-9);
  }
}

TEST_CASE("forecast: zero walk equals the static regression; variance grows") {
  dlr::DlrParams p;
  p.sigma2_eps = 0.04;
  p.sigma2_nu = p.sigma2_omega = 0.0;
  dlr::KalmanState state;
  state.mean = {2.0, -1.5};
  state.cov = {0, 0, 0, 0};
  const std::vector<double> prices{3.0, 2.5};
  const auto fc = dlr::forecast_dlr(p, state, 2, prices);
  for (int i = 0; i < 2; ++i)
    REQUIRE(fc.point[i] ==
            Catch::Approx(std::exp(2.0 - 1.5 * std::log(prices[i]))).epsilon(1e-12));

  dlr::DlrParams walk = p;
  walk.sigma2_nu = 0.01;
  const auto fc2 = dlr::forecast_dlr(walk, state, 2, {3.0, 3.0});
  REQUIRE(fc2.sigma[1] > fc2.sigma[0]);
  REQUIRE(thrown_code([&] { dlr::forecast_dlr(walk, state, 1, {-1.0}); }) ==
          ErrorCode::NonPositivePrice);
}

TEST_CASE("fit_dlr errors") {
  std::vector<double> d(20, 5.0), p(20, 3.0);
  REQUIRE(thrown_code([&] { dlr::fit_dlr(series_from(d, p)); }) == ErrorCode::ConstantPrice);
  std::vector<double> d2(5, 5.0), p2{1, 2, 3, 2, 1};
  REQUIRE(thrown_code([&] { dlr::fit_dlr(series_from(d2, p2)); }) == ErrorCode::SeriesTooShort);
}
