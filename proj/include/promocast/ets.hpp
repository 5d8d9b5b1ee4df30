#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/optim.hpp"
#include "promocast/rng.hpp"
#include "promocast/smallmat.hpp"
#include "promocast/stats.hpp"

namespace promocast::ets {

/// Additive-error damped-trend non-seasonal exponential smoothing:
///   y_t = l_{t-1} + phi * b_{t-1} (+ c * x_t) + eps_t
///   l_t = l_{t-1} + phi * b_{t-1} + alpha * eps_t
///   b_t = phi * b_{t-1} + beta * eps_t
struct EtsParams {
  double alpha = 0.3;          // level smoothing, (0, 1)
  double beta = 0.1;           // trend smoothing, (0, alpha)
  double phi = 0.9;            // damping, [0.8, 0.98]
  std::optional<double> c;     // covariate coefficient (ETSX)
  double l0 = 0.0;
  double b0 = 0.0;
  double sigma2 = 0.0;
};

struct EtsFilterOutput {
  std::vector<double> residuals;
  std::vector<double> levels;  // l_1..l_T
  std::vector<double> slopes;  // b_1..b_T
};

namespace detail {

inline void check_params(const EtsParams& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0) || !(p.beta > 0.0 && p.beta < p.alpha) ||
      !(p.phi >= 0.8 && p.phi <= 0.98))
    fail(ErrorCode::ParamOutOfRange, "need 0 < beta < alpha < 1 and phi in [0.8, 0.98]");
}

}  // namespace detail

inline EtsFilterOutput ets_filter(std::span<const double> y, const EtsParams& params,
                                  const std::vector<double>* x = nullptr) {
  detail::check_params(params);
  if (y.size() < 3) fail(ErrorCode::SeriesTooShort, "ets_filter needs length >= 3");
  if (params.c.has_value() != (x != nullptr))
    fail(ErrorCode::LengthMismatch, "covariate must be present iff params carry c");
  if (x && x->size() != y.size()) fail(ErrorCode::LengthMismatch, "covariate length mismatch");

  EtsFilterOutput out;
  out.residuals.resize(y.size());
  out.levels.resize(y.size());
  out.slopes.resize(y.size());
  double l = params.l0, b = params.b0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    double pred = l + params.phi * b;
    if (params.c) pred += *params.c * (*x)[t];
    const double eps = y[t] - pred;
    const double lnext = l + params.phi * b + params.alpha * eps;
    const double bnext = params.phi * b + params.beta * eps;
    out.residuals[t] = eps;
    out.levels[t] = lnext;
    out.slopes[t] = bnext;
    l = lnext;
    b = bnext;
  }
  return out;
}

/// Gaussian MLE (variance profiled out, so SSE is minimized) over
/// (alpha, beta, phi, l0, b0, c) with the box enforced by logistic
/// transforms; 5 jittered Nelder-Mead restarts, best kept.
inline EtsParams fit_ets(const std::vector<double>& y, const std::vector<double>* x = nullptr) {
  if (y.size() < 10) fail(ErrorCode::SeriesTooShort, "fit_ets needs length >= 10");
  if (x && x->size() != y.size()) fail(ErrorCode::LengthMismatch, "covariate length mismatch");
  const std::size_t n = y.size();

  const bool with_c = x != nullptr;
  double c0 = 0.0;
  if (with_c) {
    std::vector<double> ones(n, 1.0);
    const auto coef = smallmat::ols({ones, *x}, y);
    c0 = coef[1];
  }
  // initial states from a line through the first 10 covariate-adjusted points
  const std::size_t head = std::min<std::size_t>(10, n);
  std::vector<double> ones(head, 1.0), tt(head), yy(head);
  for (std::size_t t = 0; t < head; ++t) {
    tt[t] = static_cast<double>(t + 1);
    yy[t] = y[t] - (with_c ? c0 * (*x)[t] : 0.0);
  }
  const auto line = smallmat::ols({ones, tt}, yy);

  auto logit = [](double u) { return std::log(u / (1.0 - u)); };
  // clamped so saturation cannot land exactly on the closed boundary
  auto expit = [](double v) { return 1.0 / (1.0 + std::exp(-std::clamp(v, -30.0, 30.0))); };

  // raw layout: [a, b, p, l0, b0, (c)]
  auto unpack = [&](const std::vector<double>& v) {
    EtsParams p;
    p.alpha = expit(v[0]);
    p.beta = p.alpha * expit(v[1]);
    p.phi = 0.8 + 0.18 * expit(v[2]);
    p.l0 = v[3];
    p.b0 = v[4];
    if (with_c) p.c = v[5];
    return p;
  };
  auto sse = [&](const std::vector<double>& v) {
    const EtsParams p = unpack(v);
    double l = p.l0, b = p.b0, acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double pred = l + p.phi * b;
      if (with_c) pred += *p.c * (*x)[t];
      const double eps = y[t] - pred;
      acc += eps * eps;
      l = l + p.phi * b + p.alpha * eps;
      b = p.phi * b + p.beta * eps;
    }
    return std::isfinite(acc) ? acc : std::numeric_limits<double>::infinity();
  };

  std::vector<double> base{logit(0.3), logit(1.0 / 3.0), logit(5.0 / 9.0), line[0] + line[1], line[1]};
  if (with_c) base.push_back(c0);

  Rng jitter(0x9c0ffeeULL);
  std::vector<double> best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < 5; ++restart) {
    std::vector<double> start = base;
    if (restart > 0)
      for (double& v : start) v += 0.3 * jitter.next_normal();
    auto res = optim::nelder_mead(sse, start, std::vector<double>(start.size(), 0.2),
                                  {static_cast<int>(500 * start.size()), 1e-8});
    if (res.fmin < best_sse) {
      best_sse = res.fmin;
      best = res.x;
    }
  }
  if (!std::isfinite(best_sse)) fail(ErrorCode::DegenerateOptimum, "ETS optimizer diverged");

  EtsParams fitted = unpack(best);
  fitted.sigma2 = best_sse / static_cast<double>(n);
  return fitted;
}

/// Forecast from end-of-sample states (l_T, b_T):
///   y-hat_{T+i} = l_T + (phi + ... + phi^i) b_T (+ c x_{T+i}),
/// variance sigma^2 (1 + sum_{j<i} psi_j^2) with the additive-error
/// innovation weights psi_j.
inline ForecastResult forecast_ets(const EtsParams& params, double level_state, double slope_state,
                                   int h, const std::vector<double>* x_future = nullptr,
                                   double level = 0.95) {
  detail::check_params(params);
  if (h < 1) fail(ErrorCode::InvalidConfig, "horizon must be >= 1");
  if (params.c.has_value()) {
    if (!x_future || static_cast<int>(x_future->size()) < h)
      fail(ErrorCode::MissingFutureCovariate, "ETSX forecast needs h future covariate values");
  } else if (x_future) {
    fail(ErrorCode::MissingFutureCovariate, "params carry no covariate coefficient");
  }

  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  ForecastResult out;
  out.level = level;
  out.point.resize(h);
  out.lower.resize(h);
  out.upper.resize(h);
  out.sigma.resize(h);

  double damp_sum = 0.0, damp_pow = 1.0;
  // innovation weights: psi_j = w' F^{j-1} g with w = [1, phi],
  // F = [[1, phi], [0, phi]], g = [alpha, beta]
  double v0 = params.alpha, v1 = params.beta;
  double var_acc = 1.0;
  for (int i = 1; i <= h; ++i) {
    damp_pow *= params.phi;
    damp_sum += damp_pow;
    double point = level_state + damp_sum * slope_state;
    if (params.c) point += *params.c * (*x_future)[i - 1];
    const double sd = std::sqrt(std::max(0.0, params.sigma2 * var_acc));
    out.point[i - 1] = point;
    out.sigma[i - 1] = sd;
    out.lower[i - 1] = point - z * sd;
    out.upper[i - 1] = point + z * sd;
    const double psi = v0 + params.phi * v1;
    var_acc += psi * psi;
    v0 = v0 + params.phi * v1;
    v1 = params.phi * v1;
  }
  return out;
}

}  // namespace promocast::ets
