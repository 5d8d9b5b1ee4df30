#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/optim.hpp"
#include "promocast/smallmat.hpp"
#include "promocast/stats.hpp"

namespace promocast::dlr {

/// Dynamic linear regression of log demand on log price,
///   log y_t = alpha_t + beta_t log r_t + eps_t,
/// with intercept and slope following independent random walks.
struct DlrParams {
  double sigma2_eps = 1.0;    // observation noise
  double sigma2_nu = 0.0;     // intercept walk
  double sigma2_omega = 0.0;  // slope walk
  std::array<double, 2> m0{0.0, 0.0};
  std::array<double, 4> c0{1e7, 0.0, 0.0, 1e7};  // row-major 2x2, symmetric PSD
};

struct KalmanState {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 4> cov{0.0, 0.0, 0.0, 0.0};
};

struct KalmanStepResult {
  KalmanState state;
  double innovation = 0.0;
  double innovation_var = 0.0;
};

/// One time + measurement update with design vector [1, log_r].
/// Joseph-form covariance update, symmetrized.
inline KalmanStepResult kalman_step(const KalmanState& state, double log_y, double log_r,
                                    const DlrParams& params) {
  std::array<double, 4> p = state.cov;
  p[0] += params.sigma2_nu;
  p[3] += params.sigma2_omega;

  const double h0 = 1.0, h1 = log_r;
  const double ph0 = p[0] * h0 + p[1] * h1;  // P H'
  const double ph1 = p[2] * h0 + p[3] * h1;
  const double f = h0 * ph0 + h1 * ph1 + params.sigma2_eps;
  if (!(f > 0.0) || !std::isfinite(f))
    fail(ErrorCode::NonPositiveInnovationVariance, "innovation variance not positive");

  const double pred = state.mean[0] * h0 + state.mean[1] * h1;
  const double v = log_y - pred;
  const double k0 = ph0 / f, k1 = ph1 / f;

  KalmanStepResult out;
  out.innovation = v;
  out.innovation_var = f;
  out.state.mean = {state.mean[0] + k0 * v, state.mean[1] + k1 * v};

  // Joseph form: (I - K H) P (I - K H)' + K sigma2_eps K'
  const std::array<double, 4> a{1.0 - k0 * h0, -k0 * h1, -k1 * h0, 1.0 - k1 * h1};
  std::array<double, 4> ap{
      a[0] * p[0] + a[1] * p[2], a[0] * p[1] + a[1] * p[3],
      a[2] * p[0] + a[3] * p[2], a[2] * p[1] + a[3] * p[3]};
  std::array<double, 4> cov{
      ap[0] * a[0] + ap[1] * a[1], ap[0] * a[2] + ap[1] * a[3],
      ap[2] * a[0] + ap[3] * a[1], ap[2] * a[2] + ap[3] * a[3]};
  cov[0] += k0 * k0 * params.sigma2_eps;
  cov[1] += k0 * k1 * params.sigma2_eps;
  cov[2] += k1 * k0 * params.sigma2_eps;
  cov[3] += k1 * k1 * params.sigma2_eps;
  const double off = 0.5 * (cov[1] + cov[2]);
  out.state.cov = {cov[0], off, off, cov[3]};
  return out;
}

struct DlrFilterOutput {
  KalmanState final_state;
  double loglik = 0.0;
  std::vector<double> alphas;  // filtered intercepts
  std::vector<double> betas;   // filtered slopes
};

inline DlrFilterOutput dlr_filter(std::span<const double> log_y, std::span<const double> log_r,
                                  const DlrParams& params) {
  if (log_y.size() != log_r.size()) fail(ErrorCode::LengthMismatch, "dlr_filter length mismatch");
  DlrFilterOutput out;
  out.final_state.mean = params.m0;
  out.final_state.cov = params.c0;
  out.alphas.reserve(log_y.size());
  out.betas.reserve(log_y.size());
  for (std::size_t t = 0; t < log_y.size(); ++t) {
    const auto step = kalman_step(out.final_state, log_y[t], log_r[t], params);
    out.final_state = step.state;
    out.loglik += -0.5 * (std::log(2.0 * M_PI * step.innovation_var) +
                          step.innovation * step.innovation / step.innovation_var);
    out.alphas.push_back(step.state.mean[0]);
    out.betas.push_back(step.state.mean[1]);
  }
  return out;
}

struct DlrFit {
  DlrParams params;
  KalmanState final_state;
  double loglik = 0.0;
};

/// Maximum likelihood over (log sigma2_eps, log sigma2_nu, log sigma2_omega)
/// via the prediction error decomposition. Prior mean from OLS of log y on
/// log r over the first 20 observations, C0 = 1e7 I.
inline DlrFit fit_dlr(const SkulSeries& s) {
  if (s.length() < 10) fail(ErrorCode::SeriesTooShort, "fit_dlr needs T >= 10");
  const auto ly = log_transform(s.demand);
  const auto lr = log_transform(s.price);
  {
    const double first = lr.front();
    bool constant = true;
    for (double v : lr) constant = constant && (v == first);
    if (constant) fail(ErrorCode::ConstantPrice, "fit_dlr needs non-constant price");
  }

  const std::size_t head = std::min<std::size_t>(20, ly.size());
  std::vector<double> ones(head, 1.0), xr(lr.begin(), lr.begin() + head),
      yy(ly.begin(), ly.begin() + head);
  std::vector<double> coef;
  try {
    coef = smallmat::ols({ones, xr}, yy);
  } catch (const Error&) {
    // constant price over the head window; fall back to the global OLS
    std::vector<double> ones_n(ly.size(), 1.0);
    coef = smallmat::ols({ones_n, lr}, ly);
  }
  double rss = 0.0;
  for (std::size_t t = 0; t < head; ++t) {
    const double r = yy[t] - coef[0] - coef[1] * xr[t];
    rss += r * r;
  }
  const double resid_var = std::max(rss / std::max<std::size_t>(head - 2, 1), 1e-8);

  DlrParams base;
  base.m0 = {coef[0], coef[1]};
  base.c0 = {1e7, 0.0, 0.0, 1e7};

  auto objective = [&](const std::vector<double>& v) {
    DlrParams p = base;
    p.sigma2_eps = std::exp(v[0]);
    p.sigma2_nu = std::exp(v[1]);
    p.sigma2_omega = std::exp(v[2]);
    try {
      return -dlr_filter(ly, lr, p).loglik;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const std::vector<double> init{std::log(resid_var), std::log(1e-4), std::log(1e-4)};
  auto res = optim::nelder_mead(objective, init, {0.5, 1.0, 1.0}, {1500, 1e-8});
  if (!std::isfinite(res.fmin)) fail(ErrorCode::DegenerateOptimum, "DLR likelihood not finite");

  DlrFit fit;
  fit.params = base;
  fit.params.sigma2_eps = std::exp(res.x[0]);
  fit.params.sigma2_nu = std::exp(res.x[1]);
  fit.params.sigma2_omega = std::exp(res.x[2]);
  const auto filt = dlr_filter(ly, lr, fit.params);
  fit.final_state = filt.final_state;
  fit.loglik = filt.loglik;
  return fit;
}

/// h-step forecast. The random walk keeps the mean at the filtered state;
/// the log-space variance at step i is H (P_T + i W) H' + sigma2_eps.
/// Point forecasts are exp of the log-space mean and the interval endpoints
/// are exponentiated (no lognormal mean correction).
inline ForecastResult forecast_dlr(const DlrParams& params, const KalmanState& final_state, int h,
                                   const std::vector<double>& future_prices, double level = 0.95) {
  if (h < 1) fail(ErrorCode::InvalidConfig, "horizon must be >= 1");
  if (static_cast<int>(future_prices.size()) < h)
    fail(ErrorCode::LengthMismatch, "need h future prices");
  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  ForecastResult out;
  out.level = level;
  out.point.resize(h);
  out.lower.resize(h);
  out.upper.resize(h);
  out.sigma.resize(h);
  for (int i = 1; i <= h; ++i) {
    const double r = future_prices[i - 1];
    if (!(r > 0.0)) fail(ErrorCode::NonPositivePrice, "future price must be positive");
    const double lr = std::log(r);
    const double mean_log = final_state.mean[0] + final_state.mean[1] * lr;
    const double hph = final_state.cov[0] + lr * (final_state.cov[1] + final_state.cov[2]) +
                       lr * lr * final_state.cov[3];
    const double var_log =
        hph + i * (params.sigma2_nu + params.sigma2_omega * lr * lr) + params.sigma2_eps;
    const double sd = std::sqrt(std::max(0.0, var_log));
    out.point[i - 1] = std::exp(mean_log);
    out.lower[i - 1] = std::exp(mean_log - z * sd);
    out.upper[i - 1] = std::exp(mean_log + z * sd);
    out.sigma[i - 1] = sd;  // log-space standard deviation
  }
  return out;
}

}  // namespace promocast::dlr
