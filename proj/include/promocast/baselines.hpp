#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/optim.hpp"
#include "promocast/smallmat.hpp"
#include "promocast/stats.hpp"

namespace promocast::baselines {

/// Last value carried forward; sigma[i] = sd(one-step naive errors) * sqrt(i).
inline ForecastResult naive_forecast(std::span<const double> y, int h, double level = 0.95) {
  if (y.size() < 2) fail(ErrorCode::SeriesTooShort, "naive_forecast needs length >= 2");
  if (h < 1) fail(ErrorCode::InvalidConfig, "horizon must be >= 1");
  std::vector<double> errs(y.size() - 1);
  for (std::size_t t = 1; t < y.size(); ++t) errs[t - 1] = y[t] - y[t - 1];
  const double sd = errs.size() >= 2 ? stats::sample_sd(errs) : 0.0;
  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  ForecastResult out;
  out.level = level;
  out.point.assign(h, y.back());
  out.sigma.resize(h);
  out.lower.resize(h);
  out.upper.resize(h);
  for (int i = 1; i <= h; ++i) {
    out.sigma[i - 1] = sd * std::sqrt(static_cast<double>(i));
    out.lower[i - 1] = out.point[i - 1] - z * out.sigma[i - 1];
    out.upper[i - 1] = out.point[i - 1] + z * out.sigma[i - 1];
  }
  return out;
}

/// Fitted pieces of the Theta decomposition, kept so state can be advanced
/// over new observations with frozen parameters.
struct ThetaFit {
  double intercept = 0.0;  // theta-0 line a + b t
  double slope = 0.0;
  double alpha = 0.5;      // SES smoothing for the theta-2 line
  double sigma2 = 0.0;     // SES one-step residual variance
  std::size_t n_fit = 0;   // observations the parameters were estimated on
};

namespace detail {

/// SES level after running z with smoothing alpha (l init = z_1).
inline double ses_level(std::span<const double> z, double alpha) {
  double l = z[0];
  for (std::size_t t = 1; t < z.size(); ++t) l = alpha * z[t] + (1.0 - alpha) * l;
  return l;
}

inline double ses_sse(std::span<const double> z, double alpha) {
  double l = z[0], acc = 0.0;
  for (std::size_t t = 1; t < z.size(); ++t) {
    const double e = z[t] - l;
    acc += e * e;
    l = alpha * z[t] + (1.0 - alpha) * l;
  }
  return acc;
}

inline std::vector<double> theta2_line(std::span<const double> y, const ThetaFit& fit) {
  std::vector<double> z(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double trend = fit.intercept + fit.slope * static_cast<double>(t + 1);
    z[t] = 2.0 * y[t] - trend;
  }
  return z;
}

}  // namespace detail

/// The theta-0 line is the OLS trend over the time index (curvature
/// removed); the theta-2 line 2y - theta0 doubles it and is forecast flat
/// by SES with SSE-optimal alpha. The forecast is the mean of the two.
inline ThetaFit fit_theta(std::span<const double> y) {
  if (y.size() < 5) fail(ErrorCode::SeriesTooShort, "theta needs length >= 5");
  const std::size_t n = y.size();
  std::vector<double> ones(n, 1.0), tt(n), yy(y.begin(), y.end());
  for (std::size_t t = 0; t < n; ++t) tt[t] = static_cast<double>(t + 1);
  const auto line = smallmat::ols({ones, tt}, yy);
  ThetaFit fit;
  fit.intercept = line[0];
  fit.slope = line[1];
  fit.n_fit = n;
  const auto z = detail::theta2_line(y, fit);
  fit.alpha = optim::golden_section([&](double a) { return detail::ses_sse(z, a); }, 0.01, 0.99);
  fit.sigma2 = detail::ses_sse(z, fit.alpha) / static_cast<double>(n - 1);
  return fit;
}

/// Forecast h steps after the end of y (y may extend past the data the fit
/// was estimated on; parameters stay frozen, only the SES level advances).
inline ForecastResult forecast_theta(const ThetaFit& fit, std::span<const double> y, int h,
                                     double level = 0.95) {
  if (h < 1) fail(ErrorCode::InvalidConfig, "horizon must be >= 1");
  if (y.empty()) fail(ErrorCode::SeriesTooShort, "forecast_theta needs observations");
  const auto z = detail::theta2_line(y, fit);
  const double ses = detail::ses_level(z, fit.alpha);
  const double z_q = stats::normal_quantile(0.5 * (1.0 + level));
  ForecastResult out;
  out.level = level;
  out.point.resize(h);
  out.lower.resize(h);
  out.upper.resize(h);
  out.sigma.resize(h);
  const double sd1 = std::sqrt(std::max(0.0, fit.sigma2));
  for (int i = 1; i <= h; ++i) {
    const double trend =
        fit.intercept + fit.slope * static_cast<double>(y.size() + static_cast<std::size_t>(i));
    const double point = 0.5 * (trend + ses);
    const double sd = sd1 * std::sqrt(1.0 + (i - 1) * fit.alpha * fit.alpha);
    out.point[i - 1] = point;
    out.sigma[i - 1] = sd;
    out.lower[i - 1] = point - z_q * sd;
    out.upper[i - 1] = point + z_q * sd;
  }
  return out;
}

inline ForecastResult theta_forecast(std::span<const double> y, int h, double level = 0.95) {
  return forecast_theta(fit_theta(y), y, h, level);
}

}  // namespace promocast::baselines
