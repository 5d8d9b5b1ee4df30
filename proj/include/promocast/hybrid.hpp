#pragma once

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "promocast/arima.hpp"
#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/smallmat.hpp"
#include "promocast/stats.hpp"

namespace promocast::hybrid {

/// One piece of the uplift regression: log uplift = alpha + beta * log price
/// across the weeks promoted at this price level. With fixed promotional
/// prices a piece usually has a single distinct price and degenerates to an
/// intercept (beta = 0).
struct UpliftSegment {
  int promo_type = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double sigma2_r = 0.0;  // residual variance, n - params denominator
  int n_obs = 0;
};

struct UpliftRecord {
  int promo_type = 0;
  double price = 0.0;
  double uplift = 0.0;
};

/// The decomposition model: an ARIMA on the log baseline series plus one
/// uplift segment per promotional price level, composed in log space with
/// independent errors.
struct HybridFit {
  arima::ArimaFit baseline;               // fit on log baseline demand
  std::map<int, UpliftSegment> segments;  // promo_type -> segment
  std::vector<double> knots;              // distinct promotional prices, ascending
  std::vector<double> baseline_series;    // filled baseline, demand units
};

/// Baseline demand estimation: promotional weeks are masked as missing, an
/// ARIMA is selected on the masked log series via the missing-value
/// likelihood, and masked weeks are filled with their smoothed estimates.
/// Non-promotional weeks keep the observed demand exactly.
inline std::vector<double> estimate_baseline(const SkulSeries& s) {
  const std::size_t t_len = s.length();
  std::size_t n_clean = 0;
  for (std::size_t t = 0; t < t_len; ++t)
    if (s.promo_type[t] == 0) ++n_clean;
  if (n_clean < 10)
    fail(ErrorCode::TooFewNonPromoWeeks, "estimate_baseline needs >= 10 non-promotional weeks");

  bool any_promo = n_clean < t_len;
  std::vector<double> baseline(s.demand);
  if (!any_promo) return baseline;

  std::vector<double> masked(t_len);
  for (std::size_t t = 0; t < t_len; ++t)
    masked[t] = s.promo_type[t] == 0 ? std::log(s.demand[t]) : arima::kMissing;
  const auto fit = arima::select_arima(masked);
  const auto smoothed = arima::smooth_signal(fit);
  for (std::size_t t = 0; t < t_len; ++t)
    if (s.promo_type[t] != 0) baseline[t] = std::exp(smoothed[t]);
  return baseline;
}

/// One record per promotional week, uplift = demand - baseline. Non-positive
/// uplifts are floored to 1e-6 of the baseline so logs exist.
inline std::vector<UpliftRecord> extract_uplifts(const SkulSeries& s,
                                                 const std::vector<double>& baseline) {
  if (baseline.size() != s.length())
    fail(ErrorCode::LengthMismatch, "baseline length must equal series length");
  std::vector<UpliftRecord> records;
  for (std::size_t t = 0; t < s.length(); ++t) {
    if (s.promo_type[t] == 0) continue;
    double uplift = s.demand[t] - baseline[t];
    if (uplift <= 0.0) uplift = 1e-6 * baseline[t];
    records.push_back({s.promo_type[t], s.price[t], uplift});
  }
  return records;
}

/// Per promo type, OLS of log uplift on log price; a single distinct price
/// degenerates to an intercept with beta = 0.
inline std::map<int, UpliftSegment> fit_piecewise(const std::vector<UpliftRecord>& records) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "fit_piecewise needs records");
  std::map<int, std::vector<const UpliftRecord*>> by_type;
  for (const auto& r : records) by_type[r.promo_type].push_back(&r);

  std::map<int, UpliftSegment> segments;
  for (const auto& [type, recs] : by_type) {
    UpliftSegment seg;
    seg.promo_type = type;
    seg.n_obs = static_cast<int>(recs.size());
    std::vector<double> lr(recs.size()), lu(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      lr[i] = std::log(recs[i]->price);
      lu[i] = std::log(recs[i]->uplift);
    }
    bool multi_price = false;
    for (double v : lr) multi_price = multi_price || (v != lr.front());
    int params = 1;
    if (multi_price && recs.size() >= 2) {
      std::vector<double> ones(recs.size(), 1.0);
      const auto coef = smallmat::ols({ones, lr}, lu);
      seg.alpha = coef[0];
      seg.beta = coef[1];
      params = 2;
    } else {
      seg.alpha = stats::mean(lu);
      seg.beta = 0.0;
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const double r = lu[i] - seg.alpha - seg.beta * lr[i];
      sse += r * r;
    }
    const int df = seg.n_obs - params;
    seg.sigma2_r = df >= 1 ? sse / df : 0.0;
    segments.emplace(type, seg);
  }
  return segments;
}

inline HybridFit fit_hybrid(const SkulSeries& s) {
  HybridFit fit;
  fit.baseline_series = estimate_baseline(s);
  const auto records = extract_uplifts(s, fit.baseline_series);
  if (!records.empty()) fit.segments = fit_piecewise(records);
  fit.knots = promo_price_levels(s);
  fit.baseline = arima::select_arima(log_transform(fit.baseline_series));
  return fit;
}

namespace detail {

/// Add the uplift piece and compose variances on a log-space baseline
/// forecast: point += lambda_k (alpha_k + beta_k log r), variance
/// sigma_t^2 + sigma_rk^2 when promoted (independent errors).
inline ForecastResult compose(const HybridFit& fit, ForecastResult base_log, int h,
                              std::span<const double> future_prices,
                              std::span<const int> future_promo, double level) {
  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  ForecastResult out;
  out.level = level;
  out.point.resize(h);
  out.lower.resize(h);
  out.upper.resize(h);
  out.sigma.resize(h);
  for (int i = 0; i < h; ++i) {
    double point_log = base_log.point[i];
    double var_log = base_log.sigma[i] * base_log.sigma[i];
    const int k = future_promo[i];
    if (k != 0) {
      const auto it = fit.segments.find(k);
      if (it == fit.segments.end())
        fail(ErrorCode::UnknownPromoType,
             "promo type " + std::to_string(k) + " never seen in training");
      if (!(future_prices[i] > 0.0)) fail(ErrorCode::NonPositivePrice, "future price");
      const auto& seg = it->second;
      point_log += seg.alpha + seg.beta * std::log(future_prices[i]);
      var_log += seg.sigma2_r;
    }
    const double sd = std::sqrt(std::max(0.0, var_log));
    out.point[i] = point_log;
    out.sigma[i] = sd;
    out.lower[i] = point_log - z * sd;
    out.upper[i] = point_log + z * sd;
  }
  return out;
}

}  // namespace detail

/// Log-space hybrid forecast (not exponentiated; the caller owns the
/// transform back to demand units, matching the other log-space models).
inline ForecastResult forecast_hybrid_log(const HybridFit& fit, int h,
                                          std::span<const double> future_prices,
                                          std::span<const int> future_promo, double level = 0.95) {
  if (h < 1) fail(ErrorCode::InvalidConfig, "horizon must be >= 1");
  if (future_prices.size() < static_cast<std::size_t>(h) ||
      future_promo.size() < static_cast<std::size_t>(h))
    fail(ErrorCode::LengthMismatch, "future price/promo vectors must have length h");
  auto base = arima::forecast_arima(fit.baseline, h, nullptr, level);
  return detail::compose(fit, std::move(base), h, future_prices, future_promo, level);
}

/// Demand-unit forecast: exp of the log-space point and interval endpoints.
/// sigma stays the log-space standard deviation.
inline ForecastResult forecast_hybrid(const HybridFit& fit, int h,
                                      const std::vector<double>& future_prices,
                                      const std::vector<int>& future_promo, double level = 0.95) {
  auto log_fc = forecast_hybrid_log(fit, h, future_prices, future_promo, level);
  for (int i = 0; i < h; ++i) {
    log_fc.point[i] = std::exp(log_fc.point[i]);
    log_fc.lower[i] = std::exp(log_fc.lower[i]);
    log_fc.upper[i] = std::exp(log_fc.upper[i]);
  }
  return log_fc;
}

}  // namespace promocast::hybrid
