#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "promocast/errors.hpp"
#include "promocast/stats.hpp"

namespace promocast::metrics {

/// Volatility label per the CoV boundaries: <=0.5 Low, (0.5, 1] Moderate, >1 High.
enum class CovCategory { Low, Moderate, High };

inline const char* to_string(CovCategory c) {
  switch (c) {
    case CovCategory::Low: return "low";
    case CovCategory::Moderate: return "moderate";
    case CovCategory::High: return "high";
  }
  return "?";
}

/// Coefficient of variation: sample standard deviation (n-1 denominator)
/// over the sample mean.
inline double cov(std::span<const double> v) {
  if (v.size() < 2) fail(ErrorCode::TooShort, "cov needs length >= 2");
  const double m = stats::mean(v);
  if (!(m > 0.0)) fail(ErrorCode::ZeroMean, "cov needs strictly positive mean");
  return stats::sample_sd(v) / m;
}

inline CovCategory categorize(double c) {
  if (c < 0.0) fail(ErrorCode::NegativeCov, "cov must be non-negative");
  if (c <= 0.5) return CovCategory::Low;
  if (c <= 1.0) return CovCategory::Moderate;
  return CovCategory::High;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::LengthMismatch, "pearson needs equal lengths");
  if (x.size() < 2) fail(ErrorCode::TooShort, "pearson needs length >= 2");
  const double mx = stats::mean(x), my = stats::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::ConstantInput, "pearson needs non-constant inputs");
  return sxy / std::sqrt(sxx * syy);
}

/// Mean absolute scaled error. The denominator is the in-sample one-step
/// naive MAE of the training window only, (1/(n-1)) * sum |train_t - train_{t-1}|.
inline double mase(std::span<const double> actual, std::span<const double> forecast,
                   std::span<const double> train) {
  if (actual.size() != forecast.size())
    fail(ErrorCode::LengthMismatch, "mase: actual and forecast lengths differ");
  if (actual.empty()) fail(ErrorCode::TooShort, "mase needs h >= 1");
  if (train.size() < 2) fail(ErrorCode::TooShort, "mase needs train length >= 2");
  double denom = 0.0;
  for (std::size_t t = 1; t < train.size(); ++t) denom += std::fabs(train[t] - train[t - 1]);
  denom /= static_cast<double>(train.size() - 1);
  if (denom == 0.0) fail(ErrorCode::ZeroDenominator, "mase: constant training series");
  double num = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) num += std::fabs(actual[i] - forecast[i]);
  num /= static_cast<double>(actual.size());
  return num / denom;
}

/// Two-sided Welch two-sample t-test p-value (unequal variances,
/// Welch-Satterthwaite degrees of freedom).
inline double welch_p(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) fail(ErrorCode::TooShort, "welch_p needs groups of length >= 2");
  const double ma = stats::mean(a), mb = stats::mean(b);
  const double va = stats::sample_var(a), vb = stats::sample_var(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) return ma == mb ? 1.0 : 0.0;
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  // two-sided p via the regularized incomplete beta
  return stats::incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

}  // namespace promocast::metrics
