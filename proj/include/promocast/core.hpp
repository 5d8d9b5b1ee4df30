#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "promocast/errors.hpp"

namespace promocast {

/// One product-location's weekly history. Weeks are 1..T with no calendar
/// structure; promo_type 0 means no promotion, k >= 1 identifies the k-th
/// fixed promotional price level.
struct SkulSeries {
  std::string id;
  std::vector<double> demand;   // units/week, strictly positive
  std::vector<double> price;    // currency/unit, strictly positive
  std::vector<int> promo_type;  // 0 = none, k >= 1 = promotion type k

  std::size_t length() const { return demand.size(); }
};

struct TrainTestSplit {
  SkulSeries train;
  SkulSeries test;
};

/// Eight (or h) point forecasts with symmetric Gaussian intervals in the
/// modeling space. sigma is the per-step forecast-error standard deviation.
struct ForecastResult {
  std::vector<double> point;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> sigma;
  double level = 0.95;
};

/// Checks all SkulSeries invariants and returns the series unchanged.
/// Every model consumes validated series only, so positivity checks live
/// here and nowhere else.
inline SkulSeries validate_series(SkulSeries s) {
  const std::size_t t = s.demand.size();
  if (t < 2 || s.price.size() != t || s.promo_type.size() != t)
    fail(ErrorCode::LengthMismatch,
         "series '" + s.id + "': demand/price/promo_type must share length T >= 2");
  for (std::size_t i = 0; i < t; ++i) {
    if (!(s.demand[i] > 0.0) || !std::isfinite(s.demand[i]))
      fail(ErrorCode::NonPositiveDemand,
           "series '" + s.id + "' week " + std::to_string(i + 1));
    if (!(s.price[i] > 0.0) || !std::isfinite(s.price[i]))
      fail(ErrorCode::NonPositivePrice,
           "series '" + s.id + "' week " + std::to_string(i + 1));
    if (s.promo_type[i] < 0)
      fail(ErrorCode::InconsistentPromoPrice,
           "series '" + s.id + "': negative promo type at week " + std::to_string(i + 1));
  }
  // promotional prices are fixed: a type must map to exactly one price
  std::map<int, double> promo_price;
  for (std::size_t i = 0; i < t; ++i) {
    if (s.promo_type[i] == 0) continue;
    auto [it, inserted] = promo_price.emplace(s.promo_type[i], s.price[i]);
    if (!inserted && it->second != s.price[i])
      fail(ErrorCode::InconsistentPromoPrice,
           "series '" + s.id + "': promo type " + std::to_string(s.promo_type[i]) +
               " seen at two prices");
  }
  return s;
}

/// First train_len weeks vs the rest, order preserved.
inline TrainTestSplit split_train_test(const SkulSeries& s, std::size_t train_len) {
  const std::size_t t = s.length();
  if (train_len < 2 || train_len >= t)
    fail(ErrorCode::TrainLenOutOfRange,
         "train_len " + std::to_string(train_len) + " for series of length " + std::to_string(t));
  TrainTestSplit out;
  out.train.id = s.id;
  out.test.id = s.id;
  out.train.demand.assign(s.demand.begin(), s.demand.begin() + train_len);
  out.train.price.assign(s.price.begin(), s.price.begin() + train_len);
  out.train.promo_type.assign(s.promo_type.begin(), s.promo_type.begin() + train_len);
  out.test.demand.assign(s.demand.begin() + train_len, s.demand.end());
  out.test.price.assign(s.price.begin() + train_len, s.price.end());
  out.test.promo_type.assign(s.promo_type.begin() + train_len, s.promo_type.end());
  return out;
}

inline std::vector<double> log_transform(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) fail(ErrorCode::NonPositiveInput, "log_transform at index " + std::to_string(i));
    out[i] = std::log(v[i]);
  }
  return out;
}

inline std::vector<double> exp_transform(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]);
  return out;
}

/// Distinct promotional price levels, ascending ("knots").
inline std::vector<double> promo_price_levels(const SkulSeries& s) {
  std::map<double, int> seen;
  for (std::size_t i = 0; i < s.length(); ++i)
    if (s.promo_type[i] >= 1) seen.emplace(s.price[i], s.promo_type[i]);
  std::vector<double> knots;
  knots.reserve(seen.size());
  for (const auto& [price, type] : seen) knots.push_back(price);
  return knots;
}

}  // namespace promocast
