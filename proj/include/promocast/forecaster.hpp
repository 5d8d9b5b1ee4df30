#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "promocast/arima.hpp"
#include "promocast/baselines.hpp"
#include "promocast/core.hpp"
#include "promocast/dlr.hpp"
#include "promocast/errors.hpp"
#include "promocast/ets.hpp"
#include "promocast/hybrid.hpp"
#include "promocast/ml.hpp"

namespace promocast {

/// Uniform fit/forecast surface over the nine model families plus naive.
/// All models work on log demand (the covariate models on log price) and
/// exponentiate point and interval endpoints back to demand units; sigma is
/// reported in log space. Parameters are estimated by fit() only; forecast()
/// re-runs state recursions over the demand prefix [0, origin) with frozen
/// parameters and treats prices/promo flags at origin..origin+h-1 as known.
class Forecaster {
public:
  virtual ~Forecaster() = default;
  virtual void fit(const SkulSeries& train) = 0;
  virtual ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                                  double level) const = 0;
  virtual nlohmann::json params() const = 0;
  virtual std::string name() const = 0;
};

namespace detail {

inline void exp_endpoints(ForecastResult& f) {
  for (auto& v : f.point) v = std::exp(v);
  for (auto& v : f.lower) v = std::exp(v);
  for (auto& v : f.upper) v = std::exp(v);
}

inline std::vector<double> log_prefix(const SkulSeries& s, std::size_t origin) {
  if (origin < 2 || origin > s.length())
    fail(ErrorCode::TrainLenOutOfRange, "forecast origin out of range");
  std::vector<double> out(origin);
  for (std::size_t t = 0; t < origin; ++t) out[t] = std::log(s.demand[t]);
  return out;
}

inline std::vector<double> log_price_window(const SkulSeries& s, std::size_t from, int h) {
  if (from + h > s.length()) fail(ErrorCode::LengthMismatch, "price window exceeds series");
  std::vector<double> out(h);
  for (int i = 0; i < h; ++i) out[i] = std::log(s.price[from + i]);
  return out;
}

class ArimaForecaster : public Forecaster {
public:
  explicit ArimaForecaster(bool with_price) : with_price_(with_price) {}

  void fit(const SkulSeries& train) override {
    const auto y = log_transform(train.demand);
    if (with_price_) {
      const auto x = log_transform(train.price);
      fit_ = arima::select_arima(y, &x);
    } else {
      fit_ = arima::select_arima(y);
    }
  }

  ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                          double level) const override {
    const auto y = log_prefix(full, origin);
    ForecastResult out;
    if (with_price_) {
      const auto x = log_price_window(full, 0, static_cast<int>(origin));
      const auto xf = log_price_window(full, origin, h);
      out = arima::forecast_with_state(fit_, y, x, h, &xf, level);
    } else {
      out = arima::forecast_with_state(fit_, y, {}, h, nullptr, level);
    }
    exp_endpoints(out);
    return out;
  }

  nlohmann::json params() const override {
    nlohmann::json j{{"p", fit_.spec.p},     {"d", fit_.spec.d},       {"q", fit_.spec.q},
                     {"phi", fit_.phi},      {"theta", fit_.theta},    {"mu", fit_.mu},
                     {"sigma2", fit_.sigma2}, {"loglik", fit_.loglik}, {"aicc", fit_.aicc}};
    if (fit_.beta) j["beta"] = *fit_.beta;
    return j;
  }

  std::string name() const override { return with_price_ ? "arimax" : "arima"; }

private:
  bool with_price_;
  arima::ArimaFit fit_;
};

class EtsForecaster : public Forecaster {
public:
  explicit EtsForecaster(bool with_price) : with_price_(with_price) {}

  void fit(const SkulSeries& train) override {
    const auto y = log_transform(train.demand);
    if (with_price_) {
      const auto x = log_transform(train.price);
      params_ = ets::fit_ets(y, &x);
    } else {
      params_ = ets::fit_ets(y);
    }
  }

  ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                          double level) const override {
    const auto y = log_prefix(full, origin);
    ForecastResult out;
    if (with_price_) {
      const auto x = log_price_window(full, 0, static_cast<int>(origin));
      const auto filt = ets::ets_filter(y, params_, &x);
      const auto xf = log_price_window(full, origin, h);
      out = ets::forecast_ets(params_, filt.levels.back(), filt.slopes.back(), h, &xf, level);
    } else {
      const auto filt = ets::ets_filter(y, params_);
      out = ets::forecast_ets(params_, filt.levels.back(), filt.slopes.back(), h, nullptr, level);
    }
    exp_endpoints(out);
    return out;
  }

  nlohmann::json params() const override {
    nlohmann::json j{{"alpha", params_.alpha}, {"beta", params_.beta},   {"phi", params_.phi},
                     {"l0", params_.l0},       {"b0", params_.b0},       {"sigma2", params_.sigma2}};
    if (params_.c) j["c"] = *params_.c;
    return j;
  }

  std::string name() const override { return with_price_ ? "etsx" : "ets"; }

private:
  bool with_price_;
  ets::EtsParams params_;
};

class DlrForecaster : public Forecaster {
public:
  void fit(const SkulSeries& train) override { fit_ = dlr::fit_dlr(train); }

  ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                          double level) const override {
    const auto y = log_prefix(full, origin);
    const auto x = log_price_window(full, 0, static_cast<int>(origin));
    if (origin + h > full.length()) fail(ErrorCode::LengthMismatch, "price window exceeds series");
    const auto filt = dlr::dlr_filter(y, x, fit_.params);
    std::vector<double> future(h);
    for (int i = 0; i < h; ++i) future[i] = full.price[origin + i];
    return dlr::forecast_dlr(fit_.params, filt.final_state, h, future, level);
  }

  nlohmann::json params() const override {
    return {{"sigma2_eps", fit_.params.sigma2_eps},
            {"sigma2_nu", fit_.params.sigma2_nu},
            {"sigma2_omega", fit_.params.sigma2_omega},
            {"m0", fit_.params.m0},
            {"alpha_T", fit_.final_state.mean[0]},
            {"beta_T", fit_.final_state.mean[1]},
            {"loglik", fit_.loglik}};
  }

  std::string name() const override { return "dlr"; }

private:
  dlr::DlrFit fit_;
};

class HybridForecaster : public Forecaster {
public:
  void fit(const SkulSeries& train) override {
    fit_ = hybrid::fit_hybrid(train);
    train_len_ = train.length();
  }

  ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                          double level) const override {
    if (origin < train_len_) fail(ErrorCode::TrainLenOutOfRange, "origin precedes training end");
    // baseline state: filled log baseline over the training window, then
    // observed log demand on non-promotional weeks and masked promo weeks
    std::vector<double> y(origin);
    for (std::size_t t = 0; t < origin; ++t) {
      if (t < train_len_)
        y[t] = std::log(fit_.baseline_series[t]);
      else
        y[t] = full.promo_type[t] == 0 ? std::log(full.demand[t]) : arima::kMissing;
    }
    if (origin + h > full.length()) fail(ErrorCode::LengthMismatch, "price window exceeds series");
    auto base = arima::forecast_with_state(fit_.baseline, y, {}, h, nullptr, level);
    std::vector<double> prices(h);
    std::vector<int> promo(h);
    for (int i = 0; i < h; ++i) {
      prices[i] = full.price[origin + i];
      promo[i] = full.promo_type[origin + i];
    }
    auto out = hybrid::detail::compose(fit_, std::move(base), h, prices, promo, level);
    exp_endpoints(out);
    return out;
  }

  nlohmann::json params() const override {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& [type, seg] : fit_.segments)
      segs.push_back({{"promo_type", type},
                      {"alpha", seg.alpha},
                      {"beta", seg.beta},
                      {"sigma2_r", seg.sigma2_r},
                      {"n_obs", seg.n_obs}});
    return {{"baseline",
             {{"p", fit_.baseline.spec.p},
              {"d", fit_.baseline.spec.d},
              {"q", fit_.baseline.spec.q},
              {"phi", fit_.baseline.phi},
              {"theta", fit_.baseline.theta},
              {"mu", fit_.baseline.mu},
              {"sigma2", fit_.baseline.sigma2}}},
            {"segments", segs},
            {"knots", fit_.knots}};
  }

  std::string name() const override { return "hr-arima"; }

private:
  hybrid::HybridFit fit_;
  std::size_t train_len_ = 0;
};

class ThetaForecaster : public Forecaster {
public:
  void fit(const SkulSeries& train) override {
    fit_ = baselines::fit_theta(log_transform(train.demand));
  }

  ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                          double level) const override {
    const auto y = log_prefix(full, origin);
    auto out = baselines::forecast_theta(fit_, y, h, level);
    exp_endpoints(out);
    return out;
  }

  nlohmann::json params() const override {
    return {{"intercept", fit_.intercept},
            {"slope", fit_.slope},
            {"alpha", fit_.alpha},
            {"sigma2", fit_.sigma2}};
  }

  std::string name() const override { return "theta"; }

private:
  baselines::ThetaFit fit_;
};

class NaiveForecaster : public Forecaster {
public:
  void fit(const SkulSeries& train) override {
    const auto y = log_transform(train.demand);
    std::vector<double> errs(y.size() - 1);
    for (std::size_t t = 1; t < y.size(); ++t) errs[t - 1] = y[t] - y[t - 1];
    sd_ = errs.size() >= 2 ? stats::sample_sd(errs) : 0.0;
  }

  ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                          double level) const override {
    const auto y = log_prefix(full, origin);
    const double z = stats::normal_quantile(0.5 * (1.0 + level));
    ForecastResult out;
    out.level = level;
    out.point.assign(h, y.back());
    out.sigma.resize(h);
    out.lower.resize(h);
    out.upper.resize(h);
    for (int i = 1; i <= h; ++i) {
      out.sigma[i - 1] = sd_ * std::sqrt(static_cast<double>(i));
      out.lower[i - 1] = out.point[i - 1] - z * out.sigma[i - 1];
      out.upper[i - 1] = out.point[i - 1] + z * out.sigma[i - 1];
    }
    exp_endpoints(out);
    return out;
  }

  nlohmann::json params() const override { return {{"naive_error_sd", sd_}}; }

  std::string name() const override { return "naive"; }

private:
  double sd_ = 0.0;
};

inline constexpr int kLags = 4;

/// Shared recursive multi-step logic for the ML models: predicted log
/// demand is fed back as the lag input for the next step.
template <typename Model>
ForecastResult ml_recursive_forecast(const Model& model, const SkulSeries& full,
                                     std::size_t origin, int h, double level, double resid_sd) {
  if (origin < static_cast<std::size_t>(kLags))
    fail(ErrorCode::SeriesTooShort, "origin must cover the lag window");
  if (origin + h > full.length()) fail(ErrorCode::LengthMismatch, "price window exceeds series");
  std::vector<double> lags(kLags);  // lags[0] = most recent
  for (int j = 0; j < kLags; ++j) lags[j] = std::log(full.demand[origin - 1 - j]);
  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  ForecastResult out;
  out.level = level;
  out.point.resize(h);
  out.lower.resize(h);
  out.upper.resize(h);
  out.sigma.resize(h);
  for (int i = 0; i < h; ++i) {
    std::vector<double> row;
    row.reserve(kLags + 1);
    row.push_back(std::log(full.price[origin + i]));
    for (int j = 0; j < kLags; ++j) row.push_back(lags[j]);
    const double pred = model.predict(row);
    out.point[i] = pred;
    out.sigma[i] = resid_sd;
    out.lower[i] = pred - z * resid_sd;
    out.upper[i] = pred + z * resid_sd;
    for (int j = kLags - 1; j >= 1; --j) lags[j] = lags[j - 1];
    lags[0] = pred;
  }
  exp_endpoints(out);
  return out;
}

template <typename Model>
double ml_train_resid_sd(const Model& model, const ml::FeatureMatrix& fm) {
  double sse = 0.0;
  for (std::size_t i = 0; i < fm.n_rows(); ++i) {
    const double e = model.predict(fm.rows[i]) - fm.target[i];
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(fm.n_rows()));
}

class SvrForecaster : public Forecaster {
public:
  void fit(const SkulSeries& train) override {
    const auto fm = ml::build_features(train, kLags);
    model_ = ml::grid_search_svr(fm);
    resid_sd_ = ml_train_resid_sd(model_, fm);
  }

  ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                          double level) const override {
    return ml_recursive_forecast(model_, full, origin, h, level, resid_sd_);
  }

  nlohmann::json params() const override {
    return {{"gamma", model_.gamma},
            {"C", model_.c_penalty},
            {"epsilon", model_.epsilon},
            {"n_support", model_.support_coefs.size()},
            {"bias", model_.bias},
            {"support_coefs", model_.support_coefs}};
  }

  std::string name() const override { return "svr"; }

private:
  ml::SvrModel model_;
  double resid_sd_ = 0.0;
};

class AnnForecaster : public Forecaster {
public:
  void fit(const SkulSeries& train) override {
    const auto fm = ml::build_features(train, kLags);
    model_ = ml::fit_ann(fm, kHidden, kEpochs, kLearningRate, kInitSeed);
    resid_sd_ = ml_train_resid_sd(model_, fm);
  }

  ForecastResult forecast(const SkulSeries& full, std::size_t origin, int h,
                          double level) const override {
    return ml_recursive_forecast(model_, full, origin, h, level, resid_sd_);
  }

  nlohmann::json params() const override {
    return {{"hidden", model_.hidden},
            {"inputs", model_.inputs},
            {"weights", model_.weights}};
  }

  std::string name() const override { return "ann"; }

private:
  static constexpr int kHidden = 5;
  static constexpr int kEpochs = 2000;
  static constexpr double kLearningRate = 0.05;
  static constexpr std::uint64_t kInitSeed = 0x5eedULL;  // fixed: fits are deterministic
  ml::AnnModel model_;
  double resid_sd_ = 0.0;
};

}  // namespace detail

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"hr-arima", "arimax", "etsx", "dlr",  "svr",
                                              "ann",      "arima",  "ets",  "theta", "naive"};
  return names;
}

inline std::unique_ptr<Forecaster> make_forecaster(const std::string& name) {
  using namespace detail;
  if (name == "arima") return std::make_unique<ArimaForecaster>(false);
  if (name == "arimax") return std::make_unique<ArimaForecaster>(true);
  if (name == "ets") return std::make_unique<EtsForecaster>(false);
  if (name == "etsx") return std::make_unique<EtsForecaster>(true);
  if (name == "dlr") return std::make_unique<DlrForecaster>();
  if (name == "hr-arima") return std::make_unique<HybridForecaster>();
  if (name == "theta") return std::make_unique<ThetaForecaster>();
  if (name == "svr") return std::make_unique<SvrForecaster>();
  if (name == "ann") return std::make_unique<AnnForecaster>();
  if (name == "naive") return std::make_unique<NaiveForecaster>();
  fail(ErrorCode::UnknownModel, "no model named '" + name + "'");
}

}  // namespace promocast
