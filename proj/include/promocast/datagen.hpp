#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/metrics.hpp"
#include "promocast/rng.hpp"

namespace promocast::datagen {

/// Synthetic SKUL generator. The log baseline follows an AR(1) around
/// log(baseline_level); promotional weeks multiply it by
/// exp(alpha + beta log r + noise) at a price drawn from the fixed promo
/// price levels. baseline_level defaults to 1: CoV and MASE are both
/// scale-invariant, so the level is a free unit.
struct GenConfig {
  int n_weeks = 112;
  double baseline_level = 1.0;
  double baseline_ar = 0.5;        // in (-1, 1)
  double baseline_sigma = 0.05;    // log-scale innovation sd
  double regular_price = 5.0;
  std::vector<double> promo_prices;  // distinct, below regular_price
  double promo_prob = 0.15;          // per-week promotion probability
  double uplift_elasticity = -3.0;   // beta (< 0) of log uplift on log price
  double uplift_intercept = 5.0;     // alpha
  double uplift_noise = 0.05;        // log-scale sd
  std::uint64_t seed = 0;
};

inline void validate_config(const GenConfig& cfg) {
  if (cfg.n_weeks < 2) fail(ErrorCode::InvalidConfig, "n_weeks must be >= 2");
  if (!(cfg.baseline_level > 0.0) || !(cfg.baseline_sigma > 0.0) || !(cfg.regular_price > 0.0))
    fail(ErrorCode::InvalidConfig, "positive-valued fields must be positive");
  if (!(std::fabs(cfg.baseline_ar) < 1.0)) fail(ErrorCode::InvalidConfig, "baseline_ar in (-1,1)");
  if (cfg.promo_prob < 0.0 || cfg.promo_prob >= 1.0)
    fail(ErrorCode::InvalidConfig, "promo_prob in [0,1)");
  if (cfg.uplift_noise < 0.0) fail(ErrorCode::InvalidConfig, "uplift_noise must be >= 0");
  if (cfg.promo_prob > 0.0 && cfg.promo_prices.empty())
    fail(ErrorCode::InvalidConfig, "promo_prices required when promo_prob > 0");
  for (std::size_t i = 0; i < cfg.promo_prices.size(); ++i) {
    if (!(cfg.promo_prices[i] > 0.0) || !(cfg.promo_prices[i] < cfg.regular_price))
      fail(ErrorCode::InvalidConfig, "promo prices must be in (0, regular_price)");
    for (std::size_t j = i + 1; j < cfg.promo_prices.size(); ++j)
      if (cfg.promo_prices[i] == cfg.promo_prices[j])
        fail(ErrorCode::InvalidConfig, "promo prices must be distinct");
  }
}

/// Deterministic given cfg.seed. The RNG stream is consumed in a fixed
/// per-week order: baseline innovation, promo Bernoulli, then (promo weeks
/// only) price index and uplift noise. Promo type k is the 1-based rank of
/// the drawn price among the ascending price levels.
inline SkulSeries gen_skul(const GenConfig& cfg) {
  validate_config(cfg);
  std::vector<double> prices_sorted(cfg.promo_prices);
  std::sort(prices_sorted.begin(), prices_sorted.end());

  Rng rng(cfg.seed);
  SkulSeries s;
  s.id = "SKUL";
  s.demand.resize(cfg.n_weeks);
  s.price.resize(cfg.n_weeks);
  s.promo_type.resize(cfg.n_weeks);

  const double stationary_sd =
      cfg.baseline_sigma / std::sqrt(1.0 - cfg.baseline_ar * cfg.baseline_ar);
  double u = stationary_sd * rng.next_normal();
  for (int t = 0; t < cfg.n_weeks; ++t) {
    if (t > 0) u = cfg.baseline_ar * u + cfg.baseline_sigma * rng.next_normal();
    const double baseline = cfg.baseline_level * std::exp(u);
    const bool promo = rng.next_double() < cfg.promo_prob;
    if (promo) {
      const std::size_t idx = rng.next_below(prices_sorted.size());
      const double r = prices_sorted[idx];
      const double noise = cfg.uplift_noise * rng.next_normal();
      s.demand[t] = baseline * std::exp(cfg.uplift_intercept +
                                        cfg.uplift_elasticity * std::log(r) + noise);
      s.price[t] = r;
      s.promo_type[t] = static_cast<int>(idx) + 1;
    } else {
      s.demand[t] = baseline;
      s.price[t] = cfg.regular_price;
      s.promo_type[t] = 0;
    }
  }
  return validate_series(std::move(s));
}

namespace detail {

/// Per-category template, jittered per attempt. The multiplier of the
/// WEAKEST promotion (at the highest promo price) is the anchored handle:
/// it keeps every promo level safely above 1x baseline, so uplifts stay
/// positive, while the elasticity dials up the strongest promo's size.
struct CategoryTemplate {
  double prob_lo, prob_hi;
  double mult_lo, mult_hi;    // multiplier at the highest promo price
  double elast_lo, elast_hi;  // uplift elasticity (negative)
  double sigma_lo, sigma_hi;  // baseline log-noise
  double unoise_lo, unoise_hi;  // uplift log-noise
  int n_prices;
};

inline GenConfig draw_config(const CategoryTemplate& tpl, Rng& rng, std::uint64_t series_seed,
                             int n_weeks) {
  GenConfig cfg;
  cfg.n_weeks = n_weeks;
  cfg.baseline_level = 1.0;
  cfg.baseline_ar = rng.uniform(0.3, 0.7);
  cfg.baseline_sigma = rng.uniform(tpl.sigma_lo, tpl.sigma_hi);
  cfg.regular_price = 5.0;
  cfg.promo_prob = rng.uniform(tpl.prob_lo, tpl.prob_hi);
  cfg.promo_prices.resize(tpl.n_prices);
  // evenly spread promo levels between 50% and 76% of the regular price
  for (int k = 0; k < tpl.n_prices; ++k)
    cfg.promo_prices[k] = cfg.regular_price * (0.5 + 0.13 * k);
  cfg.uplift_elasticity = rng.uniform(tpl.elast_lo, tpl.elast_hi);
  const double mult_weakest = rng.uniform(tpl.mult_lo, tpl.mult_hi);
  cfg.uplift_intercept =
      std::log(mult_weakest) - cfg.uplift_elasticity * std::log(cfg.promo_prices.back());
  cfg.uplift_noise = rng.uniform(tpl.unoise_lo, tpl.unoise_hi);
  cfg.seed = series_seed;
  return cfg;
}

inline CategoryTemplate category_template(metrics::CovCategory cat) {
  switch (cat) {
    case metrics::CovCategory::Low:
      // occasional mid-size promotions on one fixed price; calm baseline
      return {0.025, 0.04, 3.2, 4.0, -1.2, -1.0, 0.02, 0.035, 0.03, 0.06, 1};
    case metrics::CovCategory::Moderate:
      // promotion-heavy with small uplifts: hardest regime for extrapolators
      return {0.30, 0.40, 2.6, 3.4, -1.6, -1.2, 0.03, 0.05, 0.08, 0.15, 2};
    case metrics::CovCategory::High:
      // huge erratic uplifts: the decomposition still tracks them, a plain
      // extrapolator cannot
      return {0.20, 0.30, 8.0, 15.0, -3.5, -2.5, 0.05, 0.10, 0.35, 0.55, 3};
  }
  fail(ErrorCode::InvalidConfig, "unknown category");
}

}  // namespace detail

/// Rejection-samples series until the realized CoV (raw demand) lands in
/// the requested category; at most 100 attempts per series. Per-series
/// seed is master_seed + global series index.
inline std::vector<SkulSeries> gen_portfolio(int n_low, int n_mod, int n_high,
                                             std::uint64_t master_seed, int n_weeks = 112) {
  if (n_low < 0 || n_mod < 0 || n_high < 0) fail(ErrorCode::InvalidConfig, "negative count");
  using metrics::CovCategory;
  struct Block {
    CovCategory cat;
    int count;
    const char* prefix;
  };
  const Block blocks[] = {{CovCategory::Low, n_low, "L"},
                          {CovCategory::Moderate, n_mod, "M"},
                          {CovCategory::High, n_high, "H"}};
  std::vector<SkulSeries> portfolio;
  portfolio.reserve(static_cast<std::size_t>(n_low) + n_mod + n_high);
  std::uint64_t index = 0;
  for (const auto& block : blocks) {
    const auto tpl = detail::category_template(block.cat);
    for (int j = 0; j < block.count; ++j, ++index) {
      const std::uint64_t series_seed = master_seed + index;
      Rng rng = Rng::substream(series_seed, 0);
      bool accepted = false;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const GenConfig cfg = detail::draw_config(tpl, rng, rng.next_u64(), n_weeks);
        SkulSeries s = gen_skul(cfg);
        if (metrics::categorize(metrics::cov(s.demand)) == block.cat) {
          char buf[16];
          std::snprintf(buf, sizeof(buf), "%s%04d", block.prefix, j + 1);
          s.id = buf;
          portfolio.push_back(std::move(s));
          accepted = true;
          break;
        }
      }
      if (!accepted)
        fail(ErrorCode::CalibrationFailure,
             "rejection budget exhausted for series " + std::to_string(index));
    }
  }
  return portfolio;
}

}  // namespace promocast::datagen
