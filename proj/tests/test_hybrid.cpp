#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "promocast/arima.hpp"
#include "promocast/hybrid.hpp"
#include "promocast/metrics.hpp"
#include "promocast/rng.hpp"
#include "test_util.hpp"

using namespace promocast;
using testutil::thrown_code;

namespace {

// Constant baseline 1.0 with deterministic promotional uplifts
// exp(alpha + beta log r): the exact generative match of the hybrid's
// log-space composition.
SkulSeries generative_match(int t_len, double alpha, double beta,
                            const std::vector<double>& promo_prices, double promo_every,
                            std::uint64_t seed) {
  Rng rng(seed);
  SkulSeries s;
  s.id = "G";
  for (int t = 0; t < t_len; ++t) {
    const bool promo = rng.next_double() < 1.0 / promo_every;
    if (promo) {
      const std::size_t idx = rng.next_below(promo_prices.size());
      const double r = promo_prices[idx];
      s.demand.push_back(1.0 * std::exp(alpha + beta * std::log(r)));
      s.price.push_back(r);
      s.promo_type.push_back(static_cast<int>(idx) + 1);
    } else {
      s.demand.push_back(1.0);
      s.price.push_back(5.0);
      s.promo_type.push_back(0);
    }
  }
  return validate_series(std::move(s));
}

SkulSeries spike_series(int t_len, double base, double spike, int period, std::uint64_t seed) {
  Rng rng(seed);
  SkulSeries s;
  s.id = "S";
  for (int t = 0; t < t_len; ++t) {
    const bool promo = (t % period) == period - 1;
    s.demand.push_back(promo ? spike : base);
    s.price.push_back(promo ? 2.5 : 5.0);
    s.promo_type.push_back(promo ? 1 : 0);
  }
  return validate_series(std::move(s));
}

}  // namespace

TEST_CASE("baseline equals observed demand when there are no promotions") {
  Rng rng(1);
  SkulSeries s;
  s.id = "S";
  for (int t = 0; t < 40; ++t) {
    s.demand.push_back(std::exp(0.2 * rng.next_normal()));
    s.price.push_back(5.0);
    s.promo_type.push_back(0);
  }
  const auto baseline = hybrid::estimate_baseline(s);
  REQUIRE(baseline == s.demand);
}

TEST_CASE("masked smoothing keeps the baseline near a constant level") {
  const auto s = spike_series(60, 100.0, 5000.0, 6, 2);
  const auto baseline = hybrid::estimate_baseline(s);
  for (std::size_t t = 0; t < s.length(); ++t) {
    if (s.promo_type[t] != 0) {
      REQUIRE(baseline[t] > 90.0);
      REQUIRE(baseline[t] < 110.0);
      REQUIRE(baseline[t] < s.demand[t]);  // uplift is positive by construction
    } else {
      REQUIRE(baseline[t] == s.demand[t]);
    }
  }
}

TEST_CASE("estimate_baseline needs ten clean weeks") {
  SkulSeries s;
  s.id = "S";
  for (int t = 0; t < 12; ++t) {
    s.demand.push_back(1.0);
    s.price.push_back(t < 8 ? 5.0 : 2.5);
    s.promo_type.push_back(t < 8 ? 0 : 1);
  }
  REQUIRE(thrown_code([&] { hybrid::estimate_baseline(s); }) == ErrorCode::TooFewNonPromoWeeks);
}

TEST_CASE("uplift extraction subtracts and floors") {
  SkulSeries s;
  s.id = "S";
  s.demand = {100, 5000, 100, 50};
  s.price = {5, 2.5, 5, 2.5};
  s.promo_type = {0, 1, 0, 1};
  const std::vector<double> baseline{100, 100, 100, 100};
  const auto records = hybrid::extract_uplifts(s, baseline);
  REQUIRE(records.size() == 2);
  REQUIRE(records[0].uplift == 4900.0);           // exact integer-valued doubles
  REQUIRE(records[1].uplift == 1e-6 * 100.0);     // floored positive
  REQUIRE(records[0].promo_type == 1);

  SkulSeries clean = s;
  clean.promo_type = {0, 0, 0, 0};
  REQUIRE(hybrid::extract_uplifts(clean, baseline).empty());
}

TEST_CASE("decomposition consistency on integer-valued data") {
  const auto s = spike_series(48, 100.0, 5000.0, 6, 3);
  const std::vector<double> baseline(48, 100.0);
  const auto records = hybrid::extract_uplifts(s, baseline);
  std::size_t idx = 0;
  for (std::size_t t = 0; t < s.length(); ++t) {
    if (s.promo_type[t] == 0) continue;
    REQUIRE(baseline[t] + records[idx].uplift == s.demand[t]);
    ++idx;
  }
}

TEST_CASE("piecewise fit: single price level degenerates to an intercept") {
  const double e1 = std::exp(1.0);
  std::vector<hybrid::UpliftRecord> records{{1, e1, std::exp(3.0)}, {1, e1, std::exp(5.0)}};
  const auto segments = hybrid::fit_piecewise(records);
  REQUIRE(segments.size() == 1);
  const auto& seg = segments.at(1);
  REQUIRE(seg.alpha == Catch::Approx(4.0).margin(1e-12));
  REQUIRE(seg.beta == 0.0);
  REQUIRE(seg.sigma2_r == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(seg.n_obs == 2);
}

TEST_CASE("piecewise fit: saturated single-record segments") {
  std::vector<hybrid::UpliftRecord> records{{1, 2.5, 40.0}, {2, 3.0, 20.0}};
  const auto segments = hybrid::fit_piecewise(records);
  REQUIRE(segments.size() == 2);
  REQUIRE(segments.at(1).sigma2_r == 0.0);
  REQUIRE(segments.at(2).sigma2_r == 0.0);
  REQUIRE(segments.at(1).alpha == Catch::Approx(std::log(40.0)).margin(1e-12));
}

TEST_CASE("piecewise fit recovers an exact log-log line") {
  std::vector<hybrid::UpliftRecord> records;
  for (double r : {2.0, 2.5, 3.0, 3.5})
    records.push_back({1, r, std::exp(10.0 - 3.0 * std::log(r))});
  const auto segments = hybrid::fit_piecewise(records);
  REQUIRE(segments.at(1).beta == Catch::Approx(-3.0).margin(1e-9));
  REQUIRE(segments.at(1).alpha == Catch::Approx(10.0).margin(1e-9));
  REQUIRE(thrown_code([] { hybrid::fit_piecewise({}); }) == ErrorCode::EmptyRecords);
}

TEST_CASE("variance composition is Pythagorean") {
  hybrid::HybridFit fit;
  hybrid::UpliftSegment seg;
  seg.promo_type = 1;
  seg.alpha = 0.0;
  seg.beta = 0.0;
  seg.sigma2_r = 9.0;
  fit.segments.emplace(1, seg);
  ForecastResult base;
  base.level = 0.95;
  base.point = {1.0};
  base.sigma = {4.0};
  base.lower = {0.0};
  base.upper = {0.0};
  const std::vector<double> prices{2.5};
  const std::vector<int> promo{1};
  const auto out = hybrid::detail::compose(fit, base, 1, prices, promo, 0.95);
  REQUIRE(out.sigma[0] == Catch::Approx(5.0).margin(1e-12));
}

TEST_CASE("no-promotion horizon equals the baseline ARIMA forecast") {
  const auto s = spike_series(90, 100.0, 3000.0, 9, 4);
  const auto fit = hybrid::fit_hybrid(s);
  const std::vector<double> prices(8, 5.0);
  const std::vector<int> promo(8, 0);
  const auto hy = hybrid::forecast_hybrid(fit, 8, prices, promo, 0.95);
  const auto base = arima::forecast_arima(fit.baseline, 8, nullptr, 0.95);
  for (int i = 0; i < 8; ++i) {
    REQUIRE(hy.point[i] == Catch::Approx(std::exp(base.point[i])).epsilon(1e-8));
    REQUIRE(hy.sigma[i] == Catch::Approx(base.sigma[i]).margin(1e-12));
  }
}

TEST_CASE("promoted steps have wider intervals than clean steps") {
  const auto s = spike_series(90, 100.0, 3000.0, 6, 5);
  const auto fit = hybrid::fit_hybrid(s);
  REQUIRE(fit.segments.at(1).sigma2_r > 0.0);
  const std::vector<double> prices{2.5, 5.0};
  const auto promoted =
      hybrid::forecast_hybrid_log(fit, 1, prices, std::vector<int>{1}, 0.95);
  const auto clean = hybrid::forecast_hybrid_log(fit, 1, prices, std::vector<int>{0}, 0.95);
  REQUIRE(promoted.upper[0] - promoted.lower[0] > clean.upper[0] - clean.lower[0]);
}

TEST_CASE("segment count equals the distinct promotional price levels") {
  const auto s = generative_match(112, 6.0, -2.0, {2.0, 2.5, 3.0}, 4.0, 6);
  const auto fit = hybrid::fit_hybrid(s);
  REQUIRE(fit.knots.size() == 3);
  REQUIRE(fit.segments.size() == fit.knots.size());
}

TEST_CASE("unknown future promo types are rejected") {
  const auto s = spike_series(60, 100.0, 3000.0, 6, 7);
  const auto fit = hybrid::fit_hybrid(s);
  const std::vector<double> prices{2.0};
  REQUIRE(thrown_code([&] {
            hybrid::forecast_hybrid(fit, 1, prices, std::vector<int>{9}, 0.95);
          }) == ErrorCode::UnknownPromoType);
}

TEST_CASE("noiseless generative match scores near-zero test MASE") {
  const auto s = generative_match(112, std::log(120.0) + 2.0 * std::log(2.0), -2.0,
                                  {2.0, 2.5, 3.2}, 3.5, 8);
  const auto split = split_train_test(s, 104);
  const auto fit = hybrid::fit_hybrid(split.train);
  std::vector<double> prices(s.price.begin() + 104, s.price.end());
  std::vector<int> promo(s.promo_type.begin() + 104, s.promo_type.end());
  const auto fc = hybrid::forecast_hybrid(fit, 8, prices, promo, 0.95);
  std::vector<double> actual(s.demand.begin() + 104, s.demand.end());
  const double mase = metrics::mase(actual, fc.point, split.train.demand);
  REQUIRE(mase < 0.05);
}
