#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "promocast/forecaster.hpp"
#include "promocast/ml.hpp"
#include "promocast/rng.hpp"
#include "test_util.hpp"

using namespace promocast;
using testutil::thrown_code;

namespace {

SkulSeries tiny_series(int t_len, std::uint64_t seed) {
  Rng rng(seed);
  SkulSeries s;
  s.id = "S";
  for (int t = 0; t < t_len; ++t) {
    s.demand.push_back(std::exp(rng.next_normal() * 0.3));
    s.price.push_back(2.0 + 3.0 * rng.next_double());
    s.promo_type.push_back(0);
  }
  return s;
}

ml::FeatureMatrix linear_fm(int n, std::uint64_t seed, double noise = 0.0) {
  Rng rng(seed);
  ml::FeatureMatrix fm;
  fm.lags = 1;
  for (int i = 0; i < n; ++i) {
    const double a = rng.next_double(), b = rng.next_double();
    fm.rows.push_back({a, b});
    fm.target.push_back(1.0 + 2.0 * a - b + noise * rng.next_normal());
  }
  return fm;
}

}  // namespace

TEST_CASE("build_features counts rows and stays causal") {
  const auto s = tiny_series(5, 1);
  const auto fm = ml::build_features(s, 2);
  REQUIRE(fm.n_rows() == 3);
  REQUIRE(fm.n_cols() == 3);  // price + 2 lags
  // row for t references demand at t-1, t-2 only
  for (std::size_t i = 0; i < fm.n_rows(); ++i) {
    const std::size_t t = i + 2;  // 0-based target week
    REQUIRE(fm.rows[i][0] == Catch::Approx(std::log(s.price[t])));
    REQUIRE(fm.rows[i][1] == Catch::Approx(std::log(s.demand[t - 1])));
    REQUIRE(fm.rows[i][2] == Catch::Approx(std::log(s.demand[t - 2])));
    REQUIRE(fm.target[i] == Catch::Approx(std::log(s.demand[t])));
  }
  REQUIRE(thrown_code([&] { ml::build_features(s, 4); }) == ErrorCode::SeriesTooShort);
}

TEST_CASE("shifting the series by one week shifts every row") {
  const auto s = tiny_series(12, 2);
  SkulSeries shifted = s;
  shifted.demand.erase(shifted.demand.begin());
  shifted.price.erase(shifted.price.begin());
  shifted.promo_type.erase(shifted.promo_type.begin());
  const auto fm = ml::build_features(s, 3);
  const auto fm2 = ml::build_features(shifted, 3);
  for (std::size_t i = 0; i + 1 < fm.n_rows(); ++i) {
    REQUIRE(fm.rows[i + 1] == fm2.rows[i]);
    REQUIRE(fm.target[i + 1] == fm2.target[i]);
  }
}

TEST_CASE("minmax_scale maps extremes to 0 and 1 and inverts") {
  const auto [scaled, mm] = ml::minmax_scale(std::vector<double>{2, 4, 6});
  REQUIRE(scaled == std::vector<double>{0.0, 0.5, 1.0});
  Rng rng(3);
  std::vector<double> v(30);
  for (auto& x : v) x = rng.uniform(-5.0, 9.0);
  const auto [sv, p] = ml::minmax_scale(v);
  double lo = 1e300, hi = -1e300;
  for (double x : sv) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  REQUIRE(lo == 0.0);
  REQUIRE(hi == 1.0);
  for (std::size_t i = 0; i < v.size(); ++i)
    REQUIRE(p.unscale(sv[i]) == Catch::Approx(v[i]).margin(1e-12));
  REQUIRE(thrown_code([] { ml::minmax_scale(std::vector<double>{3, 3, 3}); }) ==
          ErrorCode::ConstantColumn);
}

TEST_CASE("targets inside the epsilon tube produce no support vectors") {
  ml::FeatureMatrix fm = linear_fm(12, 4);
  for (auto& t : fm.target) t = 5.0 + 0.05 * (t - 5.0) / 10.0;  // squeeze near 5.0
  const auto model = ml::fit_svr(fm, 0.5, 10.0, 0.1);
  REQUIRE(model.support_coefs.empty());
  for (std::size_t i = 0; i < fm.n_rows(); ++i)
    REQUIRE(std::fabs(model.predict(fm.rows[i]) - 5.0) < 0.1);
}

TEST_CASE("noiseless linear target: in-sample MAE below 2 epsilon") {
  const auto fm = linear_fm(40, 5);
  const auto model = ml::fit_svr(fm, 0.5, 100.0, 0.05);
  double mae = 0.0;
  for (std::size_t i = 0; i < fm.n_rows(); ++i)
    mae += std::fabs(model.predict(fm.rows[i]) - fm.target[i]);
  mae /= fm.n_rows();
  REQUIRE(mae < 2 * 0.05);
}

TEST_CASE("every dual coefficient is bounded by C") {
  const auto fm = linear_fm(30, 6, 0.5);
  const double c = 2.0;
  const auto model = ml::fit_svr(fm, 0.8, c, 0.02);
  REQUIRE(!model.support_coefs.empty());
  for (double b : model.support_coefs) REQUIRE(std::fabs(b) <= c + 1e-12);
}

TEST_CASE("SVR prediction is invariant to training row order") {
  const auto fm = linear_fm(25, 7, 0.2);
  ml::FeatureMatrix rev;
  rev.lags = fm.lags;
  for (std::size_t i = fm.n_rows(); i-- > 0;) {
    rev.rows.push_back(fm.rows[i]);
    rev.target.push_back(fm.target[i]);
  }
  const auto a = ml::fit_svr(fm, 0.5, 5.0, 0.05);
  const auto b = ml::fit_svr(rev, 0.5, 5.0, 0.05);
  for (std::size_t i = 0; i < fm.n_rows(); ++i)
    REQUIRE(a.predict(fm.rows[i]) == Catch::Approx(b.predict(fm.rows[i])).margin(1e-6));
}

TEST_CASE("the SVR grid holds exactly 1100 candidates") {
  const auto grid = ml::svr_grid();
  REQUIRE(grid.size() == 1100);
  REQUIRE(grid.front().first == 0.001);  // gamma 0 mapped off the degenerate value
  REQUIRE(grid.back().first == 1.0);
  REQUIRE(grid.back().second == 100.0);
}

TEST_CASE("grid search is deterministic and picks the CV argmin") {
  const auto s = tiny_series(40, 8);
  const auto fm = ml::build_features(s, 2);
  std::vector<double> cv;
  const auto a = ml::grid_search_svr(fm, &cv);
  const auto b = ml::grid_search_svr(fm);
  REQUIRE(a.gamma == b.gamma);
  REQUIRE(a.c_penalty == b.c_penalty);
  REQUIRE(a.support_coefs == b.support_coefs);
  REQUIRE(a.bias == b.bias);

  const auto grid = ml::svr_grid();
  REQUIRE(cv.size() == grid.size());
  double chosen_mse = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid[i].first == a.gamma && grid[i].second == a.c_penalty) chosen_mse = cv[i];
  for (double v : cv)
    if (!std::isnan(v)) REQUIRE(chosen_mse <= v);

  REQUIRE(thrown_code([&] {
            ml::grid_search_svr(ml::build_features(tiny_series(12, 9), 2));
          }) == ErrorCode::TooFewRows);
}

TEST_CASE("ANN analytic gradient matches central finite differences") {
  Rng rng(11);
  const int inputs = 3, hidden = 4;
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (int i = 0; i < 12; ++i) {
    rows.push_back({rng.next_double(), rng.next_double(), rng.next_double()});
    targets.push_back(rng.next_double());
  }
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> w(ml::AnnModel::weight_count(inputs, hidden));
    for (auto& v : w) v = rng.uniform(-0.5, 0.5);
    std::vector<double> grad;
    ml::detail::ann_loss_grad(w, inputs, hidden, rows, targets, &grad);
    const double step = 1e-5;
    double max_rel = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      auto wp = w, wm = w;
      wp[k] += step;
      wm[k] -= step;
      const double fd = (ml::detail::ann_loss_grad(wp, inputs, hidden, rows, targets, nullptr) -
                         ml::detail::ann_loss_grad(wm, inputs, hidden, rows, targets, nullptr)) /
                        (2 * step);
      const double denom = std::max(std::fabs(fd), std::max(std::fabs(grad[k]), 1e-8));
      max_rel = std::max(max_rel, std::fabs(fd - grad[k]) / denom);
    }
    REQUIRE(max_rel < 1e-4);
  }
}

TEST_CASE("training on a constant target reaches near-zero loss quickly") {
  ml::FeatureMatrix fm = linear_fm(15, 12);
  for (auto& t : fm.target) t = 2.5;
  const auto model = ml::fit_ann(fm, 3, 500, 0.8, 42);
  double sse = 0.0;
  for (std::size_t i = 0; i < fm.n_rows(); ++i) {
    const double e = model.predict(fm.rows[i]) - 2.5;
    sse += e * e;
  }
  REQUIRE(sse / fm.n_rows() < 1e-6);
}

TEST_CASE("same seed gives bit-identical ANN weights") {
  const auto fm = linear_fm(20, 13, 0.1);
  const auto a = ml::fit_ann(fm, 5, 50, 0.05, 42);
  const auto b = ml::fit_ann(fm, 5, 50, 0.05, 42);
  REQUIRE(a.weights == b.weights);
  const auto c = ml::fit_ann(fm, 5, 50, 0.05, 43);
  REQUIRE(a.weights != c.weights);
}

TEST_CASE("crafted identity-on-lag1 network propagates the last value flat") {
  // hidden unit in the near-linear logistic regime: sigma(d u) ~ 0.5 + d u / 4
  const int inputs = 1 + promocast::detail::kLags;
  ml::AnnModel model;
  model.inputs = inputs;
  model.hidden = 1;
  const double d = 1e-4;
  model.weights.assign(ml::AnnModel::weight_count(inputs, 1), 0.0);
  model.weights[1] = d;              // w1 on lag-1 input
  model.weights[inputs] = 0.0;       // b1
  model.weights[inputs + 1] = 4.0 / d;  // w2
  model.weights[inputs + 2] = -2.0 / d; // b2
  // identity scalers on every column and the target
  model.scaler.cols.assign(inputs, ml::MinMax{0.0, 1.0});
  model.target_scaler = ml::MinMax{0.0, 1.0};

  SkulSeries s = tiny_series(12, 21);
  const double last = std::log(s.demand[7]);
  const auto fc = promocast::detail::ml_recursive_forecast(model, s, 8, 4, 0.95, 0.1);
  for (double v : fc.point) REQUIRE(std::log(v) == Catch::Approx(last).margin(1e-5));
}

TEST_CASE("recursive forecasts stay finite over eight steps") {
  const auto s = tiny_series(60, 22);
  auto model = make_forecaster("ann");
  const auto split = split_train_test(s, 50);
  model->fit(split.train);
  const auto fc = model->forecast(s, 50, 8, 0.95);
  for (double v : fc.point) REQUIRE(std::isfinite(v));
  for (int i = 0; i < 8; ++i) {
    REQUIRE(fc.lower[i] <= fc.point[i]);
    REQUIRE(fc.point[i] <= fc.upper[i]);
  }
}
