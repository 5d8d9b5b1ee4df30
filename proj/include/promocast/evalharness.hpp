#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/forecaster.hpp"
#include "promocast/metrics.hpp"
#include "promocast/stats.hpp"

namespace promocast::evalharness {

struct EvalOptions {
  std::size_t train_len = 104;
  int horizon = 8;
  double level = 0.95;
  bool fixed_origin = false;  // single 8-step path instead of rolled one-steps
  int jobs = 0;               // worker pool size, 0 = hardware concurrency
};

struct CellResult {
  double mase = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string error;
};

/// Everything behind Table 2 / Table 3 / the scatter plot: per-cell MASE,
/// per-category means, totals, Welch p-values and exclusion counts.
/// cells[m][s] pairs models[m] with skul index s.
struct EvaluationReport {
  std::vector<std::string> models;
  std::vector<std::string> skul_ids;
  std::vector<metrics::CovCategory> skul_category;  // by training-window CoV
  std::vector<double> skul_cov;
  std::vector<std::vector<CellResult>> cells;

  std::map<metrics::CovCategory, int> category_counts() const {
    std::map<metrics::CovCategory, int> counts;
    for (auto c : skul_category) counts[c] += 1;
    return counts;
  }

  /// Mean MASE of one model over the valid cells of one category.
  double category_mean(std::size_t m, metrics::CovCategory cat, int* n_valid = nullptr) const {
    double sum = 0.0;
    int n = 0;
    for (std::size_t s = 0; s < skul_ids.size(); ++s) {
      if (skul_category[s] != cat || cells[m][s].failed) continue;
      sum += cells[m][s].mase;
      ++n;
    }
    if (n_valid) *n_valid = n;
    return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
  }

  /// Count-weighted mean of the category means (identical to the unweighted
  /// per-SKUL mean in exact arithmetic; this form keeps the aggregation
  /// identity bit-exact).
  double total_mean(std::size_t m) const {
    using metrics::CovCategory;
    double acc = 0.0;
    int n = 0;
    for (CovCategory cat : {CovCategory::Low, CovCategory::Moderate, CovCategory::High}) {
      int nc = 0;
      const double mc = category_mean(m, cat, &nc);
      if (nc > 0) {
        acc += nc * mc;
        n += nc;
      }
    }
    return n > 0 ? acc / n : std::numeric_limits<double>::quiet_NaN();
  }

  int exclusions(std::size_t m) const {
    int n = 0;
    for (const auto& cell : cells[m]) n += cell.failed ? 1 : 0;
    return n;
  }

  /// Welch p-value comparing one model's per-SKUL MASE between two categories.
  double pvalue(std::size_t m, metrics::CovCategory a, metrics::CovCategory b) const {
    std::vector<double> ga, gb;
    for (std::size_t s = 0; s < skul_ids.size(); ++s) {
      if (cells[m][s].failed) continue;
      if (skul_category[s] == a) ga.push_back(cells[m][s].mase);
      if (skul_category[s] == b) gb.push_back(cells[m][s].mase);
    }
    if (ga.size() < 2 || gb.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return metrics::welch_p(ga, gb);
  }
};

/// Rolling-origin evaluation of one fitted model on one series: parameters
/// frozen after fitting on the first train_len weeks; for each test week
/// the origin advances, state updates with the newly observed demand, and a
/// one-step forecast is scored. MASE uses the training-set denominator.
inline double rolling_origin_eval(Forecaster& model, const SkulSeries& s, const EvalOptions& opts) {
  const std::size_t t_len = s.length();
  if (opts.train_len < 20 || opts.train_len + opts.horizon > t_len)
    fail(ErrorCode::TrainLenOutOfRange, "need train >= 20 and train + horizon <= T");
  const auto split = split_train_test(s, opts.train_len);
  model.fit(split.train);

  std::vector<double> forecasts(opts.horizon);
  if (opts.fixed_origin) {
    const auto f = model.forecast(s, opts.train_len, opts.horizon, opts.level);
    forecasts = f.point;
  } else {
    for (int i = 0; i < opts.horizon; ++i) {
      const auto f = model.forecast(s, opts.train_len + i, 1, opts.level);
      forecasts[i] = f.point[0];
    }
  }
  std::vector<double> actual(s.demand.begin() + opts.train_len,
                             s.demand.begin() + opts.train_len + opts.horizon);
  return metrics::mase(actual, forecasts, split.train.demand);
}

using ForecasterFactory = std::function<std::unique_ptr<Forecaster>(const std::string&)>;

/// Fits and scores every (model, SKUL) cell on a bounded worker pool.
/// Cells are independent; results land in preassigned slots so the outcome
/// is independent of scheduling order. Per-cell failures are recorded, not
/// fatal.
inline EvaluationReport evaluate_portfolio(const std::vector<std::string>& models,
                                           const std::vector<SkulSeries>& portfolio,
                                           const EvalOptions& opts,
                                           const ForecasterFactory& factory) {
  if (portfolio.empty()) fail(ErrorCode::InvalidConfig, "empty portfolio");
  EvaluationReport report;
  report.models = models;
  for (const auto& s : portfolio) {
    report.skul_ids.push_back(s.id);
    std::vector<double> train_demand(s.demand.begin(), s.demand.begin() + opts.train_len);
    const double c = metrics::cov(train_demand);
    report.skul_cov.push_back(c);
    report.skul_category.push_back(metrics::categorize(c));
  }
  report.cells.assign(models.size(), std::vector<CellResult>(portfolio.size()));

  const std::size_t n_cells = models.size() * portfolio.size();
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t cell = next.fetch_add(1);
      if (cell >= n_cells) return;
      const std::size_t m = cell / portfolio.size();
      const std::size_t s = cell % portfolio.size();
      CellResult& slot = report.cells[m][s];
      try {
        auto model = factory(models[m]);
        slot.mase = rolling_origin_eval(*model, portfolio[s], opts);
      } catch (const std::exception& e) {
        slot.failed = true;
        slot.error = e.what();
      }
    }
  };

  int jobs = opts.jobs > 0 ? opts.jobs : static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  jobs = std::min<std::size_t>(jobs, n_cells);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return report;
}

inline EvaluationReport evaluate_portfolio(const std::vector<std::string>& models,
                                           const std::vector<SkulSeries>& portfolio,
                                           const EvalOptions& opts = {}) {
  return evaluate_portfolio(models, portfolio, opts,
                            [](const std::string& name) { return make_forecaster(name); });
}

namespace detail {

inline std::string fmt_cell(double v) {
  if (std::isnan(v)) return "nan";
  return stats::format_double(v);
}

}  // namespace detail

/// table2.csv (per-category and total mean MASE), table3.csv (pairwise
/// Welch p-values) and scatter.csv (per-cell CoV vs MASE). Deterministic
/// bytes for a given report.
inline void emit_report(const EvaluationReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  using metrics::CovCategory;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create '" + out_dir + "': " + ec.message());

  {
    std::ofstream out(fs::path(out_dir) / "table2.csv", std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write table2.csv");
    out << "model,mase_low,mase_moderate,mase_high,mase_total\n";
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      out << report.models[m] << ',' << detail::fmt_cell(report.category_mean(m, CovCategory::Low))
          << ',' << detail::fmt_cell(report.category_mean(m, CovCategory::Moderate)) << ','
          << detail::fmt_cell(report.category_mean(m, CovCategory::High)) << ','
          << detail::fmt_cell(report.total_mean(m)) << "\n";
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "table3.csv", std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write table3.csv");
    out << "model,category_a,category_b,p_value\n";
    const std::pair<CovCategory, CovCategory> pairs[] = {
        {CovCategory::Low, CovCategory::Moderate},
        {CovCategory::Low, CovCategory::High},
        {CovCategory::Moderate, CovCategory::High}};
    for (std::size_t m = 0; m < report.models.size(); ++m)
      for (const auto& [a, b] : pairs)
        out << report.models[m] << ',' << metrics::to_string(a) << ',' << metrics::to_string(b)
            << ',' << detail::fmt_cell(report.pvalue(m, a, b)) << "\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / "scatter.csv", std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write scatter.csv");
    out << "skul_id,model,cov,mase\n";
    for (std::size_t s = 0; s < report.skul_ids.size(); ++s)
      for (std::size_t m = 0; m < report.models.size(); ++m) {
        if (report.cells[m][s].failed) continue;
        out << report.skul_ids[s] << ',' << report.models[m] << ','
            << stats::format_double(report.skul_cov[s]) << ','
            << stats::format_double(report.cells[m][s].mase) << "\n";
      }
  }
}

}  // namespace promocast::evalharness
