// promocast CLI: generate synthetic portfolios, forecast a single SKUL,
// and run the full benchmark protocol.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "promocast/csv.hpp"
#include "promocast/datagen.hpp"
#include "promocast/evalharness.hpp"
#include "promocast/forecaster.hpp"
#include "promocast/version.hpp"

namespace {

using namespace promocast;

std::vector<std::string> split_models(const std::string& arg) {
  std::vector<std::string> out;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_gen(int low, int moderate, int high, std::uint64_t seed, const std::string& output) {
  const auto portfolio = datagen::gen_portfolio(low, moderate, high, seed);
  write_portfolio(output, portfolio);
  std::map<metrics::CovCategory, int> counts;
  for (const auto& s : portfolio) counts[metrics::categorize(metrics::cov(s.demand))] += 1;
  std::cout << "wrote " << portfolio.size() << " SKULs to " << output << "\n"
            << "realized categories: low=" << counts[metrics::CovCategory::Low]
            << " moderate=" << counts[metrics::CovCategory::Moderate]
            << " high=" << counts[metrics::CovCategory::High] << "\n";
  return 0;
}

int cmd_forecast(const std::string& input, const std::string& skul, const std::string& model_name,
                 int horizon, double level, std::size_t train_len, const std::string& output) {
  const auto portfolio = read_portfolio(input);
  const SkulSeries* series = nullptr;
  for (const auto& s : portfolio)
    if (s.id == skul) series = &s;
  if (!series) fail(ErrorCode::UnknownSkul, "no SKUL '" + skul + "' in " + input);
  if (train_len + horizon > series->length())
    fail(ErrorCode::TrainLenOutOfRange, "train_len + horizon exceeds series length");

  auto model = make_forecaster(model_name);
  const auto split = split_train_test(*series, train_len);
  model->fit(split.train);
  const auto fc = model->forecast(*series, train_len, horizon, level);

  nlohmann::json j{{"skul", skul},          {"model", model_name}, {"horizon", horizon},
                   {"level", level},        {"train_len", train_len},
                   {"point", fc.point},     {"lower", fc.lower},   {"upper", fc.upper},
                   {"sigma", fc.sigma},     {"params", model->params()}};
  const std::string text = j.dump(2) + "\n";
  if (output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + output + "'");
    out << text;
  }
  return 0;
}

int cmd_benchmark(const std::string& input, std::vector<std::string> models,
                  const std::string& out_dir, const evalharness::EvalOptions& opts,
                  std::uint64_t seed) {
  const auto portfolio = read_portfolio(input);
  if (models.empty()) models = model_names();
  for (const auto& m : models) make_forecaster(m);  // validate names up front
  for (const auto& s : portfolio)
    if (s.length() < opts.train_len + static_cast<std::size_t>(opts.horizon))
      fail(ErrorCode::TrainLenOutOfRange,
           "series '" + s.id + "' is shorter than train_len + horizon");

  const auto report = evalharness::evaluate_portfolio(models, portfolio, opts);
  evalharness::emit_report(report, out_dir);

  nlohmann::json exclusions = nlohmann::json::object();
  for (std::size_t m = 0; m < models.size(); ++m) exclusions[models[m]] = report.exclusions(m);
  const auto counts = report.category_counts();
  nlohmann::json manifest{
      {"version", kVersion},
      {"seed", seed},
      {"input", input},
      {"models", models},
      {"train_len", opts.train_len},
      {"horizon", opts.horizon},
      {"level", opts.level},
      {"fixed_origin", opts.fixed_origin},
      {"skuls", portfolio.size()},
      {"category_counts",
       {{"low", counts.count(metrics::CovCategory::Low) ? counts.at(metrics::CovCategory::Low) : 0},
        {"moderate",
         counts.count(metrics::CovCategory::Moderate) ? counts.at(metrics::CovCategory::Moderate) : 0},
        {"high",
         counts.count(metrics::CovCategory::High) ? counts.at(metrics::CovCategory::High) : 0}}},
      {"exclusions", exclusions}};
  {
    std::ofstream out(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write manifest.json");
    out << manifest.dump(2) << "\n";
  }

  std::cout << "model";
  for (const char* col : {"low", "moderate", "high", "total", "excluded"}) std::cout << '\t' << col;
  std::cout << "\n";
  for (std::size_t m = 0; m < models.size(); ++m) {
    std::cout << models[m];
    for (auto cat : {metrics::CovCategory::Low, metrics::CovCategory::Moderate,
                     metrics::CovCategory::High})
      std::cout << '\t' << report.category_mean(m, cat);
    std::cout << '\t' << report.total_mean(m) << '\t' << report.exclusions(m) << "\n";
  }
  std::cout << "reports written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecasting suite for promotion-driven volatile retail demand"};
  app.set_help_flag("--help", "print help");  // -h is the forecast horizon
  app.set_version_flag("--version", promocast::kVersion);
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic SKUL portfolio CSV");
  int low = 0, moderate = 0, high = 0;
  std::uint64_t seed = 0;
  std::string gen_out = "portfolio.csv";
  gen->add_option("--low", low, "SKULs with CoV <= 0.5");
  gen->add_option("--moderate", moderate, "SKULs with 0.5 < CoV <= 1");
  gen->add_option("--high", high, "SKULs with CoV > 1");
  gen->add_option("--seed", seed, "master seed")->required();
  gen->add_option("-o,--output", gen_out, "output CSV path");

  // forecast
  auto* fc = app.add_subcommand("forecast", "fit one model on one SKUL and emit JSON forecasts");
  std::string fc_in, fc_skul, fc_model, fc_out;
  int horizon = 8;
  double level = 0.95;
  std::size_t train_len = 104;
  fc->add_option("-i,--input", fc_in, "portfolio CSV")->required();
  fc->add_option("--skul", fc_skul, "SKUL id")->required();
  fc->add_option("--model", fc_model, "model name")->required();
  fc->add_option("-h,--horizon", horizon, "forecast horizon");
  fc->add_option("--level", level, "interval coverage in (0,1)");
  fc->add_option("--train-len", train_len, "weeks used for fitting");
  fc->add_option("-o,--output", fc_out, "write JSON here instead of stdout");

  // benchmark
  auto* bm = app.add_subcommand("benchmark", "rolling-origin evaluation over a portfolio");
  std::string bm_in, bm_models, bm_out = "reports";
  evalharness::EvalOptions opts;
  std::uint64_t bm_seed = 0;
  bm->add_option("-i,--input", bm_in, "portfolio CSV")->required();
  bm->add_option("--models", bm_models, "comma-separated model list (default: all)");
  bm->add_option("-o,--output", bm_out, "report directory");
  bm->add_option("--train-len", opts.train_len, "training window length");
  bm->add_option("-h,--horizon", opts.horizon, "test horizon");
  bm->add_option("--level", opts.level, "interval coverage");
  bm->add_option("--jobs", opts.jobs, "worker pool size (default: cores)");
  bm->add_option("--seed", bm_seed, "seed recorded in the manifest");
  bm->add_flag("--fixed-origin", opts.fixed_origin, "single 8-step path instead of rolling origin");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(low, moderate, high, seed, gen_out);
    if (fc->parsed()) return cmd_forecast(fc_in, fc_skul, fc_model, horizon, level, train_len, fc_out);
    if (bm->parsed()) return cmd_benchmark(bm_in, split_models(bm_models), bm_out, opts, bm_seed);
  } catch (const promocast::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return (e.code() == promocast::ErrorCode::UnknownModel ||
            e.code() == promocast::ErrorCode::UnknownSkul)
               ? 2
               : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
