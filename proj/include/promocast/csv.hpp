#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/stats.hpp"

namespace promocast {

inline constexpr const char* kPortfolioHeader = "skul_id,week,demand,price,promo_type";

/// Writes the portfolio CSV schema: rows grouped by skul_id, sorted by week,
/// LF endings, '.' decimals. Doubles use shortest round-trip formatting so
/// identical inputs give byte-identical files.
inline void write_portfolio(const std::string& path, const std::vector<SkulSeries>& portfolio) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << kPortfolioHeader << "\n";
  for (const auto& s : portfolio) {
    for (std::size_t i = 0; i < s.length(); ++i) {
      out << s.id << ',' << (i + 1) << ',' << stats::format_double(s.demand[i]) << ','
          << stats::format_double(s.price[i]) << ',' << s.promo_type[i] << "\n";
    }
  }
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

/// Reads and validates a portfolio CSV. Weeks must be 1..T per SKUL and rows
/// grouped by skul_id.
inline std::vector<SkulSeries> read_portfolio(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::IoError, "'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPortfolioHeader)
    fail(ErrorCode::IoError, "'" + path + "' has unexpected header '" + line + "'");

  std::vector<SkulSeries> portfolio;
  SkulSeries* cur = nullptr;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string, 5> field;
    std::size_t start = 0, fi = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (fi >= 5) fail(ErrorCode::IoError, path + ":" + std::to_string(line_no) + ": too many fields");
        field[fi++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (fi != 5) fail(ErrorCode::IoError, path + ":" + std::to_string(line_no) + ": expected 5 fields");

    if (cur == nullptr || cur->id != field[0]) {
      for (const auto& s : portfolio)
        if (s.id == field[0])
          fail(ErrorCode::IoError,
               path + ":" + std::to_string(line_no) + ": skul_id '" + field[0] + "' not contiguous");
      portfolio.emplace_back();
      cur = &portfolio.back();
      cur->id = field[0];
    }
    std::size_t pos = 0;
    long week = 0;
    double demand = 0, price = 0;
    long promo = 0;
    try {
      week = std::stol(field[1], &pos);
      demand = std::stod(field[2]);
      price = std::stod(field[3]);
      promo = std::stol(field[4]);
    } catch (const std::exception&) {
      fail(ErrorCode::IoError, path + ":" + std::to_string(line_no) + ": malformed number");
    }
    if (week != static_cast<long>(cur->length()) + 1)
      fail(ErrorCode::IoError,
           path + ":" + std::to_string(line_no) + ": weeks must run 1..T per skul");
    cur->demand.push_back(demand);
    cur->price.push_back(price);
    cur->promo_type.push_back(static_cast<int>(promo));
  }
  for (auto& s : portfolio) s = validate_series(std::move(s));
  return portfolio;
}

}  // namespace promocast
