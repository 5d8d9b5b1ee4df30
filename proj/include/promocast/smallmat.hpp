#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "promocast/errors.hpp"

namespace promocast::smallmat {

/// Gaussian elimination with partial pivoting; A is n x n row-major.
/// Meant for the tiny systems in this library (n <= ~32).
inline std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (std::fabs(a[piv * n + col]) < 1e-12)
      fail(ErrorCode::SingularRegression, "singular linear system");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return x;
}

/// OLS coefficients of y on columns (no implicit intercept; add a ones
/// column if one is wanted). Normal equations are fine at these sizes.
inline std::vector<double> ols(const std::vector<std::vector<double>>& columns,
                               const std::vector<double>& y) {
  const std::size_t k = columns.size();
  const std::size_t n = y.size();
  std::vector<double> xtx(k * k, 0.0), xty(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += columns[i][t] * columns[j][t];
      xtx[i * k + j] = xtx[j * k + i] = s;
    }
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) s += columns[i][t] * y[t];
    xty[i] = s;
  }
  return solve_linear(std::move(xtx), std::move(xty));
}

}  // namespace promocast::smallmat
