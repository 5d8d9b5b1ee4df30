#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace promocast::optim {

struct NelderMeadOptions {
  int max_evals = 0;           // 0 -> 500 * dim
  double diameter_tol = 1e-8;  // stop when max vertex distance (inf-norm) below this
};

struct NelderMeadResult {
  std::vector<double> x;
  double fmin = std::numeric_limits<double>::infinity();
  int evals = 0;
};

/// Derivative-free simplex minimizer (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5). Deterministic given x0 and steps.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const std::vector<double>& step,
                                    NelderMeadOptions opts = {}) {
  const std::size_t n = x0.size();
  const int max_evals = opts.max_evals > 0 ? opts.max_evals : static_cast<int>(500 * n);
  NelderMeadResult out;
  if (n == 0) {
    out.x = x0;
    out.fmin = f(x0);
    out.evals = 1;
    return out;
  }

  std::vector<std::vector<double>> verts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) {
    verts[i + 1][i] += (step[i] != 0.0 ? step[i] : 0.1);
  }
  std::vector<double> fv(n + 1);
  int evals = 0;
  for (std::size_t i = 0; i <= n; ++i) fv[i] = (++evals, f(verts[i]));

  auto diameter = [&]() {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::fabs(verts[i][j] - verts[0][j]));
    return d;
  };

  while (evals < max_evals) {
    // order vertices by function value
    std::vector<std::size_t> idx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> vs(n + 1);
    std::vector<double> fs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      vs[i] = verts[idx[i]];
      fs[i] = fv[idx[i]];
    }
    verts.swap(vs);
    fv.swap(fs);

    if (diameter() < opts.diameter_tol) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += verts[i][j] / static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + coef * (verts[n][j] - centroid[j]);
      return p;
    };

    const auto xr = blend(-1.0);
    const double fr = (++evals, f(xr));
    if (fr < fv[0]) {
      const auto xe = blend(-2.0);
      const double fe = (++evals, f(xe));
      if (fe < fr) {
        verts[n] = xe;
        fv[n] = fe;
      } else {
        verts[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      verts[n] = xr;
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      const auto xc = blend(outside ? -0.5 : 0.5);
      const double fc = (++evals, f(xc));
      if (fc < std::min(fr, fv[n])) {
        verts[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) verts[i][j] = verts[0][j] + 0.5 * (verts[i][j] - verts[0][j]);
          fv[i] = (++evals, f(verts[i]));
          if (evals >= max_evals) break;
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (fv[i] < fv[best]) best = i;
  out.x = verts[best];
  out.fmin = fv[best];
  out.evals = evals;
  return out;
}

/// Golden-section minimum of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi,
                             double tol = 1e-6) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace promocast::optim
