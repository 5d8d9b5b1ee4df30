#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/optim.hpp"
#include "promocast/smallmat.hpp"
#include "promocast/stats.hpp"

namespace promocast::arima {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct ArimaSpec {
  int p = 0;
  int d = 0;
  int q = 0;
  bool include_mean = true;
};

/// A fitted ARIMA(p,d,q) (optionally with one covariate, i.e. regression
/// with ARMA errors on the differenced scale). mu is the mean of the
/// d-times differenced series; the training data are retained so forecasts
/// and rolling state updates can re-run the filter with frozen parameters.
struct ArimaFit {
  ArimaSpec spec;
  std::vector<double> phi;             // AR coefficients
  std::vector<double> theta;           // MA coefficients, convention e_t + theta_1 e_{t-1} + ...
  double mu = 0.0;                     // mean of the differenced series (0 if absent)
  std::optional<double> beta;          // covariate coefficient
  double sigma2 = 0.0;                 // innovation variance
  double loglik = 0.0;
  double aicc = 0.0;
  std::vector<double> residuals;       // one-step innovations (NaN where y is missing)
  std::vector<double> y;               // training series (may contain NaN)
  std::vector<double> x;               // training covariate, empty if none
};

namespace detail {

/// Levinson-Durbin map from partial autocorrelations in (-1,1) (tanh of the
/// raw parameters) to a stationary AR coefficient vector.
inline std::vector<double> pacf_to_ar(std::span<const double> raw) {
  const std::size_t p = raw.size();
  std::vector<double> cur(p), work(p);
  for (std::size_t j = 0; j < p; ++j) cur[j] = work[j] = std::tanh(raw[j]);
  for (std::size_t j = 1; j < p; ++j) {
    const double a = cur[j];
    for (std::size_t k = 0; k < j; ++k) work[k] -= a * cur[j - k - 1];
    std::copy(work.begin(), work.begin() + j, cur.begin());
  }
  return cur;
}

/// Inverse of pacf_to_ar for a stationary coefficient vector.
inline std::vector<double> ar_to_raw(std::span<const double> ar) {
  const std::size_t p = ar.size();
  std::vector<double> cur(ar.begin(), ar.end()), work(cur);
  for (std::size_t j = p; j-- > 1;) {
    const double a = cur[j];
    for (std::size_t k = 0; k < j; ++k) work[k] = (cur[k] + a * cur[j - k - 1]) / (1.0 - a * a);
    std::copy(work.begin(), work.begin() + j, cur.begin());
  }
  for (std::size_t j = 0; j < p; ++j) cur[j] = std::atanh(std::clamp(cur[j], -0.999999, 0.999999));
  return cur;
}

/// Harvey-form state space for ARMA(p,q) on the d-th difference:
///   state = [ARMA block (r = max(p, q+1)) | y_{t-1} ... y_{t-d}]
///   Z = [1 0 ... 0 | delta_1 ... delta_d],  R = [1 theta_1 ... theta_q 0 ...]
/// where delta holds the coefficients of y_t = sum delta_i y_{t-i} + z_t,
/// z_t the d-th difference. Innovations enter the ARMA block only.
struct ArmaStateSpace {
  int p = 0, q = 0, d = 0, r = 1, rd = 1;
  std::vector<double> phi, theta, delta;

  void configure(std::vector<double> phi_in, std::vector<double> theta_in, int d_in) {
    phi = std::move(phi_in);
    theta = std::move(theta_in);
    d = d_in;
    p = static_cast<int>(phi.size());
    q = static_cast<int>(theta.size());
    r = std::max(p, q + 1);
    rd = r + d;
    // delta: (1-B)^d expansion, y_t = sum_{i=1..d} delta_i y_{t-i} + z_t
    delta.assign(d, 0.0);
    std::vector<double> poly(1, 1.0);  // coefficients of (1-B)^d
    for (int k = 0; k < d; ++k) {
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t i = 0; i < poly.size(); ++i) {
        next[i] += poly[i];
        next[i + 1] -= poly[i];
      }
      poly = std::move(next);
    }
    for (int i = 1; i <= d; ++i) delta[i - 1] = -poly[i];
  }

  // out = T * in
  void apply_transition(const double* in, double* out) const {
    for (int i = 0; i < r; ++i) {
      double v = (i < p) ? phi[i] * in[0] : 0.0;
      if (i + 1 < r) v += in[i + 1];
      out[i] = v;
    }
    if (d > 0) {
      double top = in[0];
      for (int i = 0; i < d; ++i) top += delta[i] * in[r + i];
      for (int i = d - 1; i >= 1; --i) out[r + i] = in[r + i - 1];
      out[r] = top;
    }
  }

  // out = T' * in
  void apply_transition_t(const double* in, double* out) const {
    std::vector<double> tmp(rd, 0.0);
    double head = 0.0;
    for (int i = 0; i < p; ++i) head += phi[i] * in[i];
    if (d > 0) head += in[r];
    tmp[0] = head;
    for (int i = 0; i + 1 < r; ++i) tmp[i + 1] += in[i];
    for (int i = 0; i < d; ++i) {
      double v = delta[i] * ((d > 0) ? in[r] : 0.0);
      if (i + 1 < d) v += in[r + i + 1];
      tmp[r + i] = v;
    }
    std::copy(tmp.begin(), tmp.end(), out);
  }

  double observe(const double* state) const {
    double v = state[0];
    for (int i = 0; i < d; ++i) v += delta[i] * state[r + i];
    return v;
  }

  // m = S * Z'
  void cov_times_zt(const double* s, double* m) const {
    for (int i = 0; i < rd; ++i) {
      double v = s[i * rd + 0];
      for (int j = 0; j < d; ++j) v += delta[j] * s[i * rd + (r + j)];
      m[i] = v;
    }
  }

  // S = T P T' + R R'   (R R' only touches the leading (q+1)^2 block)
  void predict_cov(const std::vector<double>& pmat, std::vector<double>& smat,
                   std::vector<double>& scratch) const {
    scratch.resize(rd * rd);
    smat.resize(rd * rd);
    std::vector<double> colin(rd), colout(rd);
    for (int j = 0; j < rd; ++j) {  // scratch = T * P, column by column
      for (int i = 0; i < rd; ++i) colin[i] = pmat[i * rd + j];
      apply_transition(colin.data(), colout.data());
      for (int i = 0; i < rd; ++i) scratch[i * rd + j] = colout[i];
    }
    for (int i = 0; i < rd; ++i) {  // smat = scratch * T', row by row
      apply_transition(scratch.data() + i * rd, colout.data());
      for (int j = 0; j < rd; ++j) smat[i * rd + j] = colout[j];
    }
    for (int i = 0; i <= q; ++i) {
      const double ri = (i == 0) ? 1.0 : theta[i - 1];
      for (int j = 0; j <= q; ++j) {
        const double rj = (j == 0) ? 1.0 : theta[j - 1];
        smat[i * rd + j] += ri * rj;
      }
    }
  }

  /// Stationary covariance of the ARMA block (sigma^2 = 1 units) via the
  /// discrete Lyapunov equation, vec(P) = (I - T (x) T)^{-1} vec(R R').
  std::vector<double> stationary_cov() const {
    const int m = r;
    std::vector<double> tmat(m * m, 0.0);
    for (int i = 0; i < m; ++i) {
      if (i < p) tmat[i * m + 0] = phi[i];
      if (i + 1 < m) tmat[i * m + (i + 1)] = 1.0;
    }
    const int mm = m * m;
    std::vector<double> amat(mm * mm, 0.0), bvec(mm, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const int row = i * m + j;
        for (int k = 0; k < m; ++k)
          for (int l = 0; l < m; ++l)
            amat[row * mm + (k * m + l)] = (i == k && j == l ? 1.0 : 0.0) - tmat[i * m + k] * tmat[j * m + l];
        const double ri = (i == 0) ? 1.0 : (i - 1 < q ? theta[i - 1] : 0.0);
        const double rj = (j == 0) ? 1.0 : (j - 1 < q ? theta[j - 1] : 0.0);
        bvec[row] = ri * rj;
      }
    return smallmat::solve_linear(std::move(amat), std::move(bvec));
  }
};

struct FilterStats {
  double ssq = 0.0;
  double sumlog = 0.0;
  int nu = 0;
  bool ok = true;
};

/// Kalman filter over w (NaN = missing). Diffuse difference states get
/// variance kappa; the likelihood conditions on the first d observed
/// steps (the ones that resolve the diffuse states), so likelihoods are
/// comparable across (p,q) cells at fixed d.
class ArmaFilter {
public:
  ArmaFilter(const ArmaStateSpace& ss, double kappa = 1e6) : ss_(ss) {
    const int rd = ss.rd, r = ss.r;
    a_.assign(rd, 0.0);
    p_.assign(rd * rd, 0.0);
    const auto q0 = ss.stationary_cov();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) p_[i * rd + j] = q0[i * r + j];
    for (int i = r; i < rd; ++i) p_[i * rd + i] = kappa;
  }

  struct Step {
    double pred = 0.0;  // one-step signal prediction Z x_t
    double fvar = 0.0;  // innovation variance (sigma^2 = 1 units)
    double resid = std::numeric_limits<double>::quiet_NaN();
    bool observed = false;
  };

  /// Advance one step; w NaN means no measurement update.
  Step step(double w) {
    const int rd = ss_.rd;
    x_.resize(rd);
    ss_.apply_transition(a_.data(), x_.data());
    ss_.predict_cov(p_, s_, scratch_);
    Step out;
    out.pred = ss_.observe(x_.data());
    m_.resize(rd);
    ss_.cov_times_zt(s_.data(), m_.data());
    double f = m_[0];
    for (int j = 0; j < ss_.d; ++j) f += ss_.delta[j] * m_[ss_.r + j];
    out.fvar = f;
    if (std::isnan(w)) {
      a_ = x_;
      p_ = s_;
      return out;
    }
    out.observed = true;
    out.resid = w - out.pred;
    if (!(f > 0.0) || !std::isfinite(f)) {
      ok_ = false;
      return out;
    }
    observed_count_ += 1;
    if (observed_count_ > ss_.d) {
      stats_.ssq += out.resid * out.resid / f;
      stats_.sumlog += std::log(f);
      stats_.nu += 1;
    }
    const double scale = out.resid / f;
    for (int i = 0; i < rd; ++i) a_[i] = x_[i] + m_[i] * scale;
    for (int i = 0; i < rd; ++i)
      for (int j = 0; j < rd; ++j) p_[i * rd + j] = s_[i * rd + j] - m_[i] * m_[j] / f;
    return out;
  }

  const FilterStats& stats() const { return stats_; }
  bool healthy() const { return ok_; }
  const std::vector<double>& state_mean() const { return a_; }
  const std::vector<double>& state_cov() const { return p_; }
  const std::vector<double>& predicted_mean() const { return x_; }
  const std::vector<double>& predicted_cov() const { return s_; }

private:
  const ArmaStateSpace& ss_;
  std::vector<double> a_, p_, x_, s_, m_, scratch_;
  FilterStats stats_;
  int observed_count_ = 0;
  bool ok_ = true;
};

/// Negative profile log-likelihood, 0.5 * (log(ssq/nu) + sumlog/nu).
inline double neg_profile_loglik(const ArmaStateSpace& ss, std::span<const double> w) {
  ArmaFilter filter(ss);
  for (double v : w) {
    filter.step(v);
    if (!filter.healthy()) return std::numeric_limits<double>::infinity();
  }
  const auto& st = filter.stats();
  if (st.nu <= 0 || !(st.ssq > 0.0)) return std::numeric_limits<double>::infinity();
  return 0.5 * (std::log(st.ssq / st.nu) + st.sumlog / st.nu);
}

/// Mean regressor with Delta^d g = 1 (t is 1-based): 1, t, t^2/2.
inline double mean_regressor(int d, std::size_t t) {
  switch (d) {
    case 0: return 1.0;
    case 1: return static_cast<double>(t);
    default: return 0.5 * static_cast<double>(t) * static_cast<double>(t);
  }
}

/// d-th difference with NaN propagation; output aligned to input index
/// (first d entries NaN).
inline std::vector<double> difference(std::span<const double> v, int d) {
  std::vector<double> out(v.begin(), v.end());
  for (int k = 0; k < d; ++k) {
    for (std::size_t t = out.size(); t-- > 1;) out[t] -= out[t - 1];
    if (!out.empty()) out[0] = kMissing;
  }
  return out;
}

/// Sample PACF of a (possibly gappy) series via Levinson-Durbin on the
/// sample ACF of complete pairs; used only to seed the optimizer.
inline std::vector<double> seed_pacf(std::span<const double> v, int p) {
  if (p == 0) return {};
  std::vector<double> acf(p + 1, 0.0);
  std::vector<int> cnt(p + 1, 0);
  double m = 0.0;
  int n = 0;
  for (double x : v)
    if (!std::isnan(x)) {
      m += x;
      ++n;
    }
  if (n < p + 2) return std::vector<double>(p, 0.0);
  m /= n;
  for (int lag = 0; lag <= p; ++lag)
    for (std::size_t t = lag; t < v.size(); ++t) {
      if (std::isnan(v[t]) || std::isnan(v[t - lag])) continue;
      acf[lag] += (v[t] - m) * (v[t - lag] - m);
      cnt[lag] += 1;
    }
  if (cnt[0] == 0 || acf[0] <= 0.0) return std::vector<double>(p, 0.0);
  for (int lag = 1; lag <= p; ++lag) acf[lag] = cnt[lag] > 0 ? acf[lag] / acf[0] : 0.0;
  acf[0] = 1.0;
  // Levinson-Durbin, collecting the reflection coefficients
  std::vector<double> pacf(p, 0.0), a(p + 1, 0.0), prev(p + 1, 0.0);
  double err = 1.0;
  for (int k = 1; k <= p; ++k) {
    double acc = acf[k];
    for (int j = 1; j < k; ++j) acc -= a[j] * acf[k - j];
    double refl = err > 1e-12 ? acc / err : 0.0;
    refl = std::clamp(refl, -0.95, 0.95);
    pacf[k - 1] = refl;
    prev = a;
    a[k] = refl;
    for (int j = 1; j < k; ++j) a[j] = prev[j] - refl * prev[k - j];
    err *= (1.0 - refl * refl);
  }
  return pacf;
}

/// Smallest root modulus of 1 - c_1 z - ... - c_k z^k (Durand-Kerner).
/// Returns +inf when the polynomial is constant.
inline double min_root_modulus(std::span<const double> coeffs) {
  std::size_t deg = coeffs.size();
  while (deg > 0 && std::fabs(coeffs[deg - 1]) < 1e-10) --deg;
  if (deg == 0) return std::numeric_limits<double>::infinity();
  std::vector<std::complex<double>> a(deg + 1);
  a[0] = 1.0;
  for (std::size_t i = 1; i <= deg; ++i) a[i] = -coeffs[i - 1];
  auto eval = [&](std::complex<double> z) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = a.size(); i-- > 0;) acc = acc * z + a[i];
    return acc;
  };
  std::vector<std::complex<double>> roots(deg);
  const std::complex<double> base(0.4, 0.9);
  std::complex<double> pw = 1.0;
  for (auto& r : roots) r = (pw *= base);
  for (int iter = 0; iter < 200; ++iter) {
    double shift = 0.0;
    for (std::size_t i = 0; i < deg; ++i) {
      std::complex<double> denom = a[deg];
      for (std::size_t j = 0; j < deg; ++j)
        if (j != i) denom *= roots[i] - roots[j];
      const std::complex<double> delta = eval(roots[i]) / denom;
      roots[i] -= delta;
      shift = std::max(shift, std::abs(delta));
    }
    if (shift < 1e-12) break;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : roots) best = std::min(best, std::abs(r));
  return best;
}

/// All roots of 1 - sum c_i z^i, for the common-factor check.
inline std::vector<std::complex<double>> poly_roots(std::span<const double> coeffs) {
  std::size_t deg = coeffs.size();
  while (deg > 0 && std::fabs(coeffs[deg - 1]) < 1e-10) --deg;
  std::vector<std::complex<double>> a(deg + 1);
  a[0] = 1.0;
  for (std::size_t i = 1; i <= deg; ++i) a[i] = -coeffs[i - 1];
  std::vector<std::complex<double>> roots(deg);
  if (deg == 0) return roots;
  auto eval = [&](std::complex<double> z) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = a.size(); i-- > 0;) acc = acc * z + a[i];
    return acc;
  };
  const std::complex<double> base(0.4, 0.9);
  std::complex<double> pw = 1.0;
  for (auto& r : roots) r = (pw *= base);
  for (int iter = 0; iter < 200; ++iter) {
    double shift = 0.0;
    for (std::size_t i = 0; i < deg; ++i) {
      std::complex<double> denom = a[deg];
      for (std::size_t j = 0; j < deg; ++j)
        if (j != i) denom *= roots[i] - roots[j];
      const std::complex<double> delta = eval(roots[i]) / denom;
      roots[i] -= delta;
      shift = std::max(shift, std::abs(delta));
    }
    if (shift < 1e-12) break;
  }
  return roots;
}

/// Degenerate-optimum guards for grid selection. Near-unit-circle AR roots
/// are always out (that non-stationarity belongs to d); near-unit MA roots
/// are out only at d = 0, since differencing a stationary series
/// legitimately parks an MA root at one. A near-cancelling AR/MA root pair
/// is the common-factor ridge and is also out.
inline bool roots_admissible(const ArimaFit& fit, double margin = 1.02) {
  std::vector<double> ma(fit.theta.size());
  for (std::size_t j = 0; j < ma.size(); ++j) ma[j] = -fit.theta[j];
  const auto ar_roots = poly_roots(fit.phi);
  const auto ma_roots = poly_roots(ma);
  for (const auto& r : ar_roots)
    if (std::abs(r) <= margin) return false;
  if (fit.spec.d == 0) {
    for (const auto& r : ma_roots)
      if (std::abs(r) <= margin) return false;
  }
  for (const auto& ar : ar_roots)
    for (const auto& mr : ma_roots)
      if (std::abs(ar - mr) < 0.1) return false;
  return true;
}

struct ParamPack {
  int p, q, nreg;
  // layout: [p raw AR | q raw MA | nreg regression coefficients]
  std::vector<double> unpack_phi(std::span<const double> v) const {
    return pacf_to_ar(v.subspan(0, p));
  }
  std::vector<double> unpack_theta(std::span<const double> v) const {
    auto th = pacf_to_ar(v.subspan(p, q));
    for (double& t : th) t = -t;  // 1 + sum theta_j B^j invertible by construction
    return th;
  }
  std::vector<double> unpack_reg(std::span<const double> v) const {
    return {v.begin() + p + q, v.end()};
  }
};

}  // namespace detail

/// Gaussian MLE of an ARIMA(p,d,q) with optional covariate. Initialization:
/// regression by OLS on the differenced scale, AR seeds from the sample
/// PACF, then conditional-sum-of-squares refinement, then full state-space
/// ML by Nelder-Mead in the unconstrained (PACF-transformed) space.
inline ArimaFit fit_arima(const std::vector<double>& y, ArimaSpec spec,
                          const std::vector<double>* x = nullptr) {
  using namespace detail;
  const int p = spec.p, d = spec.d, q = spec.q;
  const std::size_t n = y.size();
  if (p < 0 || q < 0 || d < 0 || d > 2) fail(ErrorCode::InvalidConfig, "bad ARIMA order");
  // degenerate (0,d,0) models are just a (differenced) mean and fit tiny series
  const std::size_t min_len = p + q > 0 ? static_cast<std::size_t>(p + q + d + 5)
                                        : static_cast<std::size_t>(d + 3);
  if (n < min_len) fail(ErrorCode::SeriesTooShort, "need length >= p+q+d+5");
  if (x && x->size() != n) fail(ErrorCode::LengthMismatch, "covariate length != series length");

  // regression columns on the original scale
  std::vector<std::vector<double>> cols;
  if (spec.include_mean) {
    std::vector<double> g(n);
    for (std::size_t t = 0; t < n; ++t) g[t] = mean_regressor(d, t + 1);
    cols.push_back(std::move(g));
  }
  if (x) cols.push_back(*x);
  const int nreg = static_cast<int>(cols.size());

  // initial regression coefficients from OLS on the differenced scale
  std::vector<double> reg0(nreg, 0.0);
  const auto yd = difference(y, d);
  if (nreg > 0) {
    std::vector<std::vector<double>> dcols(nreg);
    for (int j = 0; j < nreg; ++j) dcols[j] = difference(cols[j], d);
    std::vector<std::vector<double>> cc(nreg);
    std::vector<double> yy;
    for (std::size_t t = d; t < n; ++t) {
      if (std::isnan(yd[t])) continue;
      bool anynan = false;
      for (int j = 0; j < nreg; ++j) anynan = anynan || std::isnan(dcols[j][t]);
      if (anynan) continue;
      for (int j = 0; j < nreg; ++j) cc[j].push_back(dcols[j][t]);
      yy.push_back(yd[t]);
    }
    if (yy.size() < static_cast<std::size_t>(nreg))
      fail(ErrorCode::SeriesTooShort, "too few complete observations for regression");
    reg0 = smallmat::ols(cc, yy);  // throws SingularRegression on collinearity
  }

  auto build_w = [&](std::span<const double> reg) {
    std::vector<double> w(y);
    for (std::size_t t = 0; t < n; ++t) {
      if (std::isnan(w[t])) continue;
      for (int j = 0; j < nreg; ++j) w[t] -= reg[j] * cols[j][t];
    }
    return w;
  };

  const ParamPack pack{p, q, nreg};
  std::vector<double> init(p + q + nreg, 0.0);
  {
    // AR seeds from the PACF of the regression-adjusted differenced series
    auto e0 = difference(build_w(reg0), d);
    const auto pac = seed_pacf(e0, p);
    for (int i = 0; i < p; ++i) init[i] = std::atanh(pac[i]);
    for (int j = 0; j < nreg; ++j) init[p + q + j] = reg0[j];
  }

  const bool has_missing = std::any_of(y.begin(), y.end(), [](double v) { return std::isnan(v); });

  // conditional-sum-of-squares refinement (complete series only)
  if (!has_missing && p + q + nreg > 0) {
    auto css = [&](const std::vector<double>& v) {
      const auto phi = pack.unpack_phi(v);
      const auto theta = pack.unpack_theta(v);
      const auto reg = pack.unpack_reg(v);
      const auto u = difference(build_w(reg), d);
      std::vector<double> e(n, 0.0);
      double ssq = 0.0;
      int cnt = 0;
      for (std::size_t t = d + p; t < n; ++t) {
        double v2 = u[t];
        for (int i = 0; i < p; ++i) v2 -= phi[i] * u[t - 1 - i];
        for (int j = 0; j < q && static_cast<std::size_t>(j) < t; ++j) v2 -= theta[j] * e[t - 1 - j];
        e[t] = v2;
        ssq += v2 * v2;
        ++cnt;
      }
      if (cnt == 0 || !std::isfinite(ssq)) return std::numeric_limits<double>::infinity();
      return 0.5 * std::log(ssq / cnt);
    };
    std::vector<double> steps(init.size(), 0.1);
    auto res = optim::nelder_mead(css, init, steps,
                                  {static_cast<int>(200 * init.size()), 1e-7});
    if (std::isfinite(res.fmin)) init = res.x;
  }

  // full ML
  ArmaStateSpace ss;
  auto objective = [&](const std::vector<double>& v) {
    ss.configure(pack.unpack_phi(v), pack.unpack_theta(v), d);
    return neg_profile_loglik(ss, build_w(pack.unpack_reg(v)));
  };
  std::vector<double> opt = init;
  if (!init.empty()) {
    std::vector<double> steps(init.size(), 0.1);
    optim::NelderMeadOptions nm{static_cast<int>(500 * init.size()), 1e-8};
    auto res = optim::nelder_mead(objective, init, steps, nm);
    opt = res.x;
    if (!std::isfinite(res.fmin))
      fail(ErrorCode::NonInvertibleOptimum, "likelihood not finite at optimum");
  }

  ArimaFit fit;
  fit.spec = spec;
  fit.phi = pack.unpack_phi(opt);
  fit.theta = pack.unpack_theta(opt);
  const auto reg = pack.unpack_reg(opt);
  int ri = 0;
  if (spec.include_mean) fit.mu = reg[ri++];
  if (x) fit.beta = reg[ri++];
  fit.y = y;
  if (x) fit.x = *x;

  ss.configure(fit.phi, fit.theta, d);
  ArmaFilter filter(ss);
  fit.residuals.assign(n, kMissing);
  const auto w = build_w(reg);
  for (std::size_t t = 0; t < n; ++t) {
    const auto st = filter.step(w[t]);
    if (st.observed) fit.residuals[t] = st.resid;
  }
  if (!filter.healthy()) fail(ErrorCode::NonInvertibleOptimum, "degenerate innovation variance");
  const auto& st = filter.stats();
  if (st.nu <= 0) fail(ErrorCode::SeriesTooShort, "no likelihood-contributing observations");
  fit.sigma2 = st.ssq / st.nu;
  fit.loglik = -0.5 * (st.nu * (std::log(2.0 * M_PI) + 1.0 + std::log(st.ssq / st.nu)) + st.sumlog);
  const double k = p + q + nreg + 1;  // including sigma^2
  const double neff = st.nu;
  fit.aicc = (neff - k - 1.0 > 0.0)
                 ? -2.0 * fit.loglik + 2.0 * k + 2.0 * k * (k + 1.0) / (neff - k - 1.0)
                 : std::numeric_limits<double>::infinity();
  return fit;
}

/// Grid selection by AICc. d is chosen first (smallest d such that one more
/// difference does not reduce the variance), then all (p,q) cells are fit
/// and the minimal AICc wins; ties resolve to smaller p+q, then smaller p.
inline ArimaFit select_arima(const std::vector<double>& y, const std::vector<double>* x = nullptr,
                             int max_p = 3, int max_q = 3, int max_d = 2) {
  using namespace detail;
  if (max_p < 0 || max_q < 0 || max_d < 0) fail(ErrorCode::InvalidConfig, "negative grid bound");

  auto diff_var = [&](int d) {
    const auto v = difference(y, d);
    std::vector<double> ok;
    for (std::size_t t = d; t < v.size(); ++t)
      if (!std::isnan(v[t])) ok.push_back(v[t]);
    if (ok.size() < 2) return std::numeric_limits<double>::infinity();
    return stats::sample_var(ok);
  };
  int d = max_d;
  for (int cand = 0; cand < max_d; ++cand) {
    if (diff_var(cand + 1) >= diff_var(cand)) {
      d = cand;
      break;
    }
  }

  // Models within 2 AICc units are conventionally equivalent, so the tie
  // break (smaller p+q, then smaller p) applies across that band. The grid
  // is walked in tie-break order, so the first fit inside the band wins.
  constexpr double kAiccTie = 2.0;
  std::vector<ArimaFit> fits;
  double best_aicc = std::numeric_limits<double>::infinity();
  std::exception_ptr last_error;
  for (int sum = 0; sum <= max_p + max_q; ++sum) {
    for (int p = 0; p <= std::min(sum, max_p); ++p) {
      const int q = sum - p;
      if (q > max_q) continue;
      ArimaSpec spec{p, d, q, d == 0};
      try {
        ArimaFit fit = fit_arima(y, spec, x);
        if (!detail::roots_admissible(fit)) continue;  // degenerate optimum
        best_aicc = std::min(best_aicc, fit.aicc);
        fits.push_back(std::move(fit));
      } catch (const Error&) {
        last_error = std::current_exception();
      }
    }
  }
  if (fits.empty()) {
    if (last_error) std::rethrow_exception(last_error);
    fail(ErrorCode::ModelFitFailure, "every ARIMA grid cell failed");
  }
  for (auto& fit : fits)
    if (fit.aicc <= best_aicc + kAiccTie) return std::move(fit);
  return std::move(fits.front());  // unreachable
}

/// Forecast from the end of an arbitrary data prefix filtered with the
/// fit's frozen parameters. y_data may contain NaN; x_data must accompany
/// it when the fit has a covariate.
inline ForecastResult forecast_with_state(const ArimaFit& fit, std::span<const double> y_data,
                                          std::span<const double> x_data, int h,
                                          const std::vector<double>* x_future, double level) {
  using namespace detail;
  if (h < 1) fail(ErrorCode::InvalidConfig, "horizon must be >= 1");
  if (fit.beta.has_value()) {
    if (!x_future || static_cast<int>(x_future->size()) < h)
      fail(ErrorCode::MissingFutureCovariate, "fit has a covariate; provide h future values");
    if (x_data.size() != y_data.size())
      fail(ErrorCode::MissingFutureCovariate, "covariate prefix must accompany the series");
  } else if (x_future) {
    fail(ErrorCode::MissingFutureCovariate, "fit has no covariate but x_future was given");
  }

  const std::size_t n = y_data.size();
  const int d = fit.spec.d;
  auto reg_at = [&](std::size_t t_1based, double xval) {
    double v = 0.0;
    if (fit.spec.include_mean) v += fit.mu * mean_regressor(d, t_1based);
    if (fit.beta) v += *fit.beta * xval;
    return v;
  };

  ArmaStateSpace ss;
  ss.configure(fit.phi, fit.theta, d);
  ArmaFilter filter(ss);
  for (std::size_t t = 0; t < n; ++t) {
    const double w =
        std::isnan(y_data[t]) ? kMissing : y_data[t] - reg_at(t + 1, fit.beta ? x_data[t] : 0.0);
    filter.step(w);
  }

  const double z = stats::normal_quantile(0.5 * (1.0 + level));
  ForecastResult out;
  out.level = level;
  out.point.resize(h);
  out.lower.resize(h);
  out.upper.resize(h);
  out.sigma.resize(h);
  for (int i = 0; i < h; ++i) {
    const auto st = filter.step(kMissing);  // pure prediction
    const double xf = fit.beta ? (*x_future)[i] : 0.0;
    out.point[i] = st.pred + reg_at(n + 1 + i, xf);
    out.sigma[i] = std::sqrt(std::max(0.0, fit.sigma2 * st.fvar));
    out.lower[i] = out.point[i] - z * out.sigma[i];
    out.upper[i] = out.point[i] + z * out.sigma[i];
  }
  return out;
}

inline ForecastResult forecast_arima(const ArimaFit& fit, int h,
                                     const std::vector<double>* x_future = nullptr,
                                     double level = 0.95) {
  return forecast_with_state(fit, fit.y, fit.x, h, x_future, level);
}

/// Smoothed signal estimate Z a-hat_t for every t of the fit's training
/// data (Durbin-Koopman fixed-interval smoother). Missing weeks get their
/// smoothed estimate; observed weeks reproduce the Kalman smoother's
/// signal estimate of the observation.
inline std::vector<double> smooth_signal(const ArimaFit& fit) {
  using namespace detail;
  const std::size_t n = fit.y.size();
  const int d = fit.spec.d;
  ArmaStateSpace ss;
  ss.configure(fit.phi, fit.theta, d);
  const int rd = ss.rd;

  auto reg_at = [&](std::size_t t_1based) {
    double v = 0.0;
    if (fit.spec.include_mean) v += fit.mu * mean_regressor(d, t_1based);
    if (fit.beta) v += *fit.beta * fit.x[t_1based - 1];
    return v;
  };

  std::vector<std::vector<double>> xs(n), ss_cov(n);
  std::vector<double> vs(n, 0.0), fs(n, 1.0);
  std::vector<bool> obs(n, false);
  ArmaFilter filter(ss);
  for (std::size_t t = 0; t < n; ++t) {
    const double w = std::isnan(fit.y[t]) ? kMissing : fit.y[t] - reg_at(t + 1);
    const auto st = filter.step(w);
    xs[t] = filter.predicted_mean();
    ss_cov[t] = filter.predicted_cov();
    obs[t] = st.observed;
    vs[t] = st.resid;
    fs[t] = st.fvar;
  }

  std::vector<double> rvec(rd, 0.0), tmp(rd), kvec(rd), mvec(rd), rnext(rd);
  std::vector<double> smoothed(n, 0.0);
  for (std::size_t t = n; t-- > 0;) {
    if (obs[t] && fs[t] > 0.0 && std::isfinite(fs[t])) {
      ss.cov_times_zt(ss_cov[t].data(), mvec.data());      // M = S Z'
      ss.apply_transition(mvec.data(), kvec.data());       // K = T M / F
      for (int i = 0; i < rd; ++i) kvec[i] /= fs[t];
      double kr = 0.0;
      for (int i = 0; i < rd; ++i) kr += kvec[i] * rvec[i];
      ss.apply_transition_t(rvec.data(), rnext.data());    // T' r
      const double wgt = vs[t] / fs[t] - kr;
      rnext[0] += wgt;
      for (int j = 0; j < ss.d; ++j) rnext[ss.r + j] += ss.delta[j] * wgt;
    } else {
      ss.apply_transition_t(rvec.data(), rnext.data());
    }
    rvec = rnext;
    // alpha-hat_t = x_t + S_t r_{t-1}; smoothed signal = Z alpha-hat + regression
    for (int i = 0; i < rd; ++i) {
      double s = 0.0;
      for (int j = 0; j < rd; ++j) s += ss_cov[t][i * rd + j] * rvec[j];
      tmp[i] = xs[t][i] + s;
    }
    smoothed[t] = ss.observe(tmp.data()) + reg_at(t + 1);
  }
  return smoothed;
}

}  // namespace promocast::arima
