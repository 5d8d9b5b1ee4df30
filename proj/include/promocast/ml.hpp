#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "promocast/core.hpp"
#include "promocast/errors.hpp"
#include "promocast/rng.hpp"

namespace promocast::ml {

/// Rows for t = L+1..T, strictly causal: [log price_t, log demand lags
/// t-1..t-L], target log demand at t.
struct FeatureMatrix {
  int lags = 0;
  std::vector<std::vector<double>> rows;
  std::vector<double> target;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return rows.empty() ? 0 : rows.front().size(); }
};

inline FeatureMatrix build_features(const SkulSeries& s, int lags) {
  if (lags < 1) fail(ErrorCode::InvalidConfig, "lags must be >= 1");
  const std::size_t t_len = s.length();
  if (t_len <= static_cast<std::size_t>(lags) + 1)
    fail(ErrorCode::SeriesTooShort, "build_features needs T > L + 1");
  FeatureMatrix fm;
  fm.lags = lags;
  for (std::size_t t = lags; t < t_len; ++t) {
    std::vector<double> row;
    row.reserve(lags + 1);
    row.push_back(std::log(s.price[t]));
    for (int j = 1; j <= lags; ++j) row.push_back(std::log(s.demand[t - j]));
    fm.rows.push_back(std::move(row));
    fm.target.push_back(std::log(s.demand[t]));
  }
  return fm;
}

struct MinMax {
  double lo = 0.0;
  double hi = 1.0;
  double scale(double v) const { return (v - lo) / (hi - lo); }
  double unscale(double u) const { return lo + u * (hi - lo); }
};

inline std::pair<std::vector<double>, MinMax> minmax_scale(std::span<const double> column) {
  MinMax mm{column.front(), column.front()};
  for (double v : column) {
    mm.lo = std::min(mm.lo, v);
    mm.hi = std::max(mm.hi, v);
  }
  if (!(mm.hi > mm.lo)) fail(ErrorCode::ConstantColumn, "minmax_scale needs max > min");
  std::vector<double> scaled(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) scaled[i] = mm.scale(column[i]);
  return {std::move(scaled), mm};
}

/// Min-max parameters that tolerate a constant column by centering it at
/// 0.5 (a unit-wide window around the value).
inline MinMax fit_minmax_tolerant(std::span<const double> column) {
  MinMax mm{column.front(), column.front()};
  for (double v : column) {
    mm.lo = std::min(mm.lo, v);
    mm.hi = std::max(mm.hi, v);
  }
  if (!(mm.hi > mm.lo)) {
    mm.lo -= 0.5;
    mm.hi += 0.5;
  }
  return mm;
}

/// Per-feature-column min-max parameters learned on training rows only.
struct ColumnScaler {
  std::vector<MinMax> cols;

  static ColumnScaler fit(const std::vector<std::vector<double>>& rows) {
    ColumnScaler sc;
    const std::size_t k = rows.front().size();
    sc.cols.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> col(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = rows[i][j];
      sc.cols[j] = fit_minmax_tolerant(col);
    }
    return sc;
  }

  std::vector<double> apply(std::span<const double> row) const {
    if (row.size() != cols.size()) fail(ErrorCode::SchemaMismatch, "feature width mismatch");
    std::vector<double> out(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) out[j] = cols[j].scale(row[j]);
    return out;
  }
};

// ---------------------------------------------------------------------------
// SVR (epsilon-insensitive, RBF kernel, SMO solver)
// ---------------------------------------------------------------------------

struct SvrModel {
  double gamma = 0.1;
  double c_penalty = 1.0;
  double epsilon = 0.1;
  std::vector<double> support_coefs;               // beta_i = alpha_i - alpha_i^*
  std::vector<std::vector<double>> support_vectors;  // scaled feature rows
  double bias = 0.0;
  ColumnScaler scaler;

  double predict(std::span<const double> raw_features) const {
    const auto u = scaler.apply(raw_features);
    double acc = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        const double d = support_vectors[i][j] - u[j];
        d2 += d * d;
      }
      acc += support_coefs[i] * std::exp(-gamma * d2);
    }
    return acc;
  }
};

namespace detail {

/// SMO on the 2n-variable epsilon-SVR dual (maximal violating pair
/// selection, LIBSVM-style). Variables s < n are alpha_i (sign +1),
/// s >= n are alpha_i^* (sign -1); box [0, C], constraint sum beta = 0.
struct SmoResult {
  std::vector<double> beta;
  double bias = 0.0;
  double kkt_violation = 0.0;
  int iterations = 0;
};

inline SmoResult solve_svr_dual(const std::vector<double>& kmat, std::size_t n,
                                std::span<const double> target, double c_penalty, double epsilon,
                                double tol = 1e-3, int max_iter = 10000) {
  const std::size_t m = 2 * n;
  std::vector<double> lambda(m, 0.0), grad(m);
  auto sign = [n](std::size_t s) { return s < n ? 1.0 : -1.0; };
  auto row = [n](std::size_t s) { return s < n ? s : s - n; };
  for (std::size_t s = 0; s < m; ++s) grad[s] = epsilon - sign(s) * target[row(s)];

  // A variable moves along sign(s) * delta, so set membership depends on
  // the sign: I_up can push the prediction up, I_down can pull it down.
  auto in_up = [&](std::size_t s) {
    return sign(s) > 0.0 ? lambda[s] < c_penalty : lambda[s] > 0.0;
  };
  auto in_down = [&](std::size_t s) {
    return sign(s) > 0.0 ? lambda[s] > 0.0 : lambda[s] < c_penalty;
  };
  auto select = [&](std::size_t& imax, std::size_t& imin, double& gmax, double& gmin) {
    gmax = -std::numeric_limits<double>::infinity();
    gmin = std::numeric_limits<double>::infinity();
    imax = imin = m;
    for (std::size_t s = 0; s < m; ++s) {
      const double v = -sign(s) * grad[s];
      if (in_up(s) && v > gmax) {
        gmax = v;
        imax = s;
      }
      if (in_down(s) && v < gmin) {
        gmin = v;
        imin = s;
      }
    }
  };

  SmoResult out;
  out.beta.assign(n, 0.0);
  int it = 0;
  std::size_t imax = m, imin = m;
  double gmax = 0.0, gmin = 0.0;
  for (; it < max_iter; ++it) {
    select(imax, imin, gmax, gmin);
    if (imax == m || imin == m || gmax - gmin < tol) break;

    const std::size_t i = imax, j = imin;
    const double yi = sign(i), yj = sign(j);
    const std::size_t ri = row(i), rj = row(j);
    double curv = kmat[ri * n + ri] + kmat[rj * n + rj] - 2.0 * kmat[ri * n + rj];
    if (curv < 1e-12) curv = 1e-12;
    // feasible step along (y_i, -y_j), clipped by both boxes
    double delta = (gmax - gmin) / curv;
    delta = std::min(delta, yi > 0.0 ? c_penalty - lambda[i] : lambda[i]);
    delta = std::min(delta, yj > 0.0 ? lambda[j] : c_penalty - lambda[j]);
    if (delta <= 0.0) break;
    lambda[i] += yi * delta;
    lambda[j] -= yj * delta;
    for (std::size_t s = 0; s < m; ++s) {
      const std::size_t rs = row(s);
      grad[s] += sign(s) * delta * (kmat[rs * n + ri] - kmat[rs * n + rj]);
    }
  }
  select(imax, imin, gmax, gmin);
  out.iterations = it;
  out.kkt_violation =
      (imax == m || imin == m) ? 0.0 : std::max(0.0, gmax - gmin);
  for (std::size_t k = 0; k < n; ++k) out.beta[k] = lambda[k] - lambda[k + n];
  // bias sits in the KKT band [gmax, gmin]
  if (std::isfinite(gmax) && std::isfinite(gmin))
    out.bias = 0.5 * (gmax + gmin);
  else if (std::isfinite(gmax))
    out.bias = gmax;
  else if (std::isfinite(gmin))
    out.bias = gmin;
  return out;
}

inline std::vector<double> squared_distances(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < rows[i].size(); ++k) {
        const double d = rows[i][k] - rows[j][k];
        acc += d * d;
      }
      d2[i * n + j] = d2[j * n + i] = acc;
    }
  return d2;
}

}  // namespace detail

/// Fits the epsilon-insensitive dual by SMO over min-max-scaled features
/// with kernel exp(-gamma ||u - v||^2). Targets are used on their original
/// scale (the constant-within-tube degenerate case must stay inside the
/// tube, which rescaling would break).
inline SvrModel fit_svr(const FeatureMatrix& fm, double gamma, double c_penalty, double epsilon) {
  if (fm.n_rows() < 5) fail(ErrorCode::TooFewRows, "fit_svr needs >= 5 rows");
  if (!(gamma > 0.0) || !(c_penalty > 0.0) || epsilon < 0.0)
    fail(ErrorCode::InvalidConfig, "need gamma > 0, C > 0, epsilon >= 0");
  SvrModel model;
  model.gamma = gamma;
  model.c_penalty = c_penalty;
  model.epsilon = epsilon;
  model.scaler = ColumnScaler::fit(fm.rows);
  std::vector<std::vector<double>> scaled(fm.n_rows());
  for (std::size_t i = 0; i < fm.n_rows(); ++i) scaled[i] = model.scaler.apply(fm.rows[i]);

  const std::size_t n = scaled.size();
  auto kmat = detail::squared_distances(scaled);
  for (double& v : kmat) v = std::exp(-gamma * v);

  // converged means KKT violation < 1e-3; the final model is polished well
  // past that so the solution is row-order independent
  const auto sol = detail::solve_svr_dual(kmat, n, fm.target, c_penalty, epsilon, 1e-8);
  if (sol.kkt_violation >= 1e-3)
    fail(ErrorCode::NoConvergence, "SMO iteration cap reached before convergence");
  model.bias = sol.bias;
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.beta[i] != 0.0) {
      model.support_coefs.push_back(sol.beta[i]);
      model.support_vectors.push_back(scaled[i]);
    }
  }
  return model;
}

/// The paper's grid: gamma 0..1 in steps of 0.1 (0 mapped to 0.001) and
/// C 1..100, 1100 candidates total.
inline std::vector<std::pair<double, double>> svr_grid() {
  std::vector<std::pair<double, double>> grid;
  grid.reserve(1100);
  for (int gi = 0; gi <= 10; ++gi) {
    const double gamma = gi == 0 ? 0.001 : gi * 0.1;
    for (int c = 1; c <= 100; ++c) grid.emplace_back(gamma, static_cast<double>(c));
  }
  return grid;
}

/// Blocked time-ordered 5-fold cross-validation over the 1100-cell grid;
/// epsilon fixed at 0.1. Deterministic: ties keep the earlier cell.
/// cv_mse, when given, receives one CV score per svr_grid() cell (NaN for
/// cells whose folds all failed).
inline SvrModel grid_search_svr(const FeatureMatrix& fm, std::vector<double>* cv_mse = nullptr) {
  if (fm.n_rows() < 20) fail(ErrorCode::TooFewRows, "grid_search_svr needs >= 20 rows");
  constexpr double kEpsilon = 0.1;
  constexpr int kFolds = 5;
  const std::size_t n = fm.n_rows();

  struct Fold {
    FeatureMatrix train;
    std::vector<std::vector<double>> val_rows;
    std::vector<double> val_target;
  };
  std::vector<Fold> folds(kFolds);
  for (int f = 0; f < kFolds; ++f) {
    const std::size_t lo = n * f / kFolds, hi = n * (f + 1) / kFolds;
    Fold& fold = folds[f];
    fold.train.lags = fm.lags;
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= lo && i < hi) {
        fold.val_rows.push_back(fm.rows[i]);
        fold.val_target.push_back(fm.target[i]);
      } else {
        fold.train.rows.push_back(fm.rows[i]);
        fold.train.target.push_back(fm.target[i]);
      }
    }
  }

  // distance matrices and scalers are shared across the gamma/C sweep
  struct FoldCache {
    ColumnScaler scaler;
    std::vector<std::vector<double>> scaled_train;
    std::vector<double> d2;
  };
  std::vector<FoldCache> cache(kFolds);
  for (int f = 0; f < kFolds; ++f) {
    cache[f].scaler = ColumnScaler::fit(folds[f].train.rows);
    cache[f].scaled_train.resize(folds[f].train.rows.size());
    for (std::size_t i = 0; i < folds[f].train.rows.size(); ++i)
      cache[f].scaled_train[i] = cache[f].scaler.apply(folds[f].train.rows[i]);
    cache[f].d2 = detail::squared_distances(cache[f].scaled_train);
  }

  double best_mse = std::numeric_limits<double>::infinity();
  double best_gamma = 0.0, best_c = 0.0;
  if (cv_mse) cv_mse->clear();
  std::vector<double> kmat;
  for (const auto& [gamma, c] : svr_grid()) {
    double sse = 0.0;
    std::size_t cnt = 0;
    bool ok = true;
    for (int f = 0; f < kFolds && ok; ++f) {
      const auto& fc = cache[f];
      const std::size_t nt = fc.scaled_train.size();
      kmat.assign(fc.d2.begin(), fc.d2.end());
      for (double& v : kmat) v = std::exp(-gamma * v);
      try {
        const auto sol =
            detail::solve_svr_dual(kmat, nt, folds[f].train.target, c, kEpsilon);
        for (std::size_t i = 0; i < folds[f].val_rows.size(); ++i) {
          const auto u = fc.scaler.apply(folds[f].val_rows[i]);
          double pred = sol.bias;
          for (std::size_t s = 0; s < nt; ++s) {
            if (sol.beta[s] == 0.0) continue;
            double dd = 0.0;
            for (std::size_t k = 0; k < u.size(); ++k) {
              const double d = fc.scaled_train[s][k] - u[k];
              dd += d * d;
            }
            pred += sol.beta[s] * std::exp(-gamma * dd);
          }
          const double e = pred - folds[f].val_target[i];
          sse += e * e;
          ++cnt;
        }
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok || cnt == 0) {
      if (cv_mse) cv_mse->push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double mse = sse / static_cast<double>(cnt);
    if (cv_mse) cv_mse->push_back(mse);
    if (mse < best_mse) {
      best_mse = mse;
      best_gamma = gamma;
      best_c = c;
    }
  }
  if (!std::isfinite(best_mse)) fail(ErrorCode::NoConvergence, "every SVR grid cell failed");
  return fit_svr(fm, best_gamma, best_c, kEpsilon);
}

// ---------------------------------------------------------------------------
// ANN (one hidden layer, logistic activation, linear output)
// ---------------------------------------------------------------------------

/// Flat weight layout: w1 (inputs x hidden, row-major by hidden unit),
/// b1 (hidden), w2 (hidden), b2.
struct AnnModel {
  int inputs = 0;
  int hidden = 0;
  std::vector<double> weights;
  ColumnScaler scaler;
  MinMax target_scaler;

  static std::size_t weight_count(int inputs, int hidden) {
    return static_cast<std::size_t>(inputs) * hidden + hidden + hidden + 1;
  }

  double predict_scaled(std::span<const double> u) const {
    const double* w1 = weights.data();
    const double* b1 = w1 + static_cast<std::size_t>(inputs) * hidden;
    const double* w2 = b1 + hidden;
    const double b2 = w2[hidden];
    double acc = b2;
    for (int j = 0; j < hidden; ++j) {
      double z = b1[j];
      for (int k = 0; k < inputs; ++k) z += w1[static_cast<std::size_t>(j) * inputs + k] * u[k];
      acc += w2[j] / (1.0 + std::exp(-z));
    }
    return acc;
  }

  double predict(std::span<const double> raw_features) const {
    const auto u = scaler.apply(raw_features);
    return target_scaler.unscale(predict_scaled(u));
  }
};

namespace detail {

/// Mean squared error over scaled rows and its analytic gradient in the
/// flat weight layout.
inline double ann_loss_grad(std::span<const double> w, int inputs, int hidden,
                            const std::vector<std::vector<double>>& rows,
                            std::span<const double> targets, std::vector<double>* grad) {
  const std::size_t n = rows.size();
  const double* w1 = w.data();
  const double* b1 = w1 + static_cast<std::size_t>(inputs) * hidden;
  const double* w2 = b1 + hidden;
  const double b2 = w2[hidden];
  if (grad) grad->assign(w.size(), 0.0);
  double loss = 0.0;
  std::vector<double> act(hidden);
  for (std::size_t i = 0; i < n; ++i) {
    double pred = b2;
    for (int j = 0; j < hidden; ++j) {
      double z = b1[j];
      for (int k = 0; k < inputs; ++k) z += w1[static_cast<std::size_t>(j) * inputs + k] * rows[i][k];
      act[j] = 1.0 / (1.0 + std::exp(-z));
      pred += w2[j] * act[j];
    }
    const double err = pred - targets[i];
    loss += err * err;
    if (!grad) continue;
    const double de = 2.0 * err / static_cast<double>(n);
    double* g1 = grad->data();
    double* gb1 = g1 + static_cast<std::size_t>(inputs) * hidden;
    double* g2 = gb1 + hidden;
    g2[hidden] += de;
    for (int j = 0; j < hidden; ++j) {
      g2[j] += de * act[j];
      const double dz = de * w2[j] * act[j] * (1.0 - act[j]);
      gb1[j] += dz;
      for (int k = 0; k < inputs; ++k) g1[static_cast<std::size_t>(j) * inputs + k] += dz * rows[i][k];
    }
  }
  return loss / static_cast<double>(n);
}

}  // namespace detail

/// Full-batch gradient descent on the min-max-scaled inputs and target;
/// weights initialized uniform in [-0.5, 0.5] from the seed.
inline AnnModel fit_ann(const FeatureMatrix& fm, int hidden, int epochs, double lr,
                        std::uint64_t seed) {
  if (fm.n_rows() < 10) fail(ErrorCode::TooFewRows, "fit_ann needs >= 10 rows");
  if (hidden < 1) fail(ErrorCode::InvalidConfig, "hidden must be >= 1");
  AnnModel model;
  model.inputs = static_cast<int>(fm.n_cols());
  model.hidden = hidden;
  model.scaler = ColumnScaler::fit(fm.rows);
  model.target_scaler = fit_minmax_tolerant(fm.target);

  std::vector<std::vector<double>> rows(fm.n_rows());
  std::vector<double> targets(fm.n_rows());
  for (std::size_t i = 0; i < fm.n_rows(); ++i) {
    rows[i] = model.scaler.apply(fm.rows[i]);
    targets[i] = model.target_scaler.scale(fm.target[i]);
  }

  Rng rng(seed);
  model.weights.resize(AnnModel::weight_count(model.inputs, hidden));
  for (double& w : model.weights) w = rng.uniform(-0.5, 0.5);

  std::vector<double> grad;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double loss =
        detail::ann_loss_grad(model.weights, model.inputs, hidden, rows, targets, &grad);
    if (!std::isfinite(loss)) fail(ErrorCode::DivergedLoss, "ANN loss became non-finite");
    for (std::size_t k = 0; k < model.weights.size(); ++k) model.weights[k] -= lr * grad[k];
  }
  const double final_loss =
      detail::ann_loss_grad(model.weights, model.inputs, hidden, rows, targets, nullptr);
  if (!std::isfinite(final_loss)) fail(ErrorCode::DivergedLoss, "ANN loss became non-finite");
  return model;
}

}  // namespace promocast::ml
