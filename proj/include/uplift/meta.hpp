/*
 * Copyright 2026 The upliftkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uplift/dataset.hpp"
#include "uplift/errors.hpp"
#include "uplift/learners.hpp"
#include "uplift/parallel.hpp"
#include "uplift/random.hpp"
#include "uplift/uplift_forest.hpp"

namespace uplift {

// CATE estimators. Multiple treatments are handled as K one-vs-control
// problems; control rows are shared across arms.

enum class CateMethod { s, t, x, r, uplift_forest };

inline CateMethod parse_cate_method(const std::string& s) {
  if (s == "s") return CateMethod::s;
  if (s == "t") return CateMethod::t;
  if (s == "x") return CateMethod::x;
  if (s == "r") return CateMethod::r;
  if (s == "uplift_forest") return CateMethod::uplift_forest;
  throw ConfigError("unknown method '" + s + "'");
}

inline std::string to_string(CateMethod m) {
  switch (m) {
    case CateMethod::s: return "s";
    case CateMethod::t: return "t";
    case CateMethod::x: return "x";
    case CateMethod::r: return "r";
    case CateMethod::uplift_forest: return "uplift_forest";
  }
  return "";
}

constexpr double kDefaultPropensityClip = 0.01;

// A fitted CATE estimator. Immutable and shareable; predict_cate is safe for
// concurrent callers.
struct CateModel {
  CateMethod method = CateMethod::t;
  std::vector<std::string> arm_labels;  // size K+1, control first
  std::vector<std::string> feature_names;
  OutcomeKind outcome_kind = OutcomeKind::continuous;
  LearnerSpec base_spec;
  double propensity_clip = kDefaultPropensityClip;
  std::uint64_t seed = 0;
  Eigen::Index train_d = 0;

  // s: one model per arm on [X, indicator]
  std::vector<LearnerModel> s_models;
  // t and x stage 1
  LearnerModel mu_control;
  std::vector<LearnerModel> mu_arm;
  // x stage 2: imputed-effect models and the propensity weight g
  std::vector<LearnerModel> tau0_models;
  std::vector<LearnerModel> tau1_models;
  std::vector<LearnerModel> g_models;
  std::optional<double> g_override;
  // r: final weighted regressions
  std::vector<LearnerModel> r_models;
  // uplift forest
  std::optional<UpliftForestModel> forest;

  int num_arms() const { return static_cast<int>(arm_labels.size()) - 1; }
};

struct AteReport {
  std::string arm;
  std::string method;  // naive | ipw | cate_mean
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int bootstrap_draws = 0;
};

namespace detail {

// Outcome models (mu, m): binary outcomes route a ridge base to logistic so
// predictions are probabilities and effects are risk differences.
inline LearnerModel fit_outcome_model(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const LearnerSpec& base,
                                      OutcomeKind kind, std::uint64_t seed) {
  switch (base.kind) {
    case LearnerKind::ridge:
      if (kind == OutcomeKind::binary) return fit_logistic(X, y, base);
      return fit_ridge(X, y, base.ridge_lambda);
    case LearnerKind::logistic:
      if (kind != OutcomeKind::binary)
        throw FitError("logistic base requires a binary outcome");
      return fit_logistic(X, y, base);
    case LearnerKind::regression_forest:
      return fit_regression_forest(X, y, base, seed);
  }
  throw FitError("unreachable learner kind");
}

// Effect models (imputed effects, pseudo-outcomes): targets are unbounded,
// so this is always a regression regardless of the outcome kind.
inline LearnerModel fit_effect_model(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& target,
                                     const Eigen::VectorXd& weights,
                                     const LearnerSpec& base,
                                     std::uint64_t seed) {
  if (base.kind == LearnerKind::regression_forest)
    return fit_regression_forest_weighted(X, target, weights, base, seed);
  return fit_ridge_weighted(X, target, weights, base.ridge_lambda);
}

inline Eigen::VectorXd indicator(const std::vector<int>& treatment, int arm) {
  Eigen::VectorXd w01(static_cast<Eigen::Index>(treatment.size()));
  for (std::size_t i = 0; i < treatment.size(); ++i)
    w01[static_cast<Eigen::Index>(i)] = treatment[i] == arm ? 1.0 : 0.0;
  return w01;
}

inline Eigen::MatrixXd rows_of(const ExperimentFrame& f,
                               const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), f.d());
  for (std::size_t i = 0; i < rows.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = f.features.row(rows[i]);
  return X;
}

inline Eigen::VectorXd outcomes_of(const ExperimentFrame& f,
                                   const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y[static_cast<Eigen::Index>(i)] =
      f.outcome[rows[i]];
  return y;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Propensity
// ---------------------------------------------------------------------------

// Logistic fit of 1{W=arm} on the features over a frame restricted to
// {arm, control}; outputs clipped to [eps, 1-eps]. A provided propensity
// column takes precedence and is returned clipped.
inline Eigen::VectorXd estimate_propensity(const ExperimentFrame& frame,
                                           int arm,
                                           double eps = kDefaultPropensityClip) {
  if (!(eps > 0.0 && eps < 0.5))
    throw ConfigError("propensity clip must lie in (0, 0.5)");
  Eigen::Index n_arm = 0, n_ctl = 0;
  for (const int w : frame.treatment) {
    if (w == arm)
      ++n_arm;
    else if (w == 0)
      ++n_ctl;
    else
      throw PropensityError(
          "estimate_propensity expects a frame restricted to {arm, control}");
  }
  if (n_arm == 0 || n_ctl == 0)
    throw PropensityError("degenerate arm: both groups must be nonempty");

  if (frame.propensity)
    return frame.propensity->unaryExpr(
        [eps](double e) { return std::clamp(e, eps, 1.0 - eps); });

  const LearnerModel fit =
      fit_logistic(frame.features, detail::indicator(frame.treatment, arm));
  return predict(fit, frame.features).unaryExpr([eps](double e) {
    return std::clamp(e, eps, 1.0 - eps);
  });
}

// ---------------------------------------------------------------------------
// Meta-learner fitters
// ---------------------------------------------------------------------------

namespace detail {

inline void init_cate_model(CateModel& m, const ExperimentFrame& frame,
                            CateMethod method, const LearnerSpec& base,
                            std::uint64_t seed) {
  validate_frame(frame);
  validate_spec(base);
  m.method = method;
  m.arm_labels = frame.arm_labels;
  m.feature_names = frame.feature_names;
  m.outcome_kind = frame.outcome_kind;
  m.base_spec = base;
  m.seed = seed;
  m.train_d = frame.d();
}

}  // namespace detail

// S-learner: per arm k, one outcome model on [X, 1{W=k}] over the
// {arm, control} rows; tau_k(x) = mu(x,1) - mu(x,0).
inline CateModel fit_s(const ExperimentFrame& frame, const LearnerSpec& base,
                       std::uint64_t seed) {
  CateModel m;
  detail::init_cate_model(m, frame, CateMethod::s, base, seed);
  for (int k = 1; k <= frame.num_arms(); ++k) {
    const ArmSlice slice = restrict_to_arm(frame, k);
    const Eigen::Index ns = slice.frame.n();
    Eigen::MatrixXd design(ns, frame.d() + 1);
    design.leftCols(frame.d()) = slice.frame.features;
    design.col(frame.d()) = detail::indicator(slice.frame.treatment, 1);
    m.s_models.push_back(detail::fit_outcome_model(
        design, slice.frame.outcome, base, frame.outcome_kind,
        derive_seed(seed, 100 + static_cast<std::uint64_t>(k))));
  }
  return m;
}

// T-learner: mu_k on arm rows, mu_0 on control rows; tau_k = mu_k - mu_0.
inline CateModel fit_t(const ExperimentFrame& frame, const LearnerSpec& base,
                       std::uint64_t seed) {
  CateModel m;
  detail::init_cate_model(m, frame, CateMethod::t, base, seed);
  const auto control_rows = frame.arm_rows(0);
  m.mu_control = detail::fit_outcome_model(
      detail::rows_of(frame, control_rows),
      detail::outcomes_of(frame, control_rows), base, frame.outcome_kind,
      derive_seed(seed, 200));
  for (int k = 1; k <= frame.num_arms(); ++k) {
    const auto arm_rows = frame.arm_rows(k);
    m.mu_arm.push_back(detail::fit_outcome_model(
        detail::rows_of(frame, arm_rows), detail::outcomes_of(frame, arm_rows),
        base, frame.outcome_kind,
        derive_seed(seed, 200 + static_cast<std::uint64_t>(k))));
  }
  return m;
}

// X-learner: stage 1 as in T; stage 2 regresses the imputed effects
// D1 = Y - mu_0(X) on arm rows and D0 = mu_k(X) - Y on control rows; the
// combination weight g(x) is a fitted propensity model (clipped), or a
// caller-supplied constant used as-is.
inline CateModel fit_x(const ExperimentFrame& frame, const LearnerSpec& base,
                       std::uint64_t seed,
                       std::optional<double> g_override = std::nullopt,
                       double eps = kDefaultPropensityClip) {
  if (!(eps > 0.0 && eps < 0.5))
    throw ConfigError("propensity clip must lie in (0, 0.5)");
  if (g_override && !(*g_override >= 0.0 && *g_override <= 1.0))
    throw ConfigError("g override must lie in [0, 1]");
  CateModel m;
  detail::init_cate_model(m, frame, CateMethod::x, base, seed);
  m.propensity_clip = eps;
  m.g_override = g_override;

  const auto control_rows = frame.arm_rows(0);
  const Eigen::MatrixXd Xc = detail::rows_of(frame, control_rows);
  const Eigen::VectorXd yc = detail::outcomes_of(frame, control_rows);
  m.mu_control = detail::fit_outcome_model(Xc, yc, base, frame.outcome_kind,
                                           derive_seed(seed, 200));

  for (int k = 1; k <= frame.num_arms(); ++k) {
    const auto arm_rows = frame.arm_rows(k);
    const Eigen::MatrixXd Xa = detail::rows_of(frame, arm_rows);
    const Eigen::VectorXd ya = detail::outcomes_of(frame, arm_rows);
    m.mu_arm.push_back(detail::fit_outcome_model(
        Xa, ya, base, frame.outcome_kind,
        derive_seed(seed, 200 + static_cast<std::uint64_t>(k))));

    const Eigen::VectorXd d1 = ya - predict(m.mu_control, Xa);
    const Eigen::VectorXd d0 = predict(m.mu_arm.back(), Xc) - yc;
    m.tau1_models.push_back(detail::fit_effect_model(
        Xa, d1, Eigen::VectorXd::Ones(Xa.rows()), base,
        derive_seed(seed, 300 + static_cast<std::uint64_t>(k))));
    m.tau0_models.push_back(detail::fit_effect_model(
        Xc, d0, Eigen::VectorXd::Ones(Xc.rows()), base,
        derive_seed(seed, 400 + static_cast<std::uint64_t>(k))));

    if (!g_override) {
      const ArmSlice slice = restrict_to_arm(frame, k);
      m.g_models.push_back(fit_logistic(
          slice.frame.features, detail::indicator(slice.frame.treatment, 1)));
    }
  }
  return m;
}

// Options for fit_r; the constants exist so tests can inject exact nuisances.
struct RNuisance {
  std::optional<double> m_const;
  std::optional<double> e_const;
};

// R-learner: per arm on {arm, control} rows, cross-fit m(x) = E[Y|X] and the
// propensity e(x) with 2 folds, form psi = (Y - m)/(W - e) and weights
// omega = (W - e)^2, then fit tau_k by weighted regression of psi on X.
// Clipping makes |W - e| >= eps, so the division is always defined.
inline CateModel fit_r(const ExperimentFrame& frame, const LearnerSpec& base,
                       std::uint64_t seed, const RNuisance& nuisance = {},
                       double eps = kDefaultPropensityClip) {
  if (!(eps > 0.0 && eps < 0.5))
    throw ConfigError("propensity clip must lie in (0, 0.5)");
  if (nuisance.e_const && !(*nuisance.e_const > 0.0 && *nuisance.e_const < 1.0))
    throw ConfigError("injected propensity must lie in (0, 1)");
  CateModel m;
  detail::init_cate_model(m, frame, CateMethod::r, base, seed);
  m.propensity_clip = eps;

  for (int k = 1; k <= frame.num_arms(); ++k) {
    const ArmSlice slice = restrict_to_arm(frame, k);
    const ExperimentFrame& sf = slice.frame;
    const Eigen::Index ns = sf.n();
    const Eigen::VectorXd w01 = detail::indicator(sf.treatment, 1);

    // 2-fold assignment by seeded shuffle
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(ns));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(derive_seed(seed, 500 + static_cast<std::uint64_t>(k)));
    for (std::size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    std::vector<int> fold(static_cast<std::size_t>(ns), 1);
    for (std::size_t i = 0; i < perm.size() / 2; ++i)
      fold[static_cast<std::size_t>(perm[i])] = 0;

    Eigen::VectorXd m_hat(ns), e_hat(ns);
    if (nuisance.m_const) {
      m_hat.setConstant(*nuisance.m_const);
    } else {
      for (int f = 0; f < 2; ++f) {
        std::vector<Eigen::Index> fit_rows, pred_rows;
        for (Eigen::Index i = 0; i < ns; ++i)
          (fold[static_cast<std::size_t>(i)] == f ? pred_rows : fit_rows)
              .push_back(i);
        if (fit_rows.empty() || pred_rows.empty())
          throw FitError("cross-fitting requires at least 2 rows per fold");
        const LearnerModel mu = detail::fit_outcome_model(
            detail::rows_of(sf, fit_rows), detail::outcomes_of(sf, fit_rows),
            base, sf.outcome_kind,
            derive_seed(seed, 600 + 2 * static_cast<std::uint64_t>(k) +
                                  static_cast<std::uint64_t>(f)));
        const Eigen::VectorXd pred =
            predict(mu, detail::rows_of(sf, pred_rows));
        for (std::size_t i = 0; i < pred_rows.size(); ++i)
          m_hat[pred_rows[i]] = pred[static_cast<Eigen::Index>(i)];
      }
    }
    if (nuisance.e_const) {
      e_hat.setConstant(*nuisance.e_const);
    } else if (sf.propensity) {
      e_hat = sf.propensity->unaryExpr(
          [eps](double e) { return std::clamp(e, eps, 1.0 - eps); });
    } else {
      for (int f = 0; f < 2; ++f) {
        std::vector<Eigen::Index> fit_rows, pred_rows;
        for (Eigen::Index i = 0; i < ns; ++i)
          (fold[static_cast<std::size_t>(i)] == f ? pred_rows : fit_rows)
              .push_back(i);
        Eigen::VectorXd w_fit(static_cast<Eigen::Index>(fit_rows.size()));
        for (std::size_t i = 0; i < fit_rows.size(); ++i)
          w_fit[static_cast<Eigen::Index>(i)] = w01[fit_rows[i]];
        const LearnerModel pm =
            fit_logistic(detail::rows_of(sf, fit_rows), w_fit);
        const Eigen::VectorXd pred =
            predict(pm, detail::rows_of(sf, pred_rows));
        for (std::size_t i = 0; i < pred_rows.size(); ++i)
          e_hat[pred_rows[i]] = std::clamp(pred[static_cast<Eigen::Index>(i)],
                                           eps, 1.0 - eps);
      }
    }

    Eigen::VectorXd psi(ns), omega(ns);
    for (Eigen::Index i = 0; i < ns; ++i) {
      const double denom = w01[i] - e_hat[i];
      if (!(std::abs(denom) > 0.0) || !std::isfinite(denom))
        throw FitError("R-learner residualized treatment is degenerate");
      psi[i] = (sf.outcome[i] - m_hat[i]) / denom;
      omega[i] = denom * denom;
    }
    m.r_models.push_back(detail::fit_effect_model(
        sf.features, psi, omega, base,
        derive_seed(seed, 700 + static_cast<std::uint64_t>(k))));
  }
  return m;
}

// Uplift random forest behind the CateModel interface.
inline CateModel fit_uplift_forest(const ExperimentFrame& frame,
                                   const UpliftForestSpec& spec,
                                   std::uint64_t seed) {
  validate_frame(frame);
  CateModel m;
  m.method = CateMethod::uplift_forest;
  m.arm_labels = frame.arm_labels;
  m.feature_names = frame.feature_names;
  m.outcome_kind = frame.outcome_kind;
  m.seed = seed;
  m.train_d = frame.d();
  m.forest = fit_uplift_forest_model(frame, spec, seed);
  return m;
}

// ---------------------------------------------------------------------------
// Prediction and downstream decisions
// ---------------------------------------------------------------------------

// m x K matrix; column k-1 carries tau_k(x).
inline Eigen::MatrixXd predict_cate(const CateModel& m,
                                    const Eigen::MatrixXd& X) {
  if (X.cols() != m.train_d)
    throw InvariantError("predict_cate expects " + std::to_string(m.train_d) +
                         " feature columns, got " + std::to_string(X.cols()));
  const int K = m.num_arms();
  Eigen::MatrixXd out(X.rows(), K);
  switch (m.method) {
    case CateMethod::s: {
      Eigen::MatrixXd design(X.rows(), m.train_d + 1);
      design.leftCols(m.train_d) = X;
      for (int k = 0; k < K; ++k) {
        design.col(m.train_d).setOnes();
        const Eigen::VectorXd treated =
            predict(m.s_models[static_cast<std::size_t>(k)], design);
        design.col(m.train_d).setZero();
        const Eigen::VectorXd control =
            predict(m.s_models[static_cast<std::size_t>(k)], design);
        out.col(k) = treated - control;
      }
      break;
    }
    case CateMethod::t:
      for (int k = 0; k < K; ++k)
        out.col(k) = predict(m.mu_arm[static_cast<std::size_t>(k)], X) -
                     predict(m.mu_control, X);
      break;
    case CateMethod::x:
      for (int k = 0; k < K; ++k) {
        const Eigen::VectorXd t0 =
            predict(m.tau0_models[static_cast<std::size_t>(k)], X);
        const Eigen::VectorXd t1 =
            predict(m.tau1_models[static_cast<std::size_t>(k)], X);
        Eigen::VectorXd g(X.rows());
        if (m.g_override) {
          g.setConstant(*m.g_override);
        } else {
          const double eps = m.propensity_clip;
          g = predict(m.g_models[static_cast<std::size_t>(k)], X)
                  .unaryExpr([eps](double e) {
                    return std::clamp(e, eps, 1.0 - eps);
                  });
        }
        out.col(k) =
            g.cwiseProduct(t0) +
            (Eigen::VectorXd::Ones(X.rows()) - g).cwiseProduct(t1);
      }
      break;
    case CateMethod::r:
      for (int k = 0; k < K; ++k)
        out.col(k) = predict(m.r_models[static_cast<std::size_t>(k)], X);
      break;
    case CateMethod::uplift_forest:
      out = predict_uplift(*m.forest, X);
      break;
  }
  return out;
}

// Per row: the arm with the largest predicted uplift, or control (0) when
// that maximum does not exceed the threshold. Ties break toward the lowest
// arm index.
inline std::vector<int> recommend(const CateModel& m, const Eigen::MatrixXd& X,
                                  double value_threshold = 0.0) {
  const Eigen::MatrixXd tau = predict_cate(m, X);
  std::vector<int> arms(static_cast<std::size_t>(X.rows()), 0);
  for (Eigen::Index i = 0; i < tau.rows(); ++i) {
    int best_arm = 1;
    double best = tau(i, 0);
    for (int k = 1; k < tau.cols(); ++k)
      if (tau(i, k) > best) {
        best = tau(i, k);
        best_arm = k + 1;
      }
    arms[static_cast<std::size_t>(i)] = best > value_threshold ? best_arm : 0;
  }
  return arms;
}

// Top ceil(fraction * n) unit indices by max-arm predicted uplift,
// descending, stable by original index on ties.
inline std::vector<Eigen::Index> top_k_targeting(const CateModel& m,
                                                 const Eigen::MatrixXd& X,
                                                 double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("targeting fraction must lie in (0, 1]");
  const Eigen::MatrixXd tau = predict_cate(m, X);
  const Eigen::VectorXd score = tau.rowwise().maxCoeff();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return score[a] > score[b];
                   });
  const auto take = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(X.rows())));
  order.resize(std::min(order.size(), take));
  return order;
}

inline std::vector<Eigen::Index> top_k_targeting(const CateModel& m,
                                                 const ExperimentFrame& frame,
                                                 double fraction) {
  return top_k_targeting(m, frame.features, fraction);
}

// ---------------------------------------------------------------------------
// ATE reports
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<Eigen::Index> stratified_resample(
    const std::vector<std::vector<Eigen::Index>>& group_rows, Rng& rng) {
  std::vector<Eigen::Index> sample;
  for (const auto& rows : group_rows)
    for (std::size_t i = 0; i < rows.size(); ++i)
      sample.push_back(rows[rng.uniform_index(rows.size())]);
  return sample;
}

inline std::vector<std::vector<Eigen::Index>> rows_by_group(
    const ExperimentFrame& f) {
  std::vector<std::vector<Eigen::Index>> out;
  for (int g = 0; g <= f.num_arms(); ++g) out.push_back(f.arm_rows(g));
  return out;
}

// Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> draws, double q) {
  std::sort(draws.begin(), draws.end());
  const double pos = q * static_cast<double>(draws.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return draws[lo] + frac * (draws[hi] - draws[lo]);
}

inline AteReport report_from_draws(const std::string& arm,
                                   const std::string& method, double estimate,
                                   const std::vector<double>& draws) {
  AteReport r;
  r.arm = arm;
  r.method = method;
  r.estimate = estimate;
  r.ci_low = std::min(percentile(draws, 0.025), estimate);
  r.ci_high = std::max(percentile(draws, 0.975), estimate);
  r.bootstrap_draws = static_cast<int>(draws.size());
  return r;
}

}  // namespace detail

// Refit an estimator of the same configuration on a new frame.
inline CateModel refit_like(const CateModel& m, const ExperimentFrame& frame,
                            std::uint64_t seed) {
  switch (m.method) {
    case CateMethod::s: return fit_s(frame, m.base_spec, seed);
    case CateMethod::t: return fit_t(frame, m.base_spec, seed);
    case CateMethod::x:
      return fit_x(frame, m.base_spec, seed, m.g_override, m.propensity_clip);
    case CateMethod::r:
      return fit_r(frame, m.base_spec, seed, {}, m.propensity_clip);
    case CateMethod::uplift_forest:
      return fit_uplift_forest(frame, m.forest->spec, seed);
  }
  throw FitError("unreachable method");
}

// Point estimate: mean of tau_k over the frame's units. CI: percentile
// bootstrap with arm-stratified resampling and a full refit per draw.
inline std::vector<AteReport> ate_from_cate(const CateModel& m,
                                            const ExperimentFrame& frame,
                                            int bootstrap_b, std::uint64_t seed,
                                            int threads = 1) {
  if (bootstrap_b < 10) throw ConfigError("bootstrap_b must be >= 10");
  const int K = m.num_arms();
  const Eigen::RowVectorXd point =
      predict_cate(m, frame.features).colwise().mean();

  const auto group_rows = detail::rows_by_group(frame);
  Eigen::MatrixXd draws(bootstrap_b, K);
  detail::parallel_for(
      static_cast<std::size_t>(bootstrap_b), threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(b)));
        const ExperimentFrame resampled =
            take_rows(frame, detail::stratified_resample(group_rows, rng));
        const CateModel refit = refit_like(
            m, resampled, derive_seed(seed, 2000 + static_cast<std::uint64_t>(b)));
        draws.row(static_cast<Eigen::Index>(b)) =
            predict_cate(refit, resampled.features).colwise().mean();
      });

  std::vector<AteReport> reports;
  for (int k = 0; k < K; ++k) {
    std::vector<double> col(static_cast<std::size_t>(bootstrap_b));
    for (int b = 0; b < bootstrap_b; ++b)
      col[static_cast<std::size_t>(b)] = draws(b, k);
    reports.push_back(detail::report_from_draws(
        m.arm_labels[static_cast<std::size_t>(k) + 1], "cate_mean", point[k],
        col));
  }
  return reports;
}

namespace detail {

inline double ipw_estimate(const ExperimentFrame& slice,
                           const Eigen::VectorXd& e_hat) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < slice.n(); ++i) {
    const double y = slice.outcome[i];
    if (slice.treatment[static_cast<std::size_t>(i)] == 1)
      acc += y / e_hat[i];
    else
      acc -= y / (1.0 - e_hat[i]);
  }
  return acc / static_cast<double>(slice.n());
}

}  // namespace detail

// Horvitz-Thompson estimate over the {arm, control} rows with the propensity
// from estimate_propensity; CI from a 200-draw bootstrap of the estimator
// with a propensity refit (not a model refit) per draw.
inline AteReport ipw_ate(const ExperimentFrame& frame, int arm,
                         double eps = kDefaultPropensityClip,
                         int bootstrap_b = 200, std::uint64_t seed = 42,
                         int threads = 1) {
  if (bootstrap_b < 10) throw ConfigError("bootstrap_b must be >= 10");
  const ArmSlice slice = restrict_to_arm(frame, arm);
  const Eigen::VectorXd e_hat = estimate_propensity(slice.frame, 1, eps);
  const double estimate = detail::ipw_estimate(slice.frame, e_hat);

  const auto group_rows = detail::rows_by_group(slice.frame);
  std::vector<double> draws(static_cast<std::size_t>(bootstrap_b));
  detail::parallel_for(
      draws.size(), threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, 3000 + static_cast<std::uint64_t>(b)));
        const ExperimentFrame resampled = take_rows(
            slice.frame, detail::stratified_resample(group_rows, rng));
        draws[b] = detail::ipw_estimate(
            resampled, estimate_propensity(resampled, 1, eps));
      });
  return detail::report_from_draws(
      frame.arm_labels[static_cast<std::size_t>(arm)], "ipw", estimate, draws);
}

// Difference of group means with a stratified bootstrap CI.
inline AteReport naive_ate_report(const ExperimentFrame& frame, int arm,
                                  int bootstrap_b = 200,
                                  std::uint64_t seed = 42, int threads = 1) {
  if (bootstrap_b < 10) throw ConfigError("bootstrap_b must be >= 10");
  const ArmSlice slice = restrict_to_arm(frame, arm);
  const double estimate = naive_ate(slice.frame, 1);
  const auto group_rows = detail::rows_by_group(slice.frame);
  std::vector<double> draws(static_cast<std::size_t>(bootstrap_b));
  detail::parallel_for(
      draws.size(), threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, 4000 + static_cast<std::uint64_t>(b)));
        const ExperimentFrame resampled = take_rows(
            slice.frame, detail::stratified_resample(group_rows, rng));
        draws[b] = naive_ate(resampled, 1);
      });
  return detail::report_from_draws(
      frame.arm_labels[static_cast<std::size_t>(arm)], "naive", estimate,
      draws);
}

}  // namespace uplift
