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
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"
#include "uplift/random.hpp"

namespace uplift {

// Supervised base learners behind one fit/predict contract, so the CATE
// estimators can wrap any of them interchangeably.

enum class LearnerKind { ridge, logistic, regression_forest };

inline LearnerKind parse_learner_kind(const std::string& s) {
  if (s == "ridge") return LearnerKind::ridge;
  if (s == "logistic") return LearnerKind::logistic;
  if (s == "regression_forest") return LearnerKind::regression_forest;
  throw ConfigError("unknown base learner '" + s + "'");
}

inline std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::ridge: return "ridge";
    case LearnerKind::logistic: return "logistic";
    case LearnerKind::regression_forest: return "regression_forest";
  }
  return "";
}

struct ForestParams {
  int n_trees = 100;
  int max_depth = 6;
  int min_leaf = 5;
  double feature_subsample = 1.0;  // fraction of features tried per node
  bool bootstrap = true;
  int threads = 1;
};

struct LogisticParams {
  int max_iter = 100;
  double tol = 1e-8;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::ridge;
  double ridge_lambda = 1e-3;
  ForestParams forest;
  LogisticParams logistic;
};

inline void validate_spec(const LearnerSpec& s) {
  if (s.ridge_lambda < 0.0) throw ConfigError("ridge_lambda must be >= 0");
  if (s.forest.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (s.forest.max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (s.forest.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (!(s.forest.feature_subsample > 0.0 && s.forest.feature_subsample <= 1.0))
    throw ConfigError("feature_subsample must lie in (0,1]");
  if (s.logistic.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(s.logistic.tol > 0.0)) throw ConfigError("tol must be > 0");
}

struct TreeNode {
  int feature = -1;  // < 0 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf mean

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict_row(const Eigen::RowVectorXd& x) const {
    int idx = 0;
    while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
      const TreeNode& nd = nodes[static_cast<std::size_t>(idx)];
      idx = (x[nd.feature] <= nd.threshold) ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(idx)].value;
  }
};

struct LearnerModel {
  LearnerSpec spec;
  Eigen::VectorXd weights;  // ridge / logistic
  double intercept = 0.0;
  std::vector<RegressionTree> trees;  // regression_forest
  Eigen::Index train_n = 0;
  Eigen::Index train_d = 0;
};

// ---------------------------------------------------------------------------
// Ridge
// ---------------------------------------------------------------------------

// Minimizes sum_i w_i (y_i - x_i'v - b)^2 + lambda ||v||^2 with an
// unpenalized intercept, via normal equations on (weighted-)centered data.
// lambda = 0 routes through a complete orthogonal decomposition, which
// yields the minimum-norm least-squares solution for singular designs.
inline LearnerModel fit_ridge_weighted(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& w,
                                       double lambda) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 1) throw FitError("ridge requires at least one row");
  if (y.size() != n || w.size() != n)
    throw FitError("ridge inputs have mismatched lengths");
  if (lambda < 0.0) throw ConfigError("ridge_lambda must be >= 0");
  const double sw = w.sum();
  if (!(sw > 0.0)) throw FitError("ridge weights must have positive mass");

  const Eigen::RowVectorXd xbar = (w.transpose() * X) / sw;
  const double ybar = w.dot(y) / sw;
  const Eigen::MatrixXd Xc = X.rowwise() - xbar;
  const Eigen::VectorXd yc = y.array() - ybar;

  Eigen::VectorXd v;
  if (lambda > 0.0) {
    Eigen::MatrixXd A = Xc.transpose() * w.asDiagonal() * Xc;
    A.diagonal().array() += lambda;
    v = A.ldlt().solve(Xc.transpose() * (w.cwiseProduct(yc)));
  } else {
    const Eigen::VectorXd sq = w.cwiseSqrt();
    const Eigen::MatrixXd Xs = sq.asDiagonal() * Xc;
    const Eigen::VectorXd ys = sq.cwiseProduct(yc);
    v = Xs.completeOrthogonalDecomposition().solve(ys);
  }

  LearnerModel m;
  m.spec.kind = LearnerKind::ridge;
  m.spec.ridge_lambda = lambda;
  m.weights = v;
  m.intercept = ybar - xbar.dot(v);
  m.train_n = n;
  m.train_d = d;
  return m;
}

inline LearnerModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              double lambda) {
  return fit_ridge_weighted(X, y, Eigen::VectorXd::Ones(X.rows()), lambda);
}

// ---------------------------------------------------------------------------
// Logistic
// ---------------------------------------------------------------------------

namespace detail {

constexpr double kLogisticPenalty = 1e-6;  // guarantees a maximizer under separation

inline double penalized_nll(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& v, double b) {
  const Eigen::VectorXd z = (X * v).array() + b;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    const double softplus =
        zi > 0.0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
    nll += softplus - y[i] * zi;
  }
  return nll + 0.5 * kLogisticPenalty * v.squaredNorm();
}

}  // namespace detail

// Newton iterations on the L2-penalized Bernoulli log-likelihood until the
// gradient inf-norm falls below tol or max_iter is hit. Steps are halved
// whenever they fail to decrease the objective.
inline LearnerModel fit_logistic(const Eigen::MatrixXd& X,
                                 const Eigen::VectorXd& y,
                                 const LearnerSpec& spec = {}) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (y.size() != n) throw FitError("logistic inputs have mismatched lengths");
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[i] == 0.0)
      has0 = true;
    else if (y[i] == 1.0)
      has1 = true;
    else
      throw FitError("logistic outcome must be in {0,1}");
  }
  if (!has0 || !has1)
    throw FitError(
        "logistic outcome has a single class; handle the degenerate arm "
        "before fitting");

  const double lambda = detail::kLogisticPenalty;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  double nll = detail::penalized_nll(X, y, v, b);

  for (int iter = 0; iter < spec.logistic.max_iter; ++iter) {
    const Eigen::VectorXd z = (X * v).array() + b;
    const Eigen::VectorXd p = z.unaryExpr([](double t) { return sigmoid(t); });
    const Eigen::VectorXd r = p - y;
    Eigen::VectorXd grad(d + 1);
    grad.head(d) = X.transpose() * r + lambda * v;
    grad[d] = r.sum();
    if (grad.lpNorm<Eigen::Infinity>() < spec.logistic.tol) break;

    const Eigen::VectorXd s = p.array() * (1.0 - p.array());
    Eigen::MatrixXd H(d + 1, d + 1);
    H.topLeftCorner(d, d) = X.transpose() * s.asDiagonal() * X;
    H.topLeftCorner(d, d).diagonal().array() += lambda;
    H.block(0, d, d, 1) = X.transpose() * s;
    H.block(d, 0, 1, d) = (X.transpose() * s).transpose();
    H(d, d) = s.sum();
    // tiny jitter keeps the system solvable when s underflows
    H.diagonal().array() += 1e-12;

    const Eigen::VectorXd delta = H.ldlt().solve(-grad);
    double step = 1.0;
    Eigen::VectorXd v_new;
    double b_new = 0.0, nll_new = 0.0;
    for (int half = 0; half < 40; ++half) {
      v_new = v + step * delta.head(d);
      b_new = b + step * delta[d];
      nll_new = detail::penalized_nll(X, y, v_new, b_new);
      if (nll_new <= nll + 1e-12) break;
      step *= 0.5;
    }
    v = v_new;
    b = b_new;
    nll = nll_new;
  }

  LearnerModel m;
  m.spec = spec;
  m.spec.kind = LearnerKind::logistic;
  m.weights = v;
  m.intercept = b;
  m.train_n = n;
  m.train_d = d;
  return m;
}

// ---------------------------------------------------------------------------
// Regression forest
// ---------------------------------------------------------------------------

namespace detail {

struct TreeBuilder {
  const Eigen::MatrixXd& X;
  const Eigen::VectorXd& y;
  const Eigen::VectorXd& w;
  const ForestParams& params;
  Rng& rng;
  RegressionTree tree;

  int build(std::vector<Eigen::Index>& rows, int depth) {
    double sw = 0.0, swy = 0.0;
    for (const Eigen::Index r : rows) {
      sw += w[r];
      swy += w[r] * y[r];
    }
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes.back().value = sw > 0.0 ? swy / sw : 0.0;

    if (depth >= params.max_depth ||
        rows.size() < 2 * static_cast<std::size_t>(params.min_leaf))
      return idx;

    const Eigen::Index d = X.cols();
    std::vector<int> feats = sample_features(d);

    // Best split by weighted variance reduction; parent SSE is constant so
    // we maximize swyL^2/swL + swyR^2/swR. Ties keep the first candidate
    // (features ascending, thresholds ascending).
    const double parent_score = swy * swy / sw;
    const double tol = 1e-10 * std::max(1.0, std::abs(parent_score));
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, Eigen::Index>> order(rows.size());
    for (const int f : feats) {
      for (std::size_t i = 0; i < rows.size(); ++i)
        order[i] = {X(rows[i], f), rows[i]};
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double swl = 0.0, swyl = 0.0;
      for (std::size_t i = 1; i < order.size(); ++i) {
        const Eigen::Index r = order[i - 1].second;
        swl += w[r];
        swyl += w[r] * y[r];
        if (order[i - 1].first >= order[i].first) continue;
        if (i < static_cast<std::size_t>(params.min_leaf) ||
            order.size() - i < static_cast<std::size_t>(params.min_leaf))
          continue;
        const double swr = sw - swl;
        const double swyr = swy - swyl;
        if (!(swl > 0.0 && swr > 0.0)) continue;
        const double gain =
            swyl * swyl / swl + swyr * swyr / swr - parent_score;
        if (gain > best_gain + tol) {
          best_gain = gain;
          best_feature = f;
          best_threshold = midpoint(order[i - 1].first, order[i].first);
        }
      }
    }

    if (best_feature < 0) return idx;

    std::vector<Eigen::Index> left_rows, right_rows;
    for (const Eigen::Index r : rows)
      (X(r, best_feature) <= best_threshold ? left_rows : right_rows)
          .push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);
    tree.nodes[static_cast<std::size_t>(idx)].feature = best_feature;
    tree.nodes[static_cast<std::size_t>(idx)].threshold = best_threshold;
    tree.nodes[static_cast<std::size_t>(idx)].left = left;
    tree.nodes[static_cast<std::size_t>(idx)].right = right;
    return idx;
  }

  static double midpoint(double lo, double hi) {
    const double mid = lo + 0.5 * (hi - lo);
    return mid < hi ? mid : lo;  // keep the partition at "x <= t" exact
  }

  std::vector<int> sample_features(Eigen::Index d) {
    const int m = std::clamp(
        static_cast<int>(std::lround(params.feature_subsample *
                                     static_cast<double>(d))),
        1, static_cast<int>(d));
    std::vector<int> feats(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) feats[static_cast<std::size_t>(j)] =
        static_cast<int>(j);
    if (m == static_cast<int>(d)) return feats;
    for (int i = 0; i < m; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) +
          rng.uniform_index(static_cast<std::size_t>(d - i));
      std::swap(feats[static_cast<std::size_t>(i)], feats[j]);
    }
    feats.resize(static_cast<std::size_t>(m));
    std::sort(feats.begin(), feats.end());
    return feats;
  }
};

inline RegressionTree fit_tree(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y,
                               const Eigen::VectorXd& w,
                               const ForestParams& params, Rng& rng,
                               bool bootstrap) {
  std::vector<Eigen::Index> rows;
  const Eigen::Index n = X.rows();
  rows.reserve(static_cast<std::size_t>(n));
  if (bootstrap) {
    // indices are drawn against the original row order
    for (Eigen::Index i = 0; i < n; ++i)
      rows.push_back(static_cast<Eigen::Index>(
          rng.uniform_index(static_cast<std::size_t>(n))));
  } else {
    for (Eigen::Index i = 0; i < n; ++i) rows.push_back(i);
  }
  TreeBuilder builder{X, y, w, params, rng, {}};
  builder.tree.nodes.reserve(64);
  builder.build(rows, 0);
  return std::move(builder.tree);
}

}  // namespace detail

// Bagged CART regression trees with per-tree RNG streams derived from
// (seed, tree index); results are independent of the worker count.
inline LearnerModel fit_regression_forest_weighted(const Eigen::MatrixXd& X,
                                                   const Eigen::VectorXd& y,
                                                   const Eigen::VectorXd& w,
                                                   const LearnerSpec& spec,
                                                   std::uint64_t seed) {
  validate_spec(spec);
  const Eigen::Index n = X.rows();
  if (y.size() != n || w.size() != n)
    throw FitError("forest inputs have mismatched lengths");
  if (n < 2 * static_cast<Eigen::Index>(spec.forest.min_leaf))
    throw FitError("forest requires at least 2*min_leaf rows, got " +
                   std::to_string(n));

  LearnerModel m;
  m.spec = spec;
  m.spec.kind = LearnerKind::regression_forest;
  m.trees.resize(static_cast<std::size_t>(spec.forest.n_trees));
  m.train_n = n;
  m.train_d = X.cols();
  detail::parallel_for(
      m.trees.size(), spec.forest.threads, [&](std::size_t t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        m.trees[t] =
            detail::fit_tree(X, y, w, spec.forest, rng, spec.forest.bootstrap);
      });
  return m;
}

inline LearnerModel fit_regression_forest(const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          const LearnerSpec& spec,
                                          std::uint64_t seed) {
  return fit_regression_forest_weighted(X, y, Eigen::VectorXd::Ones(X.rows()),
                                        spec, seed);
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

// Ridge and forest return conditional-mean estimates; logistic returns
// probabilities in (0,1).
inline Eigen::VectorXd predict(const LearnerModel& m, const Eigen::MatrixXd& X) {
  if (X.cols() != m.train_d)
    throw InvariantError("predict expects " + std::to_string(m.train_d) +
                         " feature columns, got " + std::to_string(X.cols()));
  switch (m.spec.kind) {
    case LearnerKind::ridge:
      return (X * m.weights).array() + m.intercept;
    case LearnerKind::logistic: {
      Eigen::VectorXd z = (X * m.weights).array() + m.intercept;
      return z.unaryExpr([](double t) {
        return std::clamp(sigmoid(t), 1e-12, 1.0 - 1e-12);
      });
    }
    case LearnerKind::regression_forest: {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
      for (const auto& tree : m.trees)
        for (Eigen::Index i = 0; i < X.rows(); ++i)
          out[i] += tree.predict_row(X.row(i));
      return out / static_cast<double>(m.trees.size());
    }
  }
  throw FitError("unreachable learner kind");
}

}  // namespace uplift
