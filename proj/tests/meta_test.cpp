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

#include "uplift/meta.hpp"

#include <gtest/gtest.h>

#include "testutil.hpp"
#include "uplift/eval.hpp"

using namespace uplift;

namespace {

// Randomized frame with constant outcomes per group; ridge/logistic stage-1
// fits are exact on it.
ExperimentFrame two_level_frame(Eigen::Index n, double control_y,
                                double treated_y, std::uint64_t seed) {
  Rng rng(seed);
  ExperimentFrame f;
  f.features.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 2; ++j) f.features(i, j) = rng.normal();
  f.treatment.resize(static_cast<std::size_t>(n));
  f.outcome.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool treated = i % 2 == 0;
    f.treatment[static_cast<std::size_t>(i)] = treated ? 1 : 0;
    f.outcome[i] = treated ? treated_y : control_y;
  }
  f.outcome_kind = OutcomeKind::continuous;
  f.feature_names = {"x1", "x2"};
  f.arm_labels = {"control", "treated"};
  validate_frame(f);
  return f;
}

// Randomized null frame: Y depends on X but not on W.
ExperimentFrame null_effect_frame(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  ExperimentFrame f;
  f.features.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) f.features(i, j) = rng.normal();
  f.treatment.resize(static_cast<std::size_t>(n));
  f.outcome.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    f.treatment[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
    f.outcome[i] = f.features(i, 0) + 0.5 * rng.normal();
  }
  f.outcome_kind = OutcomeKind::continuous;
  f.feature_names = {"x1", "x2", "x3"};
  f.arm_labels = {"control", "treated"};
  validate_frame(f);
  return f;
}

double naive_se(const ExperimentFrame& f) {
  double mean_t = 0.0, mean_c = 0.0;
  Eigen::Index n_t = 0, n_c = 0;
  for (Eigen::Index i = 0; i < f.n(); ++i) {
    if (f.treatment[static_cast<std::size_t>(i)] == 1) {
      mean_t += f.outcome[i];
      ++n_t;
    } else {
      mean_c += f.outcome[i];
      ++n_c;
    }
  }
  mean_t /= static_cast<double>(n_t);
  mean_c /= static_cast<double>(n_c);
  double var_t = 0.0, var_c = 0.0;
  for (Eigen::Index i = 0; i < f.n(); ++i) {
    const double y = f.outcome[i];
    if (f.treatment[static_cast<std::size_t>(i)] == 1)
      var_t += (y - mean_t) * (y - mean_t);
    else
      var_c += (y - mean_c) * (y - mean_c);
  }
  var_t /= static_cast<double>(n_t - 1);
  var_c /= static_cast<double>(n_c - 1);
  return std::sqrt(var_t / static_cast<double>(n_t) +
                   var_c / static_cast<double>(n_c));
}

LearnerModel ridge_stub(double weight, double intercept) {
  LearnerModel m;
  m.spec.kind = LearnerKind::ridge;
  m.weights = Eigen::VectorXd::Constant(1, weight);
  m.intercept = intercept;
  m.train_n = 2;
  m.train_d = 1;
  return m;
}

// Hand-built T-model whose tau columns are affine in the single feature.
CateModel hand_t_model(const std::vector<std::pair<double, double>>& arm_affine,
                       std::vector<std::string> labels) {
  CateModel m;
  m.method = CateMethod::t;
  m.arm_labels = std::move(labels);
  m.feature_names = {"x1"};
  m.train_d = 1;
  m.mu_control = ridge_stub(0.0, 0.0);
  for (const auto& [w, b] : arm_affine) m.mu_arm.push_back(ridge_stub(w, b));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Propensity
// ---------------------------------------------------------------------------

TEST(Propensity, InterceptOnlyGivesHalf) {
  ExperimentFrame f = two_level_frame(40, 0.0, 1.0, 1);
  f.features.setZero();
  const Eigen::VectorXd e = estimate_propensity(f, 1);
  for (Eigen::Index i = 0; i < f.n(); ++i) EXPECT_NEAR(e[i], 0.5, 1e-9);
}

TEST(Propensity, ProvidedColumnIsClipped) {
  auto f = testutil::make_frame({{0.0}, {1.0}}, {0, 1}, {0.0, 1.0});
  f.propensity = Eigen::VectorXd(2);
  (*f.propensity) << 0.001, 0.5;
  const Eigen::VectorXd e = estimate_propensity(f, 1, 0.01);
  EXPECT_DOUBLE_EQ(e[0], 0.01);
  EXPECT_DOUBLE_EQ(e[1], 0.5);
}

TEST(Propensity, SeparableAssignmentSaturatesAtClip) {
  std::vector<std::vector<double>> rows;
  std::vector<int> w;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    const double x = i < 20 ? -5.0 - i * 0.1 : 5.0 + i * 0.1;
    rows.push_back({x});
    w.push_back(i < 20 ? 0 : 1);
    y.push_back(0.0);
  }
  const auto f = testutil::make_frame(rows, w, y);
  const Eigen::VectorXd e = estimate_propensity(f, 1, 0.01);
  EXPECT_DOUBLE_EQ(e.minCoeff(), 0.01);
  EXPECT_DOUBLE_EQ(e.maxCoeff(), 0.99);
}

TEST(Propensity, RejectsUnrestrictedFrameAndBadClip) {
  const auto f = testutil::make_frame(
      {{0.0}, {1.0}, {2.0}}, {0, 1, 2}, {0.0, 1.0, 2.0},
      OutcomeKind::continuous, {"control", "a", "b"});
  EXPECT_THROW(estimate_propensity(f, 1), PropensityError);
  const auto g = testutil::make_frame({{0.0}, {1.0}}, {0, 1}, {0.0, 1.0});
  EXPECT_THROW(estimate_propensity(g, 1, 0.7), ConfigError);
}

// ---------------------------------------------------------------------------
// S-learner
// ---------------------------------------------------------------------------

TEST(SLearner, RidgeBaseGivesConstantCate) {
  const SyntheticData data =
      generate_synthetic(Dgp::heterogeneous_linear, 300, 3, 5);
  const CateModel m = fit_s(data.frame, LearnerSpec{}, 1);
  const Eigen::VectorXd tau = predict_cate(m, data.frame.features).col(0);
  EXPECT_LT(tau.maxCoeff() - tau.minCoeff(), 1e-9);
}

TEST(SLearner, ClosedFormWithConstantFeatures) {
  // constant features, treated y = 5, control y = 2, lambda = 0:
  // the fit reproduces the group means, so tau = 3
  const Eigen::Index n = 10;
  ExperimentFrame f;
  f.features = Eigen::MatrixXd::Constant(n, 1, 1.0);
  f.treatment.resize(static_cast<std::size_t>(n));
  f.outcome.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool treated = i % 2 == 0;
    f.treatment[static_cast<std::size_t>(i)] = treated ? 1 : 0;
    f.outcome[i] = treated ? 5.0 : 2.0;
  }
  f.outcome_kind = OutcomeKind::continuous;
  f.feature_names = {"x1"};
  f.arm_labels = {"control", "treated"};
  LearnerSpec spec;
  spec.ridge_lambda = 0.0;
  const CateModel m = fit_s(f, spec, 1);
  const Eigen::VectorXd tau = predict_cate(m, f.features).col(0);
  for (Eigen::Index i = 0; i < n; ++i) EXPECT_NEAR(tau[i], 3.0, 1e-9);
}

TEST(SLearner, NullEffectEstimatesNearZero) {
  const ExperimentFrame f = null_effect_frame(4000, 77);
  const CateModel m = fit_s(f, LearnerSpec{}, 1);
  const double mean_tau = predict_cate(m, f.features).col(0).mean();
  EXPECT_LT(std::abs(mean_tau), 3.0 * naive_se(f));
}

// ---------------------------------------------------------------------------
// T-learner
// ---------------------------------------------------------------------------

TEST(TLearner, ConstantGroupsGiveConstantCate) {
  const ExperimentFrame f = two_level_frame(30, 2.0, 5.0, 3);
  const CateModel m = fit_t(f, LearnerSpec{}, 1);
  const Eigen::VectorXd tau = predict_cate(m, f.features).col(0);
  for (Eigen::Index i = 0; i < f.n(); ++i) EXPECT_NEAR(tau[i], 3.0, 1e-9);
}

TEST(TLearner, NullEffectEstimatesNearZero) {
  const ExperimentFrame f = null_effect_frame(4000, 78);
  const CateModel m = fit_t(f, LearnerSpec{}, 1);
  const double mean_tau = predict_cate(m, f.features).col(0).mean();
  EXPECT_LT(std::abs(mean_tau), 3.0 * naive_se(f));
}

TEST(TLearner, BeatsConstantPredictorOnHeterogeneousDgp) {
  const SyntheticData data =
      generate_synthetic(Dgp::heterogeneous_linear, 2000, 4, 6);
  const CateModel m = fit_t(data.frame, LearnerSpec{}, 1);
  const Eigen::VectorXd tau = predict_cate(m, data.frame.features).col(0);
  const double pehe_t = pehe(tau, data.truth, 1);
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(
      data.frame.n(), naive_ate(data.frame, 1));
  const double pehe_const = pehe(constant, data.truth, 1);
  EXPECT_LT(pehe_t, pehe_const);
}

TEST(TLearner, BinaryOutcomeGivesRiskDifferences) {
  const SyntheticData data = generate_synthetic(Dgp::binary_logistic, 500, 2, 7);
  const CateModel m = fit_t(data.frame, LearnerSpec{}, 1);
  const Eigen::VectorXd tau = predict_cate(m, data.frame.features).col(0);
  EXPECT_LE(tau.maxCoeff(), 1.0);
  EXPECT_GE(tau.minCoeff(), -1.0);
  EXPECT_EQ(m.mu_control.spec.kind, LearnerKind::logistic);
}

// ---------------------------------------------------------------------------
// X-learner
// ---------------------------------------------------------------------------

TEST(XLearner, EndpointIdentities) {
  const SyntheticData data =
      generate_synthetic(Dgp::heterogeneous_linear, 400, 3, 8);
  const CateModel at0 = fit_x(data.frame, LearnerSpec{}, 1, 0.0);
  const CateModel at1 = fit_x(data.frame, LearnerSpec{}, 1, 1.0);
  const Eigen::MatrixXd probe = data.frame.features.topRows(50);
  const Eigen::VectorXd tau_g0 = predict_cate(at0, probe).col(0);
  const Eigen::VectorXd tau_g1 = predict_cate(at1, probe).col(0);
  const Eigen::VectorXd tau1 = predict(at0.tau1_models[0], probe);
  const Eigen::VectorXd tau0 = predict(at1.tau0_models[0], probe);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    EXPECT_DOUBLE_EQ(tau_g0[i], tau1[i]);
    EXPECT_DOUBLE_EQ(tau_g1[i], tau0[i]);
  }
}

TEST(XLearner, ExactStage1PropagatesConstantEffect) {
  // Y = 2 + 1.5 W with no noise: stage-1 fits are exact, both imputed
  // effects are identically 1.5, so tau is 1.5 for any g.
  const ExperimentFrame f = two_level_frame(60, 2.0, 3.5, 9);
  const CateModel m = fit_x(f, LearnerSpec{}, 1);
  const Eigen::VectorXd tau = predict_cate(m, f.features).col(0);
  for (Eigen::Index i = 0; i < f.n(); ++i) EXPECT_NEAR(tau[i], 1.5, 1e-9);
}

TEST(XLearner, CombinationIsConvex) {
  const SyntheticData data =
      generate_synthetic(Dgp::heterogeneous_linear, 600, 3, 10);
  const CateModel m = fit_x(data.frame, LearnerSpec{}, 2);
  const Eigen::MatrixXd probe = data.frame.features;
  const Eigen::VectorXd tau = predict_cate(m, probe).col(0);
  const Eigen::VectorXd t0 = predict(m.tau0_models[0], probe);
  const Eigen::VectorXd t1 = predict(m.tau1_models[0], probe);
  for (Eigen::Index i = 0; i < probe.rows(); ++i) {
    EXPECT_GE(tau[i], std::min(t0[i], t1[i]) - 1e-12);
    EXPECT_LE(tau[i], std::max(t0[i], t1[i]) + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// R-learner
// ---------------------------------------------------------------------------

TEST(RLearner, InjectedNuisancesMatchHandComputation) {
  // data {(x=1, W=1, Y=1), (x=1, W=0, Y=0)} with m = 0, e = 0.5:
  //   psi_1 = (1-0)/(1-0.5) = 2,  psi_2 = (0-0)/(0-0.5) = 0
  //   omega = {0.25, 0.25}
  // intercept-only weighted fit: tau = (0.25*2 + 0.25*0)/0.5 = 1
  const auto f = testutil::make_frame({{1.0}, {1.0}}, {1, 0}, {1.0, 0.0});
  RNuisance nuisance;
  nuisance.m_const = 0.0;
  nuisance.e_const = 0.5;
  const CateModel m = fit_r(f, LearnerSpec{}, 1, nuisance);
  const Eigen::VectorXd tau = predict_cate(m, f.features).col(0);
  EXPECT_NEAR(tau[0], 1.0, 1e-9);
  EXPECT_NEAR(tau[1], 1.0, 1e-9);
}

TEST(RLearner, ZeroResidualsGiveZeroCate) {
  ExperimentFrame f = two_level_frame(40, 0.7, 0.7, 11);
  RNuisance nuisance;
  nuisance.m_const = 0.7;  // Y is identically m
  const CateModel m = fit_r(f, LearnerSpec{}, 1, nuisance);
  const Eigen::VectorXd tau = predict_cate(m, f.features).col(0);
  for (Eigen::Index i = 0; i < f.n(); ++i) EXPECT_NEAR(tau[i], 0.0, 1e-12);
}

TEST(RLearner, WeightedFitMatchesGridSearchOracle) {
  // 3-point weighted ridge against brute-force minimization
  const auto f = testutil::make_frame({{-1.0}, {0.5}, {2.0}}, {1, 0, 1},
                                      {1.0, -0.5, 3.0});
  RNuisance nuisance;
  nuisance.m_const = 0.2;
  nuisance.e_const = 0.4;
  LearnerSpec spec;
  spec.ridge_lambda = 0.1;
  const CateModel m = fit_r(f, spec, 1, nuisance);

  std::vector<double> x, psi, omega;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double w01 = f.treatment[static_cast<std::size_t>(i)];
    const double denom = w01 - 0.4;
    x.push_back(f.features(i, 0));
    psi.push_back((f.outcome[i] - 0.2) / denom);
    omega.push_back(denom * denom);
  }
  const testutil::GridFit oracle =
      testutil::grid_search_weighted_ridge(x, psi, omega, spec.ridge_lambda);
  EXPECT_NEAR(m.r_models[0].weights[0], oracle.slope, 1e-3);
  EXPECT_NEAR(m.r_models[0].intercept, oracle.intercept, 1e-3);
}

TEST(RLearner, RecoverySmokeOnHeterogeneousDgp) {
  const SyntheticData data =
      generate_synthetic(Dgp::heterogeneous_linear, 2000, 4, 12);
  const CateModel m = fit_r(data.frame, LearnerSpec{}, 3);
  const Eigen::VectorXd tau = predict_cate(m, data.frame.features).col(0);
  const double pehe_r = pehe(tau, data.truth, 1);
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(
      data.frame.n(), naive_ate(data.frame, 1));
  EXPECT_LT(pehe_r, pehe(constant, data.truth, 1));
}

TEST(RLearner, ExtremePropensityColumnStillFits) {
  ExperimentFrame f = null_effect_frame(200, 13);
  Eigen::VectorXd e(f.n());
  for (Eigen::Index i = 0; i < f.n(); ++i)
    e[i] = i % 2 == 0 ? 1e-9 : 1.0 - 1e-9;
  f.propensity = e;  // will be clipped to [eps, 1-eps]
  EXPECT_NO_THROW(fit_r(f, LearnerSpec{}, 1));
}

// ---------------------------------------------------------------------------
// Multi-arm fitting
// ---------------------------------------------------------------------------

TEST(MultiArm, PerArmColumnsRecoverGroupDifferences) {
  Rng rng(14);
  std::vector<std::vector<double>> rows;
  std::vector<int> w;
  std::vector<double> y;
  for (int i = 0; i < 300; ++i) {
    rows.push_back({rng.normal()});
    const int arm = i % 3;
    w.push_back(arm);
    y.push_back(arm == 0 ? 1.0 : (arm == 1 ? 2.0 : 4.0));
  }
  const auto f = testutil::make_frame(rows, w, y, OutcomeKind::continuous,
                                      {"control", "a", "b"});
  LearnerSpec exact;
  exact.ridge_lambda = 0.0;
  for (const auto method : {CateMethod::s, CateMethod::t, CateMethod::x}) {
    CateModel m;
    switch (method) {
      case CateMethod::s: m = fit_s(f, exact, 1); break;
      case CateMethod::t: m = fit_t(f, exact, 1); break;
      default: m = fit_x(f, exact, 1); break;
    }
    const Eigen::MatrixXd tau = predict_cate(m, f.features);
    ASSERT_EQ(tau.cols(), 2);
    for (Eigen::Index i = 0; i < f.n(); ++i) {
      EXPECT_NEAR(tau(i, 0), 1.0, 1e-6);
      EXPECT_NEAR(tau(i, 1), 3.0, 1e-6);
    }
  }
}

// ---------------------------------------------------------------------------
// Recommendation and targeting
// ---------------------------------------------------------------------------

TEST(Recommend, ThresholdSendsNegativeUpliftToControl) {
  const CateModel m = hand_t_model({{0.0, -0.2}}, {"control", "treated"});
  Eigen::MatrixXd X(1, 1);
  X << 0.0;
  EXPECT_EQ(recommend(m, X)[0], 0);
  EXPECT_EQ(recommend(m, X, -0.5)[0], 1);
}

TEST(Recommend, TiesBreakTowardLowestArm) {
  const CateModel m =
      hand_t_model({{0.0, 0.3}, {0.0, 0.3}}, {"control", "a", "b"});
  Eigen::MatrixXd X(1, 1);
  X << 1.0;
  EXPECT_EQ(recommend(m, X)[0], 1);
}

TEST(Recommend, ArgmaxPicksLargestColumn) {
  const CateModel m =
      hand_t_model({{0.0, 0.1}, {0.0, 0.4}}, {"control", "a", "b"});
  Eigen::MatrixXd X(1, 1);
  X << 0.0;
  EXPECT_EQ(recommend(m, X)[0], 2);
}

TEST(Recommend, ArgmaxInvariantUnderIncreasingAffineTransform) {
  // tau' = 2*tau + 3 for every arm leaves the argmax unchanged
  const CateModel m =
      hand_t_model({{1.0, 0.0}, {-1.0, 0.2}}, {"control", "a", "b"});
  CateModel transformed =
      hand_t_model({{2.0, 0.0}, {-2.0, 0.4}}, {"control", "a", "b"});
  transformed.mu_control = ridge_stub(0.0, -3.0);
  Rng rng(15);
  Eigen::MatrixXd X(40, 1);
  for (Eigen::Index i = 0; i < 40; ++i) X(i, 0) = rng.normal();
  const double no_threshold = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(recommend(m, X, no_threshold),
            recommend(transformed, X, no_threshold));
}

TEST(TopK, FullFractionKeepsEveryIndex) {
  const CateModel m = hand_t_model({{1.0, 0.0}}, {"control", "treated"});
  const auto f = testutil::make_frame({{0.5}, {0.1}, {0.9}}, {0, 1, 1},
                                      {0.0, 1.0, 1.0});
  const auto all = top_k_targeting(m, f, 1.0);
  EXPECT_EQ(all.size(), 3u);
}

TEST(TopK, PicksHighestScore) {
  const CateModel m = hand_t_model({{1.0, 0.0}}, {"control", "treated"});
  const auto f = testutil::make_frame({{0.5}, {0.1}, {0.9}}, {0, 1, 1},
                                      {0.0, 1.0, 1.0});
  const auto top = top_k_targeting(m, f, 1.0 / 3.0);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0], 2);
}

TEST(TopK, StableTieBreakKeepsLowestIndices) {
  const CateModel m = hand_t_model({{0.0, 0.7}}, {"control", "treated"});
  const auto f = testutil::make_frame({{1.0}, {2.0}, {3.0}, {4.0}},
                                      {0, 1, 0, 1}, {0.0, 1.0, 0.0, 1.0});
  const auto top = top_k_targeting(m, f, 0.5);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0], 0);
  EXPECT_EQ(top[1], 1);
}

// ---------------------------------------------------------------------------
// ATE reports
// ---------------------------------------------------------------------------

TEST(AteFromCate, ConstantCateCollapsesToPoint) {
  const ExperimentFrame f = two_level_frame(200, 2.0, 5.0, 16);
  const CateModel m = fit_t(f, LearnerSpec{}, 1);
  const auto reports = ate_from_cate(m, f, 50, 4);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_NEAR(reports[0].estimate, 3.0, 1e-9);
  EXPECT_NEAR(reports[0].ci_low, 3.0, 1e-6);
  EXPECT_NEAR(reports[0].ci_high, 3.0, 1e-6);
  EXPECT_EQ(reports[0].method, "cate_mean");
  EXPECT_EQ(reports[0].bootstrap_draws, 50);
}

TEST(AteFromCate, DeterministicAndOrderedCi) {
  const SyntheticData data = generate_synthetic(Dgp::linear, 300, 2, 17);
  const CateModel m = fit_t(data.frame, LearnerSpec{}, 1);
  const auto a = ate_from_cate(m, data.frame, 200, 7);
  const auto b = ate_from_cate(m, data.frame, 200, 7);
  EXPECT_DOUBLE_EQ(a[0].estimate, b[0].estimate);
  EXPECT_DOUBLE_EQ(a[0].ci_low, b[0].ci_low);
  EXPECT_DOUBLE_EQ(a[0].ci_high, b[0].ci_high);
  EXPECT_LE(a[0].ci_low, a[0].estimate);
  EXPECT_GE(a[0].ci_high, a[0].estimate);
}

TEST(AteFromCate, DeterministicAcrossWorkerCounts) {
  const SyntheticData data = generate_synthetic(Dgp::linear, 200, 2, 18);
  const CateModel m = fit_t(data.frame, LearnerSpec{}, 1);
  const auto a = ate_from_cate(m, data.frame, 40, 7, 1);
  const auto b = ate_from_cate(m, data.frame, 40, 7, 3);
  EXPECT_DOUBLE_EQ(a[0].ci_low, b[0].ci_low);
  EXPECT_DOUBLE_EQ(a[0].ci_high, b[0].ci_high);
}

TEST(AteFromCate, TooFewDrawsRejected) {
  const ExperimentFrame f = two_level_frame(40, 0.0, 1.0, 19);
  const CateModel m = fit_t(f, LearnerSpec{}, 1);
  EXPECT_THROW(ate_from_cate(m, f, 5, 1), ConfigError);
}

TEST(IpwAte, ReducesToNaiveUnderConstantPropensity) {
  // e = 0.5 supplied, equal-size groups: the estimator is algebraically
  // the difference of group means
  auto f = testutil::make_frame({{0.0}, {0.0}, {0.0}, {0.0}}, {1, 0, 1, 0},
                                {3.0, 1.0, 5.0, 2.0});
  f.propensity = Eigen::VectorXd::Constant(4, 0.5);
  const AteReport r = ipw_ate(f, 1, 0.01, 50, 1);
  EXPECT_NEAR(r.estimate, naive_ate(f, 1), 1e-12);
  EXPECT_EQ(r.method, "ipw");
}

TEST(IpwAte, AllZeroOutcomesGiveZero) {
  auto f = testutil::make_frame({{0.0}, {1.0}, {2.0}, {3.0}}, {1, 0, 1, 0},
                                {0.0, 0.0, 0.0, 0.0});
  const AteReport r = ipw_ate(f, 1, 0.01, 50, 1);
  EXPECT_DOUBLE_EQ(r.estimate, 0.0);
}

TEST(IpwAte, CorrectsConfoundingBetterThanNaive) {
  // assignment depends on x1, outcome depends on x1 and a constant effect
  Rng rng(20);
  const Eigen::Index n = 4000;
  ExperimentFrame f;
  f.features.resize(n, 2);
  f.treatment.resize(static_cast<std::size_t>(n));
  f.outcome.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    f.features(i, 0) = rng.normal();
    f.features(i, 1) = rng.normal();
    const bool treated = rng.bernoulli(sigmoid(1.5 * f.features(i, 0)));
    f.treatment[static_cast<std::size_t>(i)] = treated ? 1 : 0;
    f.outcome[i] =
        f.features(i, 0) + 0.5 * (treated ? 1.0 : 0.0) + 0.3 * rng.normal();
  }
  f.outcome_kind = OutcomeKind::continuous;
  f.feature_names = {"x1", "x2"};
  f.arm_labels = {"control", "treated"};
  validate_frame(f);

  const double truth = 0.5;
  const double naive = naive_ate(f, 1);
  const AteReport ipw = ipw_ate(f, 1, 0.01, 50, 2);
  EXPECT_LT(std::abs(ipw.estimate - truth), std::abs(naive - truth));
}

TEST(NaiveReport, MatchesNaiveAteAndBrackets) {
  const SyntheticData data = generate_synthetic(Dgp::linear, 500, 2, 21);
  const AteReport r = naive_ate_report(data.frame, 1, 100, 5);
  EXPECT_DOUBLE_EQ(r.estimate, naive_ate(data.frame, 1));
  EXPECT_LE(r.ci_low, r.estimate);
  EXPECT_GE(r.ci_high, r.estimate);
  EXPECT_EQ(r.method, "naive");
}

// ---------------------------------------------------------------------------
// Determinism of the fitters
// ---------------------------------------------------------------------------

TEST(Determinism, FittersArePureInFrameSpecSeed) {
  const SyntheticData data = generate_synthetic(Dgp::binary_logistic, 400, 3, 22);
  LearnerSpec forest_base;
  forest_base.kind = LearnerKind::regression_forest;
  forest_base.forest.n_trees = 5;

  auto taus = [&](const CateModel& m) {
    return predict_cate(m, data.frame.features);
  };
  EXPECT_TRUE(taus(fit_s(data.frame, LearnerSpec{}, 9))
                  .isApprox(taus(fit_s(data.frame, LearnerSpec{}, 9)), 0.0));
  EXPECT_TRUE(taus(fit_t(data.frame, forest_base, 9))
                  .isApprox(taus(fit_t(data.frame, forest_base, 9)), 0.0));
  EXPECT_TRUE(taus(fit_x(data.frame, LearnerSpec{}, 9))
                  .isApprox(taus(fit_x(data.frame, LearnerSpec{}, 9)), 0.0));
  EXPECT_TRUE(taus(fit_r(data.frame, LearnerSpec{}, 9))
                  .isApprox(taus(fit_r(data.frame, LearnerSpec{}, 9)), 0.0));
}
