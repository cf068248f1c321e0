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

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uplift/dataset.hpp"
#include "uplift/errors.hpp"
#include "uplift/eval.hpp"
#include "uplift/meta.hpp"
#include "uplift/serialize.hpp"

namespace uplift::cli {

// Exit codes: 0 success, 2 usage error, 3 data/validation error,
// 4 numeric/fit error. The summary object goes to stdout; diagnostics to
// stderr. Output files are written only after a run has fully computed, so
// usage errors never leave partial artifacts behind.

struct RunConfig {
  // paths
  std::string in_path;
  std::string out_path;
  std::string model_path;
  std::string config_path;
  // schema
  std::string treatment_col = "treatment";
  std::string outcome_col = "outcome";
  std::string control_label = "control";
  std::vector<std::string> feature_cols;
  std::string propensity_col;
  std::string outcome_kind = "auto";
  std::string truth_col = "__tau";
  // estimator
  std::string method = "t";
  std::string base = "ridge";
  double ridge_lambda = 1e-3;
  int n_trees = 100;
  int max_depth = 6;
  int min_leaf = 5;
  double feature_subsample = 1.0;
  int max_iter = 100;
  double tol = 1e-8;
  // uplift forest
  std::string criterion = "kl";
  int uf_trees = 100;
  int uf_max_depth = 5;
  int min_leaf_per_group = 10;
  double uf_feature_subsample = 0.0;  // <= 0: sqrt(d)/d
  bool uf_no_bootstrap = false;
  double delta = 1e-6;
  // run
  std::uint64_t seed = 42;
  int threads = 1;
  double eps = kDefaultPropensityClip;
  int bootstrap_b = 200;
  double fraction = 0.0;  // top-k targeting; 0 disables
  double threshold = 0.0;
  double test_fraction = 0.0;  // train holdout; 0 disables
  // simulate
  std::string dgp = "linear";
  long n = 1000;
  int d = 5;
  bool with_truth = false;
  // evaluate
  std::string scores_col;
  std::string arm_label;
  std::string format = "csv";
};

namespace detail {

inline CsvSchema schema_from(const RunConfig& cfg) {
  CsvSchema s;
  s.treatment_col = cfg.treatment_col;
  s.outcome_col = cfg.outcome_col;
  s.control_label = cfg.control_label;
  s.feature_cols = cfg.feature_cols;
  if (cfg.propensity_col == "none")
    s.auto_propensity = false;
  else if (!cfg.propensity_col.empty())
    s.propensity_col = cfg.propensity_col;
  if (cfg.outcome_kind == "binary")
    s.outcome_kind_override = OutcomeKind::binary;
  else if (cfg.outcome_kind == "continuous")
    s.outcome_kind_override = OutcomeKind::continuous;
  else if (cfg.outcome_kind != "auto")
    throw ConfigError("outcome-kind must be auto, binary or continuous");
  s.truth_col = cfg.truth_col;
  return s;
}

inline LearnerSpec base_spec_from(const RunConfig& cfg) {
  LearnerSpec s;
  s.kind = parse_learner_kind(cfg.base);
  s.ridge_lambda = cfg.ridge_lambda;
  s.forest.n_trees = cfg.n_trees;
  s.forest.max_depth = cfg.max_depth;
  s.forest.min_leaf = cfg.min_leaf;
  s.forest.feature_subsample = cfg.feature_subsample;
  s.forest.threads = cfg.threads;
  s.logistic.max_iter = cfg.max_iter;
  s.logistic.tol = cfg.tol;
  validate_spec(s);
  return s;
}

inline UpliftForestSpec forest_spec_from(const RunConfig& cfg) {
  UpliftForestSpec s;
  s.criterion = parse_divergence(cfg.criterion);
  s.n_trees = cfg.uf_trees;
  s.max_depth = cfg.uf_max_depth;
  s.min_leaf_per_group = cfg.min_leaf_per_group;
  s.feature_subsample = cfg.uf_feature_subsample;
  s.bootstrap = !cfg.uf_no_bootstrap;
  s.delta = cfg.delta;
  s.threads = cfg.threads;
  validate_spec(s);
  return s;
}

inline CateModel fit_by_method(const ExperimentFrame& frame,
                               const RunConfig& cfg) {
  const CateMethod method = parse_cate_method(cfg.method);
  switch (method) {
    case CateMethod::s: return fit_s(frame, base_spec_from(cfg), cfg.seed);
    case CateMethod::t: return fit_t(frame, base_spec_from(cfg), cfg.seed);
    case CateMethod::x:
      return fit_x(frame, base_spec_from(cfg), cfg.seed, std::nullopt, cfg.eps);
    case CateMethod::r:
      return fit_r(frame, base_spec_from(cfg), cfg.seed, {}, cfg.eps);
    case CateMethod::uplift_forest:
      return fit_uplift_forest(frame, forest_spec_from(cfg), cfg.seed);
  }
  throw ConfigError("unknown method '" + cfg.method + "'");
}

// Feature matrix for model-driven subcommands: selects the model's feature
// columns by name from a CSV.
inline Eigen::MatrixXd load_features(const std::string& path,
                                     const std::vector<std::string>& names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw CsvParseError("file '" + path + "' has no header row");
  const auto header = uplift::detail::split_line(lines[0]);
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    bool found = false;
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) {
        cols.push_back(j);
        found = true;
        break;
      }
    if (!found)
      throw SchemaError("model feature column '" + name + "' not found in " +
                        path);
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(lines.size() - 1),
                    static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    const auto cells = uplift::detail::split_line(lines[i + 1]);
    if (cells.size() != header.size())
      throw CsvParseError("row " + std::to_string(i) + " of '" + path +
                          "' has " + std::to_string(cells.size()) +
                          " cells, header has " +
                          std::to_string(header.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          uplift::detail::parse_double_cell(cells[cols[j]], i, names[j]);
  }
  return X;
}

inline Eigen::VectorXd load_column(const std::string& path,
                                   const std::string& name) {
  const Eigen::MatrixXd col = load_features(path, {name});
  return col.col(0);
}

inline int resolve_arm(const ExperimentFrame& frame, const std::string& label) {
  if (label.empty()) {
    if (frame.num_arms() == 1) return 1;
    throw ConfigError("--arm is required when the data has multiple arms");
  }
  for (int k = 1; k <= frame.num_arms(); ++k)
    if (frame.arm_labels[static_cast<std::size_t>(k)] == label) return k;
  throw SchemaError("arm label '" + label + "' not found in the data");
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed while writing '" + path + "'");
}

// --config file: a flat JSON object of flag names (no leading dashes) that
// merges under explicitly passed flags.
inline void apply_config(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "' for reading");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "in") cfg.in_path = value.get<std::string>();
    else if (key == "out") cfg.out_path = value.get<std::string>();
    else if (key == "model") cfg.model_path = value.get<std::string>();
    else if (key == "treatment-col") cfg.treatment_col = value.get<std::string>();
    else if (key == "outcome-col") cfg.outcome_col = value.get<std::string>();
    else if (key == "control-label") cfg.control_label = value.get<std::string>();
    else if (key == "features")
      cfg.feature_cols = value.get<std::vector<std::string>>();
    else if (key == "propensity-col")
      cfg.propensity_col = value.get<std::string>();
    else if (key == "outcome-kind") cfg.outcome_kind = value.get<std::string>();
    else if (key == "truth-col") cfg.truth_col = value.get<std::string>();
    else if (key == "method") cfg.method = value.get<std::string>();
    else if (key == "base") cfg.base = value.get<std::string>();
    else if (key == "ridge-lambda") cfg.ridge_lambda = value.get<double>();
    else if (key == "n-trees") cfg.n_trees = value.get<int>();
    else if (key == "max-depth") cfg.max_depth = value.get<int>();
    else if (key == "min-leaf") cfg.min_leaf = value.get<int>();
    else if (key == "feature-subsample")
      cfg.feature_subsample = value.get<double>();
    else if (key == "max-iter") cfg.max_iter = value.get<int>();
    else if (key == "tol") cfg.tol = value.get<double>();
    else if (key == "criterion") cfg.criterion = value.get<std::string>();
    else if (key == "uf-trees") cfg.uf_trees = value.get<int>();
    else if (key == "uf-max-depth") cfg.uf_max_depth = value.get<int>();
    else if (key == "min-leaf-per-group")
      cfg.min_leaf_per_group = value.get<int>();
    else if (key == "uf-feature-subsample")
      cfg.uf_feature_subsample = value.get<double>();
    else if (key == "no-bootstrap") cfg.uf_no_bootstrap = value.get<bool>();
    else if (key == "delta") cfg.delta = value.get<double>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "threads") cfg.threads = value.get<int>();
    else if (key == "eps") cfg.eps = value.get<double>();
    else if (key == "bootstrap-b") cfg.bootstrap_b = value.get<int>();
    else if (key == "fraction") cfg.fraction = value.get<double>();
    else if (key == "threshold") cfg.threshold = value.get<double>();
    else if (key == "test-fraction") cfg.test_fraction = value.get<double>();
    else if (key == "dgp") cfg.dgp = value.get<std::string>();
    else if (key == "n") cfg.n = value.get<long>();
    else if (key == "d") cfg.d = value.get<int>();
    else if (key == "truth") cfg.with_truth = value.get<bool>();
    else if (key == "scores-col") cfg.scores_col = value.get<std::string>();
    else if (key == "arm") cfg.arm_label = value.get<std::string>();
    else if (key == "format") cfg.format = value.get<std::string>();
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

// ---------------------------------------------------------------------------
// Subcommand handlers; each returns the stdout summary object.
// ---------------------------------------------------------------------------

inline json run_simulate(const RunConfig& cfg) {
  const SyntheticData data =
      generate_synthetic(parse_dgp(cfg.dgp), cfg.n, cfg.d, cfg.seed);
  write_csv(data.frame, cfg.out_path,
            cfg.with_truth ? std::optional<Eigen::VectorXd>(data.truth.tau.col(0))
                           : std::nullopt);
  json summary;
  summary["subcommand"] = "simulate";
  summary["out"] = cfg.out_path;
  summary["dgp"] = cfg.dgp;
  summary["n"] = data.frame.n();
  summary["d"] = data.frame.d();
  summary["seed"] = cfg.seed;
  summary["outcome_kind"] = to_string(data.frame.outcome_kind);
  return summary;
}

inline json run_train(const RunConfig& cfg) {
  const LoadedCsv loaded = load_csv(cfg.in_path, schema_from(cfg));
  ExperimentFrame frame = loaded.frame;
  std::optional<std::string> holdout_path;
  if (cfg.test_fraction > 0.0) {
    SplitResult split = stratified_split(frame, cfg.test_fraction, cfg.seed);
    frame = std::move(split.train);
    holdout_path = cfg.out_path + ".holdout.csv";
    write_csv(split.test, *holdout_path);
  }
  const CateModel model = fit_by_method(frame, cfg);
  save_model(model, cfg.out_path);
  json summary;
  summary["subcommand"] = "train";
  summary["model"] = cfg.out_path;
  summary["method"] = cfg.method;
  summary["arms"] = std::vector<std::string>(model.arm_labels.begin() + 1,
                                             model.arm_labels.end());
  summary["n"] = frame.n();
  summary["d"] = frame.d();
  if (holdout_path) summary["holdout"] = *holdout_path;
  return summary;
}

inline json run_predict(const RunConfig& cfg) {
  const CateModel model = load_model(cfg.model_path);
  const Eigen::MatrixXd X = load_features(cfg.in_path, model.feature_names);
  const Eigen::MatrixXd tau = predict_cate(model, X);
  std::ostringstream os;
  for (int k = 1; k <= model.num_arms(); ++k) {
    if (k > 1) os << ',';
    os << "cate_" << model.arm_labels[static_cast<std::size_t>(k)];
  }
  os << '\n';
  for (Eigen::Index i = 0; i < tau.rows(); ++i) {
    for (Eigen::Index k = 0; k < tau.cols(); ++k) {
      if (k > 0) os << ',';
      os << uplift::detail::format_double(tau(i, k));
    }
    os << '\n';
  }
  write_text(cfg.out_path, os.str());
  json summary;
  summary["subcommand"] = "predict";
  summary["out"] = cfg.out_path;
  summary["rows"] = tau.rows();
  summary["arms"] = model.num_arms();
  return summary;
}

inline json run_evaluate(const RunConfig& cfg) {
  const LoadedCsv loaded = load_csv(cfg.in_path, schema_from(cfg));
  const ExperimentFrame& frame = loaded.frame;
  const int arm = resolve_arm(frame, cfg.arm_label);
  const ArmSlice slice = restrict_to_arm(frame, arm);

  Eigen::VectorXd scores(slice.frame.n());
  if (!cfg.scores_col.empty()) {
    const Eigen::VectorXd full = load_column(cfg.in_path, cfg.scores_col);
    if (full.size() != frame.n())
      throw InvariantError("scores column length does not match data rows");
    for (std::size_t i = 0; i < slice.original_rows.size(); ++i)
      scores[static_cast<Eigen::Index>(i)] = full[slice.original_rows[i]];
  } else if (!cfg.model_path.empty()) {
    const CateModel model = load_model(cfg.model_path);
    int model_arm = -1;
    for (int k = 1; k <= model.num_arms(); ++k)
      if (model.arm_labels[static_cast<std::size_t>(k)] ==
          frame.arm_labels[static_cast<std::size_t>(arm)])
        model_arm = k;
    if (model_arm < 0)
      throw SchemaError("model has no arm '" +
                        frame.arm_labels[static_cast<std::size_t>(arm)] + "'");
    scores = predict_cate(model, slice.frame.features).col(model_arm - 1);
  } else {
    throw ConfigError("evaluate needs either --model or --scores-col");
  }

  const CurveTable table = uplift_curve(scores, slice.frame);
  emit_curve(table, cfg.out_path, parse_curve_format(cfg.format));

  json summary;
  summary["subcommand"] = "evaluate";
  summary["curve"] = cfg.out_path;
  summary["arm"] = frame.arm_labels[static_cast<std::size_t>(arm)];
  summary["auuc"] = table.auuc;
  summary["qini_coefficient"] = table.qini_coefficient;
  if (loaded.truth) {
    Eigen::VectorXd truth_slice(slice.frame.n());
    for (std::size_t i = 0; i < slice.original_rows.size(); ++i)
      truth_slice[static_cast<Eigen::Index>(i)] =
          (*loaded.truth)[slice.original_rows[i]];
    summary["pehe"] = pehe(scores, truth_slice);
  }
  return summary;
}

inline json run_recommend(const RunConfig& cfg) {
  const CateModel model = load_model(cfg.model_path);
  const Eigen::MatrixXd X = load_features(cfg.in_path, model.feature_names);
  const std::vector<int> arms = recommend(model, X, cfg.threshold);

  std::vector<char> targeted;
  if (cfg.fraction > 0.0) {
    targeted.assign(static_cast<std::size_t>(X.rows()), 0);
    for (const Eigen::Index i : top_k_targeting(model, X, cfg.fraction))
      targeted[static_cast<std::size_t>(i)] = 1;
  }

  std::ostringstream os;
  os << "recommended_arm";
  if (!targeted.empty()) os << ",targeted";
  os << '\n';
  for (std::size_t i = 0; i < arms.size(); ++i) {
    os << model.arm_labels[static_cast<std::size_t>(arms[i])];
    if (!targeted.empty()) os << ',' << (targeted[i] ? 1 : 0);
    os << '\n';
  }
  write_text(cfg.out_path, os.str());

  json counts;
  for (std::size_t k = 0; k < model.arm_labels.size(); ++k) {
    long c = 0;
    for (const int a : arms)
      if (a == static_cast<int>(k)) ++c;
    counts[model.arm_labels[k]] = c;
  }
  json summary;
  summary["subcommand"] = "recommend";
  summary["out"] = cfg.out_path;
  summary["rows"] = static_cast<long>(arms.size());
  summary["counts"] = std::move(counts);
  if (cfg.fraction > 0.0) summary["fraction"] = cfg.fraction;
  return summary;
}

inline json run_impact(const RunConfig& cfg) {
  const LoadedCsv loaded = load_csv(cfg.in_path, schema_from(cfg));
  const ExperimentFrame& frame = loaded.frame;
  const int arm = resolve_arm(frame, cfg.arm_label);

  const AteReport naive = naive_ate_report(frame, arm, cfg.bootstrap_b,
                                           derive_seed(cfg.seed, 1),
                                           cfg.threads);
  const AteReport ipw = ipw_ate(frame, arm, cfg.eps, cfg.bootstrap_b,
                                derive_seed(cfg.seed, 2), cfg.threads);
  const CateModel model = fit_by_method(frame, cfg);
  const std::vector<AteReport> cate_reports = ate_from_cate(
      model, frame, cfg.bootstrap_b, derive_seed(cfg.seed, 3), cfg.threads);
  const AteReport& cate = cate_reports[static_cast<std::size_t>(arm - 1)];

  json reports = json::array();
  reports.push_back(report_to_json(naive));
  reports.push_back(report_to_json(ipw));
  reports.push_back(report_to_json(cate));
  write_text(cfg.out_path, reports.dump(2) + "\n");

  json summary;
  summary["subcommand"] = "impact";
  summary["out"] = cfg.out_path;
  summary["arm"] = frame.arm_labels[static_cast<std::size_t>(arm)];
  summary["naive"] = naive.estimate;
  summary["ipw"] = ipw.estimate;
  summary["cate_mean"] = cate.estimate;
  return summary;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& args) {
  RunConfig cfg;

  // Config merges under explicit flags, so it is applied before parsing.
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      try {
        detail::apply_config(cfg, args[i + 1]);
      } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App app{"uplift modeling toolkit"};
  app.require_subcommand(1);

  auto add_schema = [&](CLI::App* sub) {
    sub->add_option("--treatment-col", cfg.treatment_col,
                    "treatment column name");
    sub->add_option("--outcome-col", cfg.outcome_col, "outcome column name");
    sub->add_option("--control-label", cfg.control_label,
                    "treatment value marking control units");
    sub->add_option("--features", cfg.feature_cols,
                    "comma-separated feature columns (default: all remaining)")
        ->delimiter(',');
    sub->add_option("--propensity-col", cfg.propensity_col,
                    "propensity column ('none' disables auto-detection of "
                    "a column named propensity)");
    sub->add_option("--outcome-kind", cfg.outcome_kind,
                    "auto, binary or continuous")
        ->check(CLI::IsMember({"auto", "binary", "continuous"}));
    sub->add_option("--truth-col", cfg.truth_col,
                    "true-effect column name (default __tau)");
  };
  auto add_estimator = [&](CLI::App* sub) {
    sub->add_option("--method", cfg.method, "s, t, x, r or uplift_forest")
        ->check(CLI::IsMember({"s", "t", "x", "r", "uplift_forest"}));
    sub->add_option("--base", cfg.base,
                    "base learner: ridge, logistic or regression_forest")
        ->check(CLI::IsMember({"ridge", "logistic", "regression_forest"}));
    sub->add_option("--ridge-lambda", cfg.ridge_lambda, "ridge penalty");
    sub->add_option("--n-trees", cfg.n_trees, "base forest trees")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-depth", cfg.max_depth, "base forest depth")
        ->check(CLI::PositiveNumber);
    sub->add_option("--min-leaf", cfg.min_leaf, "base forest min leaf rows")
        ->check(CLI::PositiveNumber);
    sub->add_option("--feature-subsample", cfg.feature_subsample,
                    "base forest per-node feature fraction");
    sub->add_option("--max-iter", cfg.max_iter, "logistic Newton iterations")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tol", cfg.tol, "logistic gradient tolerance");
    sub->add_option("--criterion", cfg.criterion,
                    "uplift forest split criterion")
        ->check(CLI::IsMember({"kl", "euclidean", "chi_squared"}));
    sub->add_option("--uf-trees", cfg.uf_trees, "uplift forest trees")
        ->check(CLI::PositiveNumber);
    sub->add_option("--uf-max-depth", cfg.uf_max_depth, "uplift forest depth")
        ->check(CLI::PositiveNumber);
    sub->add_option("--min-leaf-per-group", cfg.min_leaf_per_group,
                    "min units per group in every leaf")
        ->check(CLI::PositiveNumber);
    sub->add_option("--uf-feature-subsample", cfg.uf_feature_subsample,
                    "uplift forest feature fraction (default sqrt(d)/d)");
    sub->add_flag("--no-bootstrap", cfg.uf_no_bootstrap,
                  "fit every uplift tree on the full data");
    sub->add_option("--delta", cfg.delta, "rate clamp for KL/chi-squared");
    sub->add_option("--eps", cfg.eps, "propensity clip");
  };
  auto add_run = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "run seed (default 42)");
    sub->add_option("--threads", cfg.threads, "worker count")
        ->check(CLI::PositiveNumber);
    sub->add_option("--config", cfg.config_path,
                    "JSON config merged under explicit flags");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic data");
  simulate->add_option("--dgp", cfg.dgp, "data generating process")
      ->check(CLI::IsMember(
          {"linear", "heterogeneous_linear", "binary_logistic", "nonlinear"}));
  simulate->add_option("--n", cfg.n, "units")->check(CLI::PositiveNumber);
  simulate->add_option("--d", cfg.d, "features")->check(CLI::PositiveNumber);
  simulate->add_flag("--truth", cfg.with_truth, "write the __tau column");
  simulate->add_option("--out", cfg.out_path, "output CSV")->required();
  add_run(simulate);

  CLI::App* train = app.add_subcommand("train", "fit a CATE model");
  train->add_option("--in", cfg.in_path, "input CSV")->required();
  train->add_option("--out", cfg.out_path, "output model JSON")->required();
  train->add_option("--test-fraction", cfg.test_fraction,
                    "hold out a stratified test split before fitting")
      ->check(CLI::Range(0.0, 1.0));
  add_schema(train);
  add_estimator(train);
  add_run(train);

  CLI::App* predict = app.add_subcommand("predict", "per-arm CATE predictions");
  predict->add_option("--model", cfg.model_path, "model JSON")->required();
  predict->add_option("--in", cfg.in_path, "input CSV")->required();
  predict->add_option("--out", cfg.out_path, "output CSV")->required();
  add_run(predict);

  CLI::App* evaluate = app.add_subcommand("evaluate", "uplift/Qini curves");
  evaluate->add_option("--in", cfg.in_path, "labeled CSV")->required();
  evaluate->add_option("--out", cfg.out_path, "curve output path")->required();
  evaluate->add_option("--model", cfg.model_path, "model JSON for scores");
  evaluate->add_option("--scores-col", cfg.scores_col,
                       "score column in the input CSV");
  evaluate->add_option("--arm", cfg.arm_label, "arm label to evaluate");
  evaluate->add_option("--format", cfg.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  add_schema(evaluate);
  add_run(evaluate);

  CLI::App* recommend_cmd =
      app.add_subcommand("recommend", "per-unit arm recommendation");
  recommend_cmd->add_option("--model", cfg.model_path, "model JSON")->required();
  recommend_cmd->add_option("--in", cfg.in_path, "input CSV")->required();
  recommend_cmd->add_option("--out", cfg.out_path, "output CSV")->required();
  recommend_cmd->add_option("--threshold", cfg.threshold,
                            "recommend control unless uplift exceeds this");
  recommend_cmd->add_option("--fraction", cfg.fraction,
                            "also flag the top fraction by predicted uplift")
      ->check(CLI::Range(0.0, 1.0));
  add_run(recommend_cmd);

  CLI::App* impact =
      app.add_subcommand("impact", "naive, IPW and CATE-mean ATE reports");
  impact->add_option("--in", cfg.in_path, "input CSV")->required();
  impact->add_option("--out", cfg.out_path, "report JSON")->required();
  impact->add_option("--arm", cfg.arm_label, "arm label");
  impact->add_option("--bootstrap-b", cfg.bootstrap_b, "bootstrap draws");
  add_schema(impact);
  add_estimator(impact);
  add_run(impact);

  std::vector<const char*> argv;
  argv.push_back("upliftkit");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    json summary;
    if (simulate->parsed()) summary = detail::run_simulate(cfg);
    else if (train->parsed()) summary = detail::run_train(cfg);
    else if (predict->parsed()) summary = detail::run_predict(cfg);
    else if (evaluate->parsed()) summary = detail::run_evaluate(cfg);
    else if (recommend_cmd->parsed()) summary = detail::run_recommend(cfg);
    else summary = detail::run_impact(cfg);
    std::cout << summary.dump() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const CsvParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InvariantError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const SplitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace uplift::cli
