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

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uplift/errors.hpp"
#include "uplift/meta.hpp"

namespace uplift {

// JSON persistence for fitted models and reports. Field order is fixed and
// floats use shortest round-trip formatting, so save -> load -> save yields
// identical bytes. Worker counts are runtime knobs and are never serialized.

using json = nlohmann::ordered_json;

inline constexpr const char* kModelSchemaVersion = "1";

namespace detail {

inline json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

// Regression tree nodes, pre-order: {"f","t","l","r"} or {"m": leaf mean}.
inline json regression_node_to_json(const RegressionTree& tree, int idx) {
  const TreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
  json j;
  if (nd.is_leaf()) {
    j["m"] = nd.value;
    return j;
  }
  j["f"] = nd.feature;
  j["t"] = nd.threshold;
  j["l"] = regression_node_to_json(tree, nd.left);
  j["r"] = regression_node_to_json(tree, nd.right);
  return j;
}

inline int regression_node_from_json(const json& j, RegressionTree& tree) {
  const int idx = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(TreeNode{});
  if (j.contains("m")) {
    tree.nodes[static_cast<std::size_t>(idx)].value = j.at("m").get<double>();
    return idx;
  }
  const int feature = j.at("f").get<int>();
  const double threshold = j.at("t").get<double>();
  const int left = regression_node_from_json(j.at("l"), tree);
  const int right = regression_node_from_json(j.at("r"), tree);
  TreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
  nd.feature = feature;
  nd.threshold = threshold;
  nd.left = left;
  nd.right = right;
  return idx;
}

// Uplift tree nodes: {"f","t","l","r"} or {"leaf":{"n","pos","uplift"}}.
inline json uplift_node_to_json(const UpliftTree& tree, int idx) {
  const UpliftTreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
  json j;
  if (nd.is_leaf()) {
    json leaf;
    leaf["n"] = nd.n;
    leaf["pos"] = nd.pos;
    leaf["uplift"] = nd.uplift;
    j["leaf"] = std::move(leaf);
    return j;
  }
  j["f"] = nd.feature;
  j["t"] = nd.threshold;
  j["l"] = uplift_node_to_json(tree, nd.left);
  j["r"] = uplift_node_to_json(tree, nd.right);
  return j;
}

inline int uplift_node_from_json(const json& j, UpliftTree& tree) {
  const int idx = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(UpliftTreeNode{});
  if (j.contains("leaf")) {
    const json& leaf = j.at("leaf");
    UpliftTreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
    nd.n = leaf.at("n").get<std::vector<long>>();
    nd.pos = leaf.at("pos").get<std::vector<long>>();
    nd.uplift = leaf.at("uplift").get<std::vector<double>>();
    return idx;
  }
  const int feature = j.at("f").get<int>();
  const double threshold = j.at("t").get<double>();
  const int left = uplift_node_from_json(j.at("l"), tree);
  const int right = uplift_node_from_json(j.at("r"), tree);
  UpliftTreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
  nd.feature = feature;
  nd.threshold = threshold;
  nd.left = left;
  nd.right = right;
  return idx;
}

}  // namespace detail

inline json learner_to_json(const LearnerModel& m) {
  json j;
  j["kind"] = to_string(m.spec.kind);
  j["train_n"] = m.train_n;
  j["train_d"] = m.train_d;
  switch (m.spec.kind) {
    case LearnerKind::ridge:
      j["ridge_lambda"] = m.spec.ridge_lambda;
      j["weights"] = detail::vector_to_json(m.weights);
      j["intercept"] = m.intercept;
      break;
    case LearnerKind::logistic:
      j["max_iter"] = m.spec.logistic.max_iter;
      j["tol"] = m.spec.logistic.tol;
      j["weights"] = detail::vector_to_json(m.weights);
      j["intercept"] = m.intercept;
      break;
    case LearnerKind::regression_forest: {
      j["n_trees"] = m.spec.forest.n_trees;
      j["max_depth"] = m.spec.forest.max_depth;
      j["min_leaf"] = m.spec.forest.min_leaf;
      j["feature_subsample"] = m.spec.forest.feature_subsample;
      j["bootstrap"] = m.spec.forest.bootstrap;
      json trees = json::array();
      for (const auto& tree : m.trees)
        trees.push_back(detail::regression_node_to_json(tree, 0));
      j["trees"] = std::move(trees);
      break;
    }
  }
  return j;
}

inline LearnerModel learner_from_json(const json& j) {
  LearnerModel m;
  m.spec.kind = parse_learner_kind(j.at("kind").get<std::string>());
  m.train_n = j.at("train_n").get<Eigen::Index>();
  m.train_d = j.at("train_d").get<Eigen::Index>();
  switch (m.spec.kind) {
    case LearnerKind::ridge:
      m.spec.ridge_lambda = j.at("ridge_lambda").get<double>();
      m.weights = detail::vector_from_json(j.at("weights"));
      m.intercept = j.at("intercept").get<double>();
      break;
    case LearnerKind::logistic:
      m.spec.logistic.max_iter = j.at("max_iter").get<int>();
      m.spec.logistic.tol = j.at("tol").get<double>();
      m.weights = detail::vector_from_json(j.at("weights"));
      m.intercept = j.at("intercept").get<double>();
      break;
    case LearnerKind::regression_forest:
      m.spec.forest.n_trees = j.at("n_trees").get<int>();
      m.spec.forest.max_depth = j.at("max_depth").get<int>();
      m.spec.forest.min_leaf = j.at("min_leaf").get<int>();
      m.spec.forest.feature_subsample = j.at("feature_subsample").get<double>();
      m.spec.forest.bootstrap = j.at("bootstrap").get<bool>();
      for (const auto& t : j.at("trees")) {
        RegressionTree tree;
        detail::regression_node_from_json(t, tree);
        m.trees.push_back(std::move(tree));
      }
      break;
  }
  return m;
}

inline json spec_to_json(const LearnerSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["ridge_lambda"] = s.ridge_lambda;
  j["forest"] = {{"n_trees", s.forest.n_trees},
                 {"max_depth", s.forest.max_depth},
                 {"min_leaf", s.forest.min_leaf},
                 {"feature_subsample", s.forest.feature_subsample},
                 {"bootstrap", s.forest.bootstrap}};
  j["logistic"] = {{"max_iter", s.logistic.max_iter},
                   {"tol", s.logistic.tol}};
  return j;
}

inline LearnerSpec spec_from_json(const json& j) {
  LearnerSpec s;
  s.kind = parse_learner_kind(j.at("kind").get<std::string>());
  s.ridge_lambda = j.at("ridge_lambda").get<double>();
  const json& f = j.at("forest");
  s.forest.n_trees = f.at("n_trees").get<int>();
  s.forest.max_depth = f.at("max_depth").get<int>();
  s.forest.min_leaf = f.at("min_leaf").get<int>();
  s.forest.feature_subsample = f.at("feature_subsample").get<double>();
  s.forest.bootstrap = f.at("bootstrap").get<bool>();
  const json& l = j.at("logistic");
  s.logistic.max_iter = l.at("max_iter").get<int>();
  s.logistic.tol = l.at("tol").get<double>();
  return s;
}

inline json forest_spec_to_json(const UpliftForestSpec& s) {
  json j;
  j["criterion"] = to_string(s.criterion);
  j["n_trees"] = s.n_trees;
  j["max_depth"] = s.max_depth;
  j["min_leaf_per_group"] = s.min_leaf_per_group;
  j["feature_subsample"] = s.feature_subsample;
  j["bootstrap"] = s.bootstrap;
  j["delta"] = s.delta;
  return j;
}

inline UpliftForestSpec forest_spec_from_json(const json& j) {
  UpliftForestSpec s;
  s.criterion = parse_divergence(j.at("criterion").get<std::string>());
  s.n_trees = j.at("n_trees").get<int>();
  s.max_depth = j.at("max_depth").get<int>();
  s.min_leaf_per_group = j.at("min_leaf_per_group").get<int>();
  s.feature_subsample = j.at("feature_subsample").get<double>();
  s.bootstrap = j.at("bootstrap").get<bool>();
  s.delta = j.at("delta").get<double>();
  return s;
}

inline json model_to_json(const CateModel& m) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["method"] = to_string(m.method);
  j["arm_labels"] = m.arm_labels;
  j["feature_names"] = m.feature_names;
  j["outcome_kind"] = to_string(m.outcome_kind);
  j["seed"] = m.seed;
  j["propensity_clip"] = m.propensity_clip;
  j["base_spec"] = spec_to_json(m.base_spec);

  json c;
  auto models_to_json = [](const std::vector<LearnerModel>& models) {
    json arr = json::array();
    for (const auto& lm : models) arr.push_back(learner_to_json(lm));
    return arr;
  };
  switch (m.method) {
    case CateMethod::s:
      c["s_models"] = models_to_json(m.s_models);
      break;
    case CateMethod::t:
      c["mu_control"] = learner_to_json(m.mu_control);
      c["mu_arm"] = models_to_json(m.mu_arm);
      break;
    case CateMethod::x:
      c["mu_control"] = learner_to_json(m.mu_control);
      c["mu_arm"] = models_to_json(m.mu_arm);
      c["tau0"] = models_to_json(m.tau0_models);
      c["tau1"] = models_to_json(m.tau1_models);
      c["g_models"] = models_to_json(m.g_models);
      if (m.g_override)
        c["g_override"] = *m.g_override;
      else
        c["g_override"] = nullptr;
      break;
    case CateMethod::r:
      c["r_models"] = models_to_json(m.r_models);
      break;
    case CateMethod::uplift_forest: {
      c["spec"] = forest_spec_to_json(m.forest->spec);
      json trees = json::array();
      for (const auto& tree : m.forest->trees)
        trees.push_back(detail::uplift_node_to_json(tree, 0));
      c["trees"] = std::move(trees);
      break;
    }
  }
  j["components"] = std::move(c);
  j["created_by"] = {{"tool", "upliftkit"}, {"version", "0.1.0"}};
  return j;
}

inline CateModel model_from_json(const json& j) {
  const std::string version = j.at("schema_version").get<std::string>();
  if (version != kModelSchemaVersion)
    throw SchemaError("unsupported model schema_version '" + version + "'");
  CateModel m;
  m.method = parse_cate_method(j.at("method").get<std::string>());
  m.arm_labels = j.at("arm_labels").get<std::vector<std::string>>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  const std::string kind = j.at("outcome_kind").get<std::string>();
  if (kind != "binary" && kind != "continuous")
    throw SchemaError("unknown outcome_kind '" + kind + "'");
  m.outcome_kind =
      kind == "binary" ? OutcomeKind::binary : OutcomeKind::continuous;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.propensity_clip = j.at("propensity_clip").get<double>();
  m.base_spec = spec_from_json(j.at("base_spec"));
  m.train_d = static_cast<Eigen::Index>(m.feature_names.size());

  const json& c = j.at("components");
  auto models_from_json = [](const json& arr) {
    std::vector<LearnerModel> models;
    for (const auto& lm : arr) models.push_back(learner_from_json(lm));
    return models;
  };
  switch (m.method) {
    case CateMethod::s:
      m.s_models = models_from_json(c.at("s_models"));
      break;
    case CateMethod::t:
      m.mu_control = learner_from_json(c.at("mu_control"));
      m.mu_arm = models_from_json(c.at("mu_arm"));
      break;
    case CateMethod::x:
      m.mu_control = learner_from_json(c.at("mu_control"));
      m.mu_arm = models_from_json(c.at("mu_arm"));
      m.tau0_models = models_from_json(c.at("tau0"));
      m.tau1_models = models_from_json(c.at("tau1"));
      m.g_models = models_from_json(c.at("g_models"));
      if (!c.at("g_override").is_null())
        m.g_override = c.at("g_override").get<double>();
      break;
    case CateMethod::r:
      m.r_models = models_from_json(c.at("r_models"));
      break;
    case CateMethod::uplift_forest: {
      UpliftForestModel forest;
      forest.spec = forest_spec_from_json(c.at("spec"));
      for (const auto& t : c.at("trees")) {
        UpliftTree tree;
        detail::uplift_node_from_json(t, tree);
        forest.trees.push_back(std::move(tree));
      }
      forest.train_d = m.train_d;
      forest.arm_labels = m.arm_labels;
      m.forest = std::move(forest);
      break;
    }
  }
  return m;
}

inline json report_to_json(const AteReport& r) {
  json j;
  j["arm"] = r.arm;
  j["method"] = r.method;
  j["estimate"] = r.estimate;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["b"] = r.bootstrap_draws;
  return j;
}

inline void save_model(const CateModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << model_to_json(m).dump(2) << '\n';
  if (!out) throw IoError("failed while writing '" + path + "'");
}

inline CateModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json j;
  try {
    j = json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("model file '" + path + "' is not valid JSON: " +
                      e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("model file '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace uplift
