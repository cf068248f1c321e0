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
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uplift/dataset.hpp"
#include "uplift/errors.hpp"
#include "uplift/parallel.hpp"
#include "uplift/random.hpp"

namespace uplift {

// Uplift decision trees split directly on the divergence between treated and
// control outcome distributions in the children. Binary outcomes only; the
// meta-learners cover continuous outcomes.

enum class Divergence { kl, euclidean, chi_squared };

inline Divergence parse_divergence(const std::string& s) {
  if (s == "kl") return Divergence::kl;
  if (s == "euclidean") return Divergence::euclidean;
  if (s == "chi_squared") return Divergence::chi_squared;
  throw ConfigError("unknown split criterion '" + s + "'");
}

inline std::string to_string(Divergence d) {
  switch (d) {
    case Divergence::kl: return "kl";
    case Divergence::euclidean: return "euclidean";
    case Divergence::chi_squared: return "chi_squared";
  }
  return "";
}

struct UpliftForestSpec {
  Divergence criterion = Divergence::kl;
  int n_trees = 100;
  int max_depth = 5;
  int min_leaf_per_group = 10;
  double feature_subsample = 0.0;  // <= 0 resolves to sqrt(d)/d at fit time
  bool bootstrap = true;
  double delta = 1e-6;  // rate clamp for KL / chi-squared singularities
  int threads = 1;
};

inline void validate_spec(const UpliftForestSpec& s) {
  if (s.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (s.max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (s.min_leaf_per_group < 1)
    throw ConfigError("min_leaf_per_group must be >= 1");
  if (!(s.delta > 0.0 && s.delta < 0.1))
    throw ConfigError("delta must lie in (0, 0.1)");
  if (s.feature_subsample > 1.0)
    throw ConfigError("feature_subsample must lie in (0,1]");
}

// Divergence between binary-outcome positive rates p (treated) and q
// (control). Rates are clamped into [delta, 1-delta] for KL and chi-squared.
inline double divergence(double p, double q, Divergence kind,
                         double delta = 1e-6) {
  switch (kind) {
    case Divergence::euclidean: {
      const double diff = p - q;
      return 2.0 * diff * diff;
    }
    case Divergence::kl: {
      const double pc = std::clamp(p, delta, 1.0 - delta);
      const double qc = std::clamp(q, delta, 1.0 - delta);
      return pc * std::log(pc / qc) +
             (1.0 - pc) * std::log((1.0 - pc) / (1.0 - qc));
    }
    case Divergence::chi_squared: {
      const double pc = std::clamp(p, delta, 1.0 - delta);
      const double qc = std::clamp(q, delta, 1.0 - delta);
      const double diff = pc - qc;
      return diff * diff / qc + diff * diff / (1.0 - qc);
    }
  }
  return 0.0;
}

// Per-group occupancy of a node: counts and positive counts for control (0)
// and each arm (1..K).
struct GroupCounts {
  std::vector<long> n;
  std::vector<long> pos;

  explicit GroupCounts(int num_arms = 0)
      : n(static_cast<std::size_t>(num_arms) + 1, 0),
        pos(static_cast<std::size_t>(num_arms) + 1, 0) {}

  int num_arms() const { return static_cast<int>(n.size()) - 1; }
  long total() const {
    long t = 0;
    for (const long c : n) t += c;
    return t;
  }
  double rate(int g) const {
    return static_cast<double>(pos[static_cast<std::size_t>(g)]) /
           static_cast<double>(n[static_cast<std::size_t>(g)]);
  }
};

namespace detail {

// Sum over arms of D(p_k, p_0); arms absent from the node contribute 0.
inline double node_divergence(const GroupCounts& c, Divergence kind,
                              double delta) {
  double sum = 0.0;
  const double q = c.rate(0);
  for (int k = 1; k <= c.num_arms(); ++k) {
    if (c.n[static_cast<std::size_t>(k)] == 0) continue;
    sum += divergence(c.rate(k), q, kind, delta);
  }
  return sum;
}

// gain = sum_child (n_child/n) * sum_k D(p_k, p_0) - sum_k D at the parent.
// A pure function of the integer counts, so the sweep inside the tree and an
// external candidate enumeration produce bit-identical gains.
inline double gain_from_counts(const GroupCounts& left,
                               const GroupCounts& right, Divergence kind,
                               double delta) {
  GroupCounts parent(left.num_arms());
  for (std::size_t g = 0; g < parent.n.size(); ++g) {
    parent.n[g] = left.n[g] + right.n[g];
    parent.pos[g] = left.pos[g] + right.pos[g];
  }
  const double n = static_cast<double>(parent.total());
  const double wl = static_cast<double>(left.total()) / n;
  const double wr = static_cast<double>(right.total()) / n;
  return wl * node_divergence(left, kind, delta) +
         wr * node_divergence(right, kind, delta) -
         node_divergence(parent, kind, delta);
}

// Groups present at the node must keep min_leaf_per_group units in both
// children; control must be present on both sides.
inline bool feasible_children(const GroupCounts& left, const GroupCounts& right,
                              int min_leaf_per_group) {
  for (std::size_t g = 0; g < left.n.size(); ++g) {
    const long total = left.n[g] + right.n[g];
    if (total == 0) continue;
    if (left.n[g] < min_leaf_per_group || right.n[g] < min_leaf_per_group)
      return false;
  }
  return left.n[0] >= min_leaf_per_group && right.n[0] >= min_leaf_per_group;
}

}  // namespace detail

// Gain of splitting `rows` of `frame` at (feature, threshold), or nullopt
// when the split is not a feasible candidate (a group-size violation).
inline std::optional<double> split_gain(const ExperimentFrame& frame,
                                        const std::vector<Eigen::Index>& rows,
                                        int feature, double threshold,
                                        Divergence kind, double delta,
                                        int min_leaf_per_group) {
  if (frame.outcome_kind != OutcomeKind::binary)
    throw FitError("uplift split gains require a binary outcome");
  const int num_arms = frame.num_arms();
  GroupCounts left(num_arms), right(num_arms);
  for (const Eigen::Index r : rows) {
    const int g = frame.treatment[static_cast<std::size_t>(r)];
    GroupCounts& side =
        frame.features(r, feature) <= threshold ? left : right;
    ++side.n[static_cast<std::size_t>(g)];
    if (frame.outcome[r] == 1.0) ++side.pos[static_cast<std::size_t>(g)];
  }
  if (!detail::feasible_children(left, right, min_leaf_per_group))
    return std::nullopt;
  return detail::gain_from_counts(left, right, kind, delta);
}

// Either an internal split or a leaf carrying per-group counts, positive
// counts, and the per-arm uplift estimate p_k - p_0.
struct UpliftTreeNode {
  int feature = -1;  // < 0 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<long> n;        // leaf: per-group counts, control first
  std::vector<long> pos;      // leaf: per-group positive counts
  std::vector<double> uplift; // leaf: per-arm p_k - p_0

  bool is_leaf() const { return feature < 0; }
};

struct UpliftTree {
  std::vector<UpliftTreeNode> nodes;  // nodes[0] is the root

  const UpliftTreeNode& leaf_for(const Eigen::RowVectorXd& x) const {
    int idx = 0;
    while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
      const UpliftTreeNode& nd = nodes[static_cast<std::size_t>(idx)];
      idx = (x[nd.feature] <= nd.threshold) ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(idx)];
  }
};

namespace detail {

struct UpliftTreeBuilder {
  const ExperimentFrame& frame;
  const UpliftForestSpec& spec;
  double subsample_fraction;
  Rng& rng;
  UpliftTree tree;

  int build(std::vector<Eigen::Index>& rows, int depth) {
    const int num_arms = frame.num_arms();
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(UpliftTreeNode{});

    if (depth < spec.max_depth) {
      const auto best = find_best_split(rows, num_arms);
      if (best) {
        std::vector<Eigen::Index> left_rows, right_rows;
        for (const Eigen::Index r : rows)
          (frame.features(r, best->feature) <= best->threshold ? left_rows
                                                               : right_rows)
              .push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        const int left = build(left_rows, depth + 1);
        const int right = build(right_rows, depth + 1);
        UpliftTreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
        nd.feature = best->feature;
        nd.threshold = best->threshold;
        nd.left = left;
        nd.right = right;
        return idx;
      }
    }

    // leaf: raw group rates, no clamping
    GroupCounts counts(num_arms);
    for (const Eigen::Index r : rows) {
      const int g = frame.treatment[static_cast<std::size_t>(r)];
      ++counts.n[static_cast<std::size_t>(g)];
      if (frame.outcome[r] == 1.0) ++counts.pos[static_cast<std::size_t>(g)];
    }
    UpliftTreeNode& nd = tree.nodes[static_cast<std::size_t>(idx)];
    nd.n = counts.n;
    nd.pos = counts.pos;
    nd.uplift.resize(static_cast<std::size_t>(num_arms), 0.0);
    const double q = counts.rate(0);
    for (int k = 1; k <= num_arms; ++k)
      nd.uplift[static_cast<std::size_t>(k - 1)] = counts.rate(k) - q;
    return idx;
  }

  struct Split {
    int feature;
    double threshold;
  };

  std::optional<Split> find_best_split(const std::vector<Eigen::Index>& rows,
                                       int num_arms) {
    GroupCounts total(num_arms);
    for (const Eigen::Index r : rows) {
      const int g = frame.treatment[static_cast<std::size_t>(r)];
      ++total.n[static_cast<std::size_t>(g)];
      if (frame.outcome[r] == 1.0) ++total.pos[static_cast<std::size_t>(g)];
    }

    // zero-gain splits must not fire on rounding noise in w_L*D + w_R*D - D
    const double parent_div =
        node_divergence(total, spec.criterion, spec.delta);
    double best_gain = 1e-10 * std::max(1.0, parent_div);
    std::optional<Split> best;
    std::vector<int> feats = sample_features();

    struct Entry {
      double x;
      int group;
      bool pos;
    };
    std::vector<Entry> order(rows.size());
    for (const int f : feats) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Eigen::Index r = rows[i];
        order[i] = {frame.features(r, f),
                    frame.treatment[static_cast<std::size_t>(r)],
                    frame.outcome[r] == 1.0};
      }
      std::sort(order.begin(), order.end(),
                [](const Entry& a, const Entry& b) { return a.x < b.x; });
      GroupCounts left(num_arms);
      for (std::size_t i = 1; i < order.size(); ++i) {
        ++left.n[static_cast<std::size_t>(order[i - 1].group)];
        if (order[i - 1].pos)
          ++left.pos[static_cast<std::size_t>(order[i - 1].group)];
        if (order[i - 1].x >= order[i].x) continue;
        GroupCounts right(num_arms);
        for (std::size_t g = 0; g < right.n.size(); ++g) {
          right.n[g] = total.n[g] - left.n[g];
          right.pos[g] = total.pos[g] - left.pos[g];
        }
        if (!feasible_children(left, right, spec.min_leaf_per_group)) continue;
        const double gain =
            gain_from_counts(left, right, spec.criterion, spec.delta);
        if (gain > best_gain) {  // ties keep the earliest candidate
          best_gain = gain;
          best = Split{f, midpoint(order[i - 1].x, order[i].x)};
        }
      }
    }
    return best;
  }

  static double midpoint(double lo, double hi) {
    const double mid = lo + 0.5 * (hi - lo);
    return mid < hi ? mid : lo;  // keep the partition at "x <= t" exact
  }

  std::vector<int> sample_features() {
    const Eigen::Index d = frame.d();
    const int m = std::clamp(
        static_cast<int>(
            std::lround(subsample_fraction * static_cast<double>(d))),
        1, static_cast<int>(d));
    std::vector<int> feats(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j)
      feats[static_cast<std::size_t>(j)] = static_cast<int>(j);
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

inline double resolve_subsample(const UpliftForestSpec& spec, Eigen::Index d) {
  if (spec.feature_subsample > 0.0) return spec.feature_subsample;
  return std::sqrt(static_cast<double>(d)) / static_cast<double>(d);
}

}  // namespace detail

// Greedy recursive partitioning on divergence gain. Candidate thresholds are
// midpoints of sorted distinct values per (subsampled) feature; ties break
// toward the lowest feature index, then the lowest threshold. Stops at
// max_depth, when no candidate is feasible, or when the best gain is <= 0.
inline UpliftTree fit_uplift_tree(const ExperimentFrame& frame,
                                  const UpliftForestSpec& spec,
                                  std::uint64_t seed) {
  validate_spec(spec);
  if (frame.outcome_kind != OutcomeKind::binary)
    throw FitError(
        "uplift trees require a binary outcome; use the meta-learners for "
        "continuous outcomes");
  for (int g = 0; g <= frame.num_arms(); ++g) {
    const auto rows = frame.arm_rows(g);
    if (rows.size() < 2 * static_cast<std::size_t>(spec.min_leaf_per_group))
      throw FitError("group '" + frame.arm_labels[static_cast<std::size_t>(g)] +
                     "' has " + std::to_string(rows.size()) +
                     " units, needs at least 2*min_leaf_per_group");
  }
  Rng rng(seed);
  detail::UpliftTreeBuilder builder{
      frame, spec, detail::resolve_subsample(spec, frame.d()), rng, {}};
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(frame.n()));
  for (Eigen::Index i = 0; i < frame.n(); ++i)
    rows[static_cast<std::size_t>(i)] = i;
  builder.tree.nodes.reserve(64);
  builder.build(rows, 0);
  return std::move(builder.tree);
}

struct UpliftForestModel {
  UpliftForestSpec spec;
  std::vector<UpliftTree> trees;
  Eigen::Index train_d = 0;
  std::vector<std::string> arm_labels;  // size K+1, control first

  int num_arms() const { return static_cast<int>(arm_labels.size()) - 1; }
};

// n_trees trees on arm-stratified bootstrap resamples, per-tree seeds derived
// from (seed, tree index); prediction is the mean of leaf uplift vectors.
inline UpliftForestModel fit_uplift_forest_model(const ExperimentFrame& frame,
                                                 const UpliftForestSpec& spec,
                                                 std::uint64_t seed) {
  validate_spec(spec);
  if (frame.outcome_kind != OutcomeKind::binary)
    throw FitError(
        "uplift forests require a binary outcome; use the meta-learners for "
        "continuous outcomes");
  std::vector<std::vector<Eigen::Index>> group_rows;
  for (int g = 0; g <= frame.num_arms(); ++g)
    group_rows.push_back(frame.arm_rows(g));

  UpliftForestModel model;
  model.spec = spec;
  model.trees.resize(static_cast<std::size_t>(spec.n_trees));
  model.train_d = frame.d();
  model.arm_labels = frame.arm_labels;

  detail::parallel_for(model.trees.size(), spec.threads, [&](std::size_t t) {
    const std::uint64_t tree_seed =
        derive_seed(seed, static_cast<std::uint64_t>(t));
    if (spec.bootstrap) {
      Rng rng(tree_seed);
      std::vector<Eigen::Index> sample;
      sample.reserve(static_cast<std::size_t>(frame.n()));
      for (const auto& rows : group_rows)
        for (std::size_t i = 0; i < rows.size(); ++i)
          sample.push_back(rows[rng.uniform_index(rows.size())]);
      const ExperimentFrame resampled = take_rows(frame, sample);
      model.trees[t] = fit_uplift_tree(resampled, spec, rng.next_u64());
    } else {
      model.trees[t] = fit_uplift_tree(frame, spec, tree_seed);
    }
  });
  return model;
}

// Routes each row through each tree and averages the per-arm leaf estimates.
inline Eigen::MatrixXd predict_uplift(const UpliftForestModel& model,
                                      const Eigen::MatrixXd& X) {
  if (X.cols() != model.train_d)
    throw InvariantError("predict expects " + std::to_string(model.train_d) +
                         " feature columns, got " + std::to_string(X.cols()));
  const int K = model.num_arms();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), K);
  for (const auto& tree : model.trees) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const UpliftTreeNode& leaf = tree.leaf_for(X.row(i));
      for (int k = 0; k < K; ++k)
        out(i, k) += leaf.uplift[static_cast<std::size_t>(k)];
    }
  }
  return out / static_cast<double>(model.trees.size());
}

}  // namespace uplift
