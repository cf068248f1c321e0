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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "uplift/errors.hpp"
#include "uplift/random.hpp"

namespace uplift {

enum class OutcomeKind { continuous, binary };

inline std::string to_string(OutcomeKind k) {
  return k == OutcomeKind::binary ? "binary" : "continuous";
}

// One experiment: features X, arm assignment W (0 = control), outcome Y and
// an optional known propensity per unit. Immutable after construction; safe
// to share read-only across workers.
struct ExperimentFrame {
  Eigen::MatrixXd features;                  // n x d
  std::vector<int> treatment;                // arm index per unit, 0 = control
  Eigen::VectorXd outcome;                   // length n
  std::optional<Eigen::VectorXd> propensity; // length n, values in (0,1)
  OutcomeKind outcome_kind = OutcomeKind::continuous;
  std::vector<std::string> feature_names;    // size d
  std::vector<std::string> arm_labels;       // size K+1, [0] = control label

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index d() const { return features.cols(); }
  int num_arms() const { return static_cast<int>(arm_labels.size()) - 1; }

  std::vector<Eigen::Index> arm_rows(int arm) const {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n(); ++i)
      if (treatment[static_cast<std::size_t>(i)] == arm) rows.push_back(i);
    return rows;
  }
};

// Ground truth attached to a synthetic frame: per-unit effect, one column per
// non-control arm. Regeneration from (dgp_id, seed, n, d) is bit-identical.
struct SyntheticTruth {
  Eigen::MatrixXd tau;  // n x K
  std::string dgp_id;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline void validate_frame(const ExperimentFrame& f) {
  const Eigen::Index n = f.features.rows();
  const Eigen::Index d = f.features.cols();
  if (n < 1) throw InvariantError("frame must contain at least one unit");
  if (d < 1) throw InvariantError("frame must contain at least one feature");
  if (static_cast<Eigen::Index>(f.treatment.size()) != n)
    throw InvariantError("treatment length does not match feature rows");
  if (f.outcome.size() != n)
    throw InvariantError("outcome length does not match feature rows");
  if (f.propensity && f.propensity->size() != n)
    throw InvariantError("propensity length does not match feature rows");
  if (static_cast<Eigen::Index>(f.feature_names.size()) != d)
    throw InvariantError("feature_names size does not match feature columns");
  if (f.arm_labels.size() < 2)
    throw InvariantError("frame needs a control label and at least one arm");
  if (!f.features.allFinite())
    throw InvariantError("features contain NaN or Inf");
  if (!f.outcome.allFinite()) throw InvariantError("outcome contains NaN or Inf");

  const int num_arms = f.num_arms();
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(num_arms) + 1, 0);
  for (std::size_t i = 0; i < f.treatment.size(); ++i) {
    const int w = f.treatment[i];
    if (w < 0 || w > num_arms)
      throw InvariantError("treatment index " + std::to_string(w) +
                           " at row " + std::to_string(i) + " is out of range");
    ++counts[static_cast<std::size_t>(w)];
  }
  for (int k = 0; k <= num_arms; ++k)
    if (counts[static_cast<std::size_t>(k)] == 0)
      throw InvariantError("arm '" + f.arm_labels[static_cast<std::size_t>(k)] +
                           "' has no units; labels must form a contiguous set");

  if (f.outcome_kind == OutcomeKind::binary) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (f.outcome[i] != 0.0 && f.outcome[i] != 1.0)
        throw InvariantError("binary outcome at row " + std::to_string(i) +
                             " is not in {0,1}");
  }
  if (f.propensity) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = (*f.propensity)[i];
      if (!(e > 0.0 && e < 1.0))
        throw InvariantError("propensity at row " + std::to_string(i) +
                             " must lie strictly in (0,1)");
    }
  }
}

// Row subset, preserving the order of `rows`.
inline ExperimentFrame take_rows(const ExperimentFrame& f,
                                 const std::vector<Eigen::Index>& rows) {
  ExperimentFrame out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), f.d());
  out.outcome.resize(static_cast<Eigen::Index>(rows.size()));
  out.treatment.resize(rows.size());
  if (f.propensity)
    out.propensity = Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Index r = rows[i];
    out.features.row(static_cast<Eigen::Index>(i)) = f.features.row(r);
    out.outcome[static_cast<Eigen::Index>(i)] = f.outcome[r];
    out.treatment[i] = f.treatment[static_cast<std::size_t>(r)];
    if (f.propensity)
      (*out.propensity)[static_cast<Eigen::Index>(i)] = (*f.propensity)[r];
  }
  out.outcome_kind = f.outcome_kind;
  out.feature_names = f.feature_names;
  out.arm_labels = f.arm_labels;
  return out;
}

// Restrict to {control, arm}, remapping the arm to index 1. Also returns the
// original row of each kept unit.
struct ArmSlice {
  ExperimentFrame frame;
  std::vector<Eigen::Index> original_rows;
};

inline ArmSlice restrict_to_arm(const ExperimentFrame& f, int arm) {
  if (arm < 1 || arm > f.num_arms())
    throw EstimationError("arm index " + std::to_string(arm) +
                          " is out of range");
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < f.n(); ++i) {
    const int w = f.treatment[static_cast<std::size_t>(i)];
    if (w == 0 || w == arm) rows.push_back(i);
  }
  ArmSlice slice;
  slice.frame = take_rows(f, rows);
  slice.original_rows = rows;
  for (auto& w : slice.frame.treatment) w = (w == 0) ? 0 : 1;
  slice.frame.arm_labels = {f.arm_labels[0],
                            f.arm_labels[static_cast<std::size_t>(arm)]};
  return slice;
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------
// Dialect: comma-separated, header row required, UTF-8, '.' decimal, no
// quoting. Doubles are written with shortest round-trip formatting so
// repeated runs emit identical bytes.

struct CsvSchema {
  std::string treatment_col = "treatment";
  std::string outcome_col = "outcome";
  std::string control_label = "control";
  std::vector<std::string> feature_cols;  // empty: every remaining column
  std::optional<std::string> propensity_col;
  bool auto_propensity = true;  // pick up a column named "propensity"
  std::optional<OutcomeKind> outcome_kind_override;
  std::string truth_col = "__tau";  // picked up when present in the header
};

struct LoadedCsv {
  ExperimentFrame frame;
  std::optional<Eigen::VectorXd> truth;  // __tau column, when present
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double_cell(std::string_view cell, std::size_t row,
                                const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw CsvParseError("cannot parse '" + std::string(cell) +
                        "' as a number at row " + std::to_string(row) +
                        ", column '" + col + "'");
  return v;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace detail

inline LoadedCsv load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw CsvParseError("file '" + path + "' has no header row");

  const std::vector<std::string> header = detail::split_line(lines[0]);
  auto col_index = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    return std::nullopt;
  };
  auto required_col = [&](const std::string& name) -> std::size_t {
    const auto idx = col_index(name);
    if (!idx) throw SchemaError("column '" + name + "' not found in " + path);
    return *idx;
  };

  const std::size_t w_col = required_col(schema.treatment_col);
  const std::size_t y_col = required_col(schema.outcome_col);
  std::optional<std::size_t> e_col;
  if (schema.propensity_col)
    e_col = required_col(*schema.propensity_col);
  else if (schema.auto_propensity)
    e_col = col_index("propensity");
  const std::optional<std::size_t> tau_col = col_index(schema.truth_col);

  std::vector<std::string> feature_names = schema.feature_cols;
  if (feature_names.empty()) {
    std::set<std::size_t> reserved = {w_col, y_col};
    if (e_col) reserved.insert(*e_col);
    if (tau_col) reserved.insert(*tau_col);
    for (std::size_t j = 0; j < header.size(); ++j)
      if (!reserved.count(j)) feature_names.push_back(header[j]);
  }
  if (feature_names.empty())
    throw SchemaError("schema for '" + path + "' yields no feature columns");
  std::vector<std::size_t> f_cols;
  f_cols.reserve(feature_names.size());
  for (const auto& name : feature_names) f_cols.push_back(required_col(name));

  const std::size_t n = lines.size() - 1;
  if (n == 0) throw CsvParseError("file '" + path + "' contains no data rows");

  ExperimentFrame frame;
  frame.features.resize(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(feature_names.size()));
  frame.outcome.resize(static_cast<Eigen::Index>(n));
  frame.treatment.resize(n);
  frame.feature_names = feature_names;
  if (e_col) frame.propensity = Eigen::VectorXd(static_cast<Eigen::Index>(n));
  Eigen::VectorXd truth;
  if (tau_col) truth.resize(static_cast<Eigen::Index>(n));

  std::vector<std::string> w_raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<std::string> cells = detail::split_line(lines[i + 1]);
    if (cells.size() != header.size())
      throw CsvParseError("row " + std::to_string(i) + " of '" + path +
                          "' has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(header.size()));
    for (std::size_t j = 0; j < f_cols.size(); ++j)
      frame.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          detail::parse_double_cell(cells[f_cols[j]], i, feature_names[j]);
    frame.outcome[static_cast<Eigen::Index>(i)] =
        detail::parse_double_cell(cells[y_col], i, schema.outcome_col);
    if (e_col)
      (*frame.propensity)[static_cast<Eigen::Index>(i)] =
          detail::parse_double_cell(cells[*e_col], i, header[*e_col]);
    if (tau_col)
      truth[static_cast<Eigen::Index>(i)] =
          detail::parse_double_cell(cells[*tau_col], i, schema.truth_col);
    w_raw[i] = cells[w_col];
  }

  // Arm encoding: control = 0, remaining labels sorted lexically.
  std::set<std::string> labels(w_raw.begin(), w_raw.end());
  if (!labels.count(schema.control_label))
    throw SchemaError("control label '" + schema.control_label +
                      "' does not occur in column '" + schema.treatment_col +
                      "'");
  labels.erase(schema.control_label);
  frame.arm_labels.clear();
  frame.arm_labels.push_back(schema.control_label);
  frame.arm_labels.insert(frame.arm_labels.end(), labels.begin(), labels.end());
  std::map<std::string, int> arm_of;
  for (std::size_t k = 0; k < frame.arm_labels.size(); ++k)
    arm_of[frame.arm_labels[k]] = static_cast<int>(k);
  for (std::size_t i = 0; i < n; ++i) frame.treatment[i] = arm_of[w_raw[i]];

  if (schema.outcome_kind_override) {
    frame.outcome_kind = *schema.outcome_kind_override;
  } else {
    bool all01 = true;
    for (Eigen::Index i = 0; i < frame.outcome.size(); ++i)
      if (frame.outcome[i] != 0.0 && frame.outcome[i] != 1.0) {
        all01 = false;
        break;
      }
    frame.outcome_kind = all01 ? OutcomeKind::binary : OutcomeKind::continuous;
  }

  validate_frame(frame);
  LoadedCsv out;
  out.frame = std::move(frame);
  if (tau_col) out.truth = std::move(truth);
  return out;
}

// Canonical column order: features..., treatment, outcome[, propensity][, __tau].
inline void write_csv(const ExperimentFrame& f, const std::string& path,
                      const std::optional<Eigen::VectorXd>& truth = std::nullopt) {
  for (const auto& name : f.feature_names)
    if (name == "treatment" || name == "outcome" || name == "propensity" ||
        name == "__tau")
      throw SchemaError("feature name '" + name +
                        "' collides with a reserved output column");
  if (truth && truth->size() != f.n())
    throw InvariantError("truth length does not match frame rows");

  std::ostringstream os;
  for (const auto& name : f.feature_names) os << name << ',';
  os << "treatment,outcome";
  if (f.propensity) os << ",propensity";
  if (truth) os << ",__tau";
  os << '\n';
  for (Eigen::Index i = 0; i < f.n(); ++i) {
    for (Eigen::Index j = 0; j < f.d(); ++j)
      os << detail::format_double(f.features(i, j)) << ',';
    os << f.arm_labels[static_cast<std::size_t>(
              f.treatment[static_cast<std::size_t>(i)])]
       << ',' << detail::format_double(f.outcome[i]);
    if (f.propensity) os << ',' << detail::format_double((*f.propensity)[i]);
    if (truth) os << ',' << detail::format_double((*truth)[i]);
    os << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << os.str();
  if (!out) throw IoError("failed while writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Splitting and the naive estimator
// ---------------------------------------------------------------------------

struct SplitResult {
  ExperimentFrame train;
  ExperimentFrame test;
};

// Within each arm, floor(test_fraction * n_arm) units go to test. Row order
// inside each part follows the original frame.
inline SplitResult stratified_split(const ExperimentFrame& f,
                                    double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw SplitError("test_fraction must lie in (0,1)");
  std::vector<Eigen::Index> test_rows, train_rows;
  for (int arm = 0; arm <= f.num_arms(); ++arm) {
    std::vector<Eigen::Index> rows = f.arm_rows(arm);
    if (rows.size() < 2)
      throw SplitError("arm '" + f.arm_labels[static_cast<std::size_t>(arm)] +
                       "' has fewer than 2 units");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(arm)));
    for (std::size_t i = rows.size(); i > 1; --i)
      std::swap(rows[i - 1], rows[rng.uniform_index(i)]);
    const std::size_t n_test = static_cast<std::size_t>(
        std::floor(test_fraction * static_cast<double>(rows.size())));
    test_rows.insert(test_rows.end(), rows.begin(),
                     rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_rows.insert(train_rows.end(),
                      rows.begin() + static_cast<std::ptrdiff_t>(n_test),
                      rows.end());
  }
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return SplitResult{take_rows(f, train_rows), take_rows(f, test_rows)};
}

// mean(outcome | arm) - mean(outcome | control).
inline double naive_ate(const ExperimentFrame& f, int arm) {
  if (arm < 1 || arm > f.num_arms())
    throw EstimationError("arm index " + std::to_string(arm) +
                          " is out of range");
  double sum_t = 0.0, sum_c = 0.0;
  Eigen::Index n_t = 0, n_c = 0;
  for (Eigen::Index i = 0; i < f.n(); ++i) {
    const int w = f.treatment[static_cast<std::size_t>(i)];
    if (w == arm) {
      sum_t += f.outcome[i];
      ++n_t;
    } else if (w == 0) {
      sum_c += f.outcome[i];
      ++n_c;
    }
  }
  if (n_t == 0 || n_c == 0)
    throw EstimationError("naive_ate needs units in both the arm and control");
  return sum_t / static_cast<double>(n_t) - sum_c / static_cast<double>(n_c);
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

enum class Dgp { linear, heterogeneous_linear, binary_logistic, nonlinear };

inline Dgp parse_dgp(const std::string& id) {
  if (id == "linear") return Dgp::linear;
  if (id == "heterogeneous_linear") return Dgp::heterogeneous_linear;
  if (id == "binary_logistic") return Dgp::binary_logistic;
  if (id == "nonlinear") return Dgp::nonlinear;
  throw ConfigError("unknown dgp '" + id + "'");
}

inline std::string to_string(Dgp dgp) {
  switch (dgp) {
    case Dgp::linear: return "linear";
    case Dgp::heterogeneous_linear: return "heterogeneous_linear";
    case Dgp::binary_logistic: return "binary_logistic";
    case Dgp::nonlinear: return "nonlinear";
  }
  return "";
}

struct SyntheticData {
  ExperimentFrame frame;
  SyntheticTruth truth;
};

// Randomized designs: X ~ iid N(0,1), W ~ Bernoulli(0.5) with the true
// propensity 0.5 recorded, noise N(0, 0.5^2), beta drawn once from the seed
// with per-coordinate scale 0.5/sqrt(d).
inline SyntheticData generate_synthetic(Dgp dgp, Eigen::Index n, Eigen::Index d,
                                        std::uint64_t seed) {
  if (n < 10) throw InvariantError("generate_synthetic requires n >= 10");
  if (d < 1) throw InvariantError("generate_synthetic requires d >= 1");
  if (dgp == Dgp::nonlinear && d < 3)
    throw InvariantError("nonlinear dgp requires d >= 3");

  Rng rng_beta(derive_seed(seed, 11));
  Rng rng_x(derive_seed(seed, 12));
  Rng rng_w(derive_seed(seed, 13));
  Rng rng_noise(derive_seed(seed, 14));
  Rng rng_y(derive_seed(seed, 15));

  Eigen::VectorXd beta(d);
  const double beta_scale = 0.5 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index j = 0; j < d; ++j) beta[j] = beta_scale * rng_beta.normal();

  ExperimentFrame f;
  f.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) f.features(i, j) = rng_x.normal();
  f.treatment.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    f.treatment[static_cast<std::size_t>(i)] = rng_w.bernoulli(0.5) ? 1 : 0;
  f.propensity = Eigen::VectorXd::Constant(n, 0.5);
  f.outcome.resize(n);
  f.feature_names.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j)
    f.feature_names[static_cast<std::size_t>(j)] =
        "x" + std::to_string(j + 1);
  f.arm_labels = {"control", "treated"};

  Eigen::VectorXd tau(n);
  const Eigen::VectorXd xb = f.features * beta;
  const double noise_sd = 0.5;
  switch (dgp) {
    case Dgp::linear:
      f.outcome_kind = OutcomeKind::continuous;
      for (Eigen::Index i = 0; i < n; ++i) {
        tau[i] = 0.5;
        const double w = f.treatment[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        f.outcome[i] = xb[i] + tau[i] * w + noise_sd * rng_noise.normal();
      }
      break;
    case Dgp::heterogeneous_linear:
      f.outcome_kind = OutcomeKind::continuous;
      for (Eigen::Index i = 0; i < n; ++i) {
        tau[i] = 0.5 + f.features(i, 0);
        const double w = f.treatment[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        f.outcome[i] = xb[i] + tau[i] * w + noise_sd * rng_noise.normal();
      }
      break;
    case Dgp::binary_logistic:
      f.outcome_kind = OutcomeKind::binary;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double effect = 0.5 + 0.5 * f.features(i, 0);
        const double p1 = sigmoid(xb[i] + effect);
        const double p0 = sigmoid(xb[i]);
        tau[i] = p1 - p0;  // true risk difference
        const bool treated = f.treatment[static_cast<std::size_t>(i)] == 1;
        f.outcome[i] = rng_y.bernoulli(treated ? p1 : p0) ? 1.0 : 0.0;
      }
      break;
    case Dgp::nonlinear:
      f.outcome_kind = OutcomeKind::continuous;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double x1 = f.features(i, 0);
        const double x2 = f.features(i, 1);
        const double x3 = f.features(i, 2);
        tau[i] = 0.5 * (x1 + x2);
        const double base = std::sin(3.14159265358979323846 * x1 * x2) +
                            2.0 * (x3 - 0.5) * (x3 - 0.5);
        const double w = f.treatment[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        f.outcome[i] = base + tau[i] * w + noise_sd * rng_noise.normal();
      }
      break;
  }

  validate_frame(f);
  SyntheticData out;
  out.frame = std::move(f);
  out.truth.tau = tau;
  out.truth.dgp_id = to_string(dgp);
  out.truth.seed = seed;
  return out;
}

}  // namespace uplift
