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
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <json.hpp>

#include "uplift/dataset.hpp"
#include "uplift/errors.hpp"

namespace uplift {

// Ranking-based uplift evaluation. Areas are discrete sums over prefix sizes
// k = 1..n, which keeps every number exactly reproducible and oracle-checkable.

struct CurveRow {
  long k = 0;        // units targeted
  double fraction = 0.0;
  double cum_gain = 0.0;
  double qini = 0.0;
};

struct CurveTable {
  std::vector<CurveRow> rows;
  double auuc = 0.0;
  double qini_coefficient = 0.0;
  std::string tie_rule = "stable-by-index";
};

// Sort units by score descending (ties stable by original index). At prefix
// k with treated count NT and control count NC:
//   cum_gain(k) = (sumYT/NT - sumYC/NC) * k, or 0 while a group is empty;
//   qini(k)     = sumYT - sumYC * NT/NC, or 0 while NC = 0;
//   auuc        = mean_k cum_gain(k);
//   qini_coefficient = (1/n) * sum_k [qini(k) - (k/n) * qini(n)].
// The frame must be restricted to one arm plus control.
inline CurveTable uplift_curve(const Eigen::VectorXd& scores,
                               const ExperimentFrame& frame) {
  const Eigen::Index n = frame.n();
  if (scores.size() != n)
    throw InvariantError("scores length does not match frame rows");
  if (!scores.allFinite()) throw InvariantError("scores contain NaN or Inf");
  int arm = -1;
  for (const int w : frame.treatment) {
    if (w == 0) continue;
    if (arm < 0) arm = w;
    if (w != arm)
      throw InvariantError(
          "uplift_curve expects a frame restricted to one arm plus control");
  }
  if (arm < 0) throw EstimationError("uplift_curve needs treated units");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return scores[a] > scores[b];
                   });

  CurveTable table;
  table.rows.resize(static_cast<std::size_t>(n));
  long nt = 0, nc = 0;
  double sum_yt = 0.0, sum_yc = 0.0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    const Eigen::Index r = order[static_cast<std::size_t>(k - 1)];
    if (frame.treatment[static_cast<std::size_t>(r)] == arm) {
      ++nt;
      sum_yt += frame.outcome[r];
    } else {
      ++nc;
      sum_yc += frame.outcome[r];
    }
    CurveRow& row = table.rows[static_cast<std::size_t>(k - 1)];
    row.k = static_cast<long>(k);
    row.fraction = static_cast<double>(k) / static_cast<double>(n);
    row.cum_gain =
        (nt > 0 && nc > 0)
            ? (sum_yt / static_cast<double>(nt) -
               sum_yc / static_cast<double>(nc)) * static_cast<double>(k)
            : 0.0;
    row.qini = nc > 0 ? sum_yt - sum_yc * static_cast<double>(nt) /
                                     static_cast<double>(nc)
                      : 0.0;
  }
  if (nt == 0 || nc == 0)
    throw EstimationError("uplift_curve needs units in both groups");

  double gain_sum = 0.0, qini_sum = 0.0;
  const double qini_n = table.rows.back().qini;
  for (const CurveRow& row : table.rows) {
    gain_sum += row.cum_gain;
    qini_sum += row.qini - row.fraction * qini_n;
  }
  table.auuc = gain_sum / static_cast<double>(n);
  table.qini_coefficient = qini_sum / static_cast<double>(n);
  return table;
}

inline double qini_coefficient(const Eigen::VectorXd& scores,
                               const ExperimentFrame& frame) {
  return uplift_curve(scores, frame).qini_coefficient;
}

// Root-mean-squared error between predicted and true per-unit effects.
inline double pehe(const Eigen::VectorXd& predicted, const SyntheticTruth& truth,
                   int arm = 1) {
  if (arm < 1 || arm > truth.tau.cols())
    throw EstimationError("truth has no arm " + std::to_string(arm));
  if (predicted.size() != truth.tau.rows())
    throw InvariantError("predicted length does not match truth");
  return std::sqrt(
      (predicted - truth.tau.col(arm - 1)).squaredNorm() /
      static_cast<double>(predicted.size()));
}

inline double pehe(const Eigen::VectorXd& predicted,
                   const Eigen::VectorXd& truth_tau) {
  if (predicted.size() != truth_tau.size())
    throw InvariantError("predicted length does not match truth");
  return std::sqrt((predicted - truth_tau).squaredNorm() /
                   static_cast<double>(predicted.size()));
}

// ---------------------------------------------------------------------------
// Emission: plot-ready files, bit-stable across runs
// ---------------------------------------------------------------------------

enum class CurveFormat { csv, json };

inline CurveFormat parse_curve_format(const std::string& s) {
  if (s == "csv") return CurveFormat::csv;
  if (s == "json") return CurveFormat::json;
  throw ConfigError("unknown curve format '" + s + "'");
}

namespace detail {

inline nlohmann::ordered_json curve_scalars(const CurveTable& t) {
  nlohmann::ordered_json j;
  j["auuc"] = t.auuc;
  j["qini_coefficient"] = t.qini_coefficient;
  j["tie_rule"] = t.tie_rule;
  return j;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace detail

// CSV: columns k,fraction,cum_gain,qini plus a "<path>.json" sidecar holding
// the scalars. JSON: one object with rows and scalars.
inline void emit_curve(const CurveTable& table, const std::string& path,
                       CurveFormat format) {
  if (format == CurveFormat::csv) {
    std::ostringstream os;
    os << "k,fraction,cum_gain,qini\n";
    for (const CurveRow& row : table.rows)
      os << row.k << ',' << detail::format_double(row.fraction) << ','
         << detail::format_double(row.cum_gain) << ','
         << detail::format_double(row.qini) << '\n';
    detail::write_file(path, os.str());
    detail::write_file(path + ".json", detail::curve_scalars(table).dump(2) + "\n");
  } else {
    nlohmann::ordered_json j = detail::curve_scalars(table);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const CurveRow& row : table.rows) {
      nlohmann::ordered_json r;
      r["k"] = row.k;
      r["fraction"] = row.fraction;
      r["cum_gain"] = row.cum_gain;
      r["qini"] = row.qini;
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    detail::write_file(path, j.dump(2) + "\n");
  }
}

inline CurveTable read_curve(const std::string& path, CurveFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  CurveTable table;
  if (format == CurveFormat::csv) {
    std::string line;
    if (!std::getline(in, line) || line != "k,fraction,cum_gain,qini")
      throw CsvParseError("unexpected curve header in '" + path + "'");
    std::size_t row_idx = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = detail::split_line(line);
      if (cells.size() != 4)
        throw CsvParseError("curve row " + std::to_string(row_idx) +
                            " in '" + path + "' must have 4 cells");
      CurveRow row;
      row.k = static_cast<long>(
          detail::parse_double_cell(cells[0], row_idx, "k"));
      row.fraction = detail::parse_double_cell(cells[1], row_idx, "fraction");
      row.cum_gain = detail::parse_double_cell(cells[2], row_idx, "cum_gain");
      row.qini = detail::parse_double_cell(cells[3], row_idx, "qini");
      table.rows.push_back(row);
      ++row_idx;
    }
    std::ifstream side(path + ".json", std::ios::binary);
    if (!side) throw IoError("cannot open '" + path + ".json' for reading");
    const nlohmann::json j = nlohmann::json::parse(side);
    table.auuc = j.at("auuc").get<double>();
    table.qini_coefficient = j.at("qini_coefficient").get<double>();
    table.tie_rule = j.at("tie_rule").get<std::string>();
  } else {
    const nlohmann::json j = nlohmann::json::parse(in);
    table.auuc = j.at("auuc").get<double>();
    table.qini_coefficient = j.at("qini_coefficient").get<double>();
    table.tie_rule = j.at("tie_rule").get<std::string>();
    for (const auto& r : j.at("rows")) {
      CurveRow row;
      row.k = r.at("k").get<long>();
      row.fraction = r.at("fraction").get<double>();
      row.cum_gain = r.at("cum_gain").get<double>();
      row.qini = r.at("qini").get<double>();
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace uplift
