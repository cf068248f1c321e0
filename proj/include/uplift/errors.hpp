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

#include <stdexcept>
#include <string>

namespace uplift {

// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError -> 2 (usage), data/validation errors -> 3, fit/numeric -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A named column is missing, misdeclared, or reserved.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A cell could not be parsed; message carries row/column.
class CsvParseError : public Error {
 public:
  using Error::Error;
};

// A data-model invariant is violated (NaN, label gaps, bad propensity, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// stratified_split preconditions not met.
class SplitError : public Error {
 public:
  using Error::Error;
};

// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Bad run configuration (flag values, bootstrap_b too small, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A base learner cannot be fit (degenerate group, too few rows, ...).
class FitError : public Error {
 public:
  using Error::Error;
};

// An estimator's preconditions fail (empty group, ...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

// Propensity estimation on a degenerate arm.
class PropensityError : public Error {
 public:
  using Error::Error;
};

}  // namespace uplift
