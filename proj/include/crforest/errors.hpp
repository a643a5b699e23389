/*
 * Copyright 2026 The crforest Authors.
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
#ifndef CRFOREST_ERRORS_H_
#define CRFOREST_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crforest {

// Error taxonomy maps onto the CLI exit-code contract:
//   ConfigError -> 2, DataError (and subclasses) -> 3, everything else -> 4.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing/mislabeled columns, feature kind or level mismatches.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// Structurally valid input that violates a dataset invariant
// (non-binary treatment, missing values, no treated/control rows, ...).
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// honest_split cannot produce two halves with treated and control rows.
class SplitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// subsample exhausted its reseeded retries without hitting positivity.
class ResampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A row cannot be routed through a tree (unseen categorical level).
class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CNF -> DNF distribution exceeded the term budget.
class RuleExplosionError : public std::runtime_error {
 public:
  RuleExplosionError(const std::string& what, std::size_t partial_terms)
      : std::runtime_error(what), partial_terms(partial_terms) {}
  std::size_t partial_terms;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crforest

#endif  // CRFOREST_ERRORS_H_
