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
#ifndef CRFOREST_DATASET_H_
#define CRFOREST_DATASET_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace crforest {

enum class FeatureKind { numeric, categorical };

struct FeatureInfo {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::vector<std::string> levels;  // categorical only; index == level code
  bool operator==(const FeatureInfo&) const = default;
};

using FeatureSchema = std::vector<FeatureInfo>;

struct FeatureColumn {
  FeatureInfo info;
  std::vector<double> num;        // kind == numeric
  std::vector<std::int32_t> cat;  // kind == categorical; values are level codes

  std::size_t size() const {
    return info.kind == FeatureKind::numeric ? num.size() : cat.size();
  }
  bool operator==(const FeatureColumn&) const = default;
};

// Immutable after construction; operations return fresh values.
struct Dataset {
  std::vector<FeatureColumn> features;
  std::vector<std::int8_t> w;  // binary treatment
  std::vector<double> y;       // factual outcome
  std::optional<std::vector<double>> ycf;
  std::optional<std::vector<double>> mu0;
  std::optional<std::vector<double>> mu1;
  std::optional<std::vector<std::int8_t>> e;  // randomized-subset flag

  std::size_t n() const { return y.size(); }
  std::size_t n_features() const { return features.size(); }
  std::size_t treated_count() const;
  std::size_t control_count() const;
  bool has_ground_truth() const { return mu0.has_value() && mu1.has_value(); }

  // mu1[i] - mu0[i]; requires has_ground_truth().
  std::vector<double> true_tau() const;

  FeatureSchema schema() const;
  const FeatureColumn* find_feature(const std::string& name) const;

  // Row subset in the given index order; schema (including declared levels)
  // is preserved. Does not re-check positivity.
  Dataset select_rows(const std::vector<std::size_t>& idx) const;

  // Shape and value-domain invariants plus positivity; throws ValidationError.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

// Column roles for CSV ingestion. Reserved header names `t`, `yf`, `ycf`,
// `mu0`, `mu1`, `e` are picked up automatically; `roles` maps column name ->
// role ("t", "yf", "ycf", "mu0", "mu1", "e", "feature") and overrides the
// reserved-name defaults.
Dataset load_csv(const std::string& path,
                 const std::map<std::string, std::string>& roles = {});
Dataset parse_csv(const std::string& text,
                  const std::map<std::string, std::string>& roles = {});

// Export mirrors import: feature columns in schema order, then t, yf and the
// optional columns that are present; reals at 17 significant digits.
void save_csv(const Dataset& ds, const std::string& path);
std::string to_csv(const Dataset& ds);

// Stratified (on w) disjoint split with |train| = round(ratio * n),
// deterministic in seed. Both halves keep at least one treated and one
// control row or a SplitError is thrown.
std::pair<Dataset, Dataset> honest_split(const Dataset& ds, double ratio,
                                         std::uint64_t seed);

// ceil(fraction * n) rows without replacement, original row order. Retries up
// to 16 reseeded draws to satisfy positivity, then throws ResampleError.
Dataset subsample(const Dataset& ds, double fraction, std::uint64_t seed);

enum class TauForm { constant, step };

struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t d_num = 10;
  std::size_t d_cat = 0;
  std::uint64_t seed = 0;
  TauForm tau_form = TauForm::constant;
  double tau_value = 1.0;        // constant form
  std::size_t tau_feature = 0;   // step form: feature index over [num..., cat...]
  double tau_low = 0.0;
  double tau_high = 1.0;
  double confounding_strength = 0.0;

  void validate() const;  // throws ConfigError
};

// Fixed documented generating process:
//   numeric features x_j ~ N(0,1); binary features ~ Bernoulli(0.5);
//   logit p(x) = confounding_strength * x_0, p clipped to [0.05, 0.95];
//   w ~ Bernoulli(p); mu0(x) = sum_j beta_j x_j with beta_j ~ U(-1,1) drawn
//   once per seed; mu1 = mu0 + tau(x); y = mu_w(x) + N(0,1).
// tau(x) is tau_value (constant) or tau_low/tau_high on x_{tau_feature} <= 0 / > 0.
Dataset simulate(const SyntheticSpec& spec);

}  // namespace crforest

#endif  // CRFOREST_DATASET_H_
