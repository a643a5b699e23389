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
#ifndef CRFOREST_CAUSAL_TREE_H_
#define CRFOREST_CAUSAL_TREE_H_

#include <cstdint>
#include <limits>
#include <vector>

#include "crforest/dataset.hpp"

namespace crforest {

struct TreeParams {
  // Candidate features per node; clamped to the feature count at fit time,
  // so INT_MAX means "all features".
  int mtry = 1;
  // Minimum treated count AND minimum control count per leaf, enforced on
  // both the train and the estimation subset.
  int nodesize = 1;
  int max_depth = 5;
  // Threshold candidates from in-node deciles instead of all midpoints.
  bool bucketized = false;
  // Weight of the variance penalty in the split gain (0 = adaptive variant).
  double alpha = 1.0;
  double min_gain = 0.0;
  // Used when fit is handed a single dataset and splits it honestly itself.
  double honest_ratio = 0.5;
  // Optional: minimum total rows per child (train and est); 0 = unset.
  int min_total_leaf_size = 0;

  void validate() const;  // throws ConfigError

  static constexpr int kAllFeatures = std::numeric_limits<int>::max();
  bool operator==(const TreeParams&) const = default;
};

struct SplitAtom {
  int feature = -1;  // index into the tree schema
  bool is_categorical = false;
  // Numeric: value <= threshold routes left.
  double threshold = 0.0;
  // Categorical: sorted level codes routed left; everything else goes right.
  std::vector<std::int32_t> left_levels;
  bool operator==(const SplitAtom&) const = default;
};

// Treated/control summary of one node over one subset.
struct GroupStats {
  std::int64_t n1 = 0;
  std::int64_t n0 = 0;
  double mean1 = 0.0;
  double mean0 = 0.0;
  double var1 = 0.0;  // sample variance, 0 when the group has < 2 rows
  double var0 = 0.0;
  double tau() const { return mean1 - mean0; }
  bool operator==(const GroupStats&) const = default;
};

struct TreeNode {
  bool is_leaf = true;
  SplitAtom split;          // valid when !is_leaf
  std::int32_t left = -1;   // node indices
  std::int32_t right = -1;
  std::int32_t leaf_id = -1;  // DFS left-to-right numbering, leaves only
  // Estimation-subset statistics, kept for every node so post-pruning can
  // collapse internal nodes without re-touching the data.
  GroupStats est;
  double tau_hat = 0.0;  // est.mean1 - est.mean0
  bool operator==(const TreeNode&) const = default;
};

struct CausalTree {
  FeatureSchema schema;
  std::vector<TreeNode> nodes;  // nodes[0] is the root; never empty
  TreeParams params;
  std::uint64_t fit_seed = 0;

  int leaf_count() const;
  const TreeNode& leaf(int leaf_id) const;  // throws ConfigError on bad id
  int depth() const;
  bool operator==(const CausalTree&) const = default;
};

// Resolves a tree's schema against a dataset: features matched by name and
// kind, categorical values re-coded by level name. Throws SchemaError when a
// feature is missing or has the wrong kind. Values whose level is unknown to
// the tree schema surface later as RoutingError.
class SchemaBinding {
 public:
  SchemaBinding(const FeatureSchema& tree_schema, const Dataset& ds);

  double num(int feature, std::size_t row) const {
    return num_cols_[feature]->at(row);
  }
  // Level code in the tree schema, or -1 when the row's level is unseen.
  std::int32_t cat(int feature, std::size_t row) const {
    const auto& m = code_maps_[feature];
    const std::int32_t raw = cat_cols_[feature]->at(row);
    return m.empty() ? raw : m[raw];
  }
  const std::string& level_name(int feature, std::size_t row) const;

 private:
  std::vector<const std::vector<double>*> num_cols_;
  std::vector<const std::vector<std::int32_t>*> cat_cols_;
  std::vector<std::vector<std::int32_t>> code_maps_;  // empty = identity
  std::vector<const FeatureColumn*> columns_;
};

// Honest fit: structure grown greedily on `train`, leaf effects estimated on
// `est`. Both datasets must share one schema and satisfy positivity.
CausalTree fit_causal_tree(const Dataset& train, const Dataset& est,
                           const TreeParams& params, std::uint64_t seed);

// Convenience overload: honest-splits `ds` at params.honest_ratio first.
CausalTree fit_causal_tree(const Dataset& ds, const TreeParams& params,
                           std::uint64_t seed);

// Leaf id (DFS order) reached by row i. Throws RoutingError on an unseen
// categorical level, naming the row and feature.
int route_row(const CausalTree& tree, const SchemaBinding& binding,
              std::size_t row);

double predict_cate(const CausalTree& tree, const Dataset& rows,
                    std::size_t row);
std::vector<double> predict_cate(const CausalTree& tree, const Dataset& rows);

// Weakest-link cost-complexity pruning on the train-subset risk
// R(T) = -sum_leaves n_leaf * tau_leaf^2 / n_root, with the complexity
// sequence chosen by folds-fold cross-validation on `train` (structure refit
// per fold against the unchanged `est`). Ties go to the smaller tree.
CausalTree prune_tree(const CausalTree& tree, const Dataset& train,
                      const Dataset& est, int folds, std::uint64_t seed);

namespace detail {
// Collapse every internal node whose leaf-cost is <= its subtree cost at
// penalty alpha (train-risk based); exposed for tests.
CausalTree prune_at(const CausalTree& tree, const Dataset& train, double alpha);
}  // namespace detail

}  // namespace crforest

#endif  // CRFOREST_CAUSAL_TREE_H_
