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
#ifndef CRFOREST_FOREST_H_
#define CRFOREST_FOREST_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "crforest/causal_tree.hpp"
#include "crforest/dataset.hpp"
#include "crforest/rules.hpp"

namespace crforest {

struct CRFConfig {
  int layers = 1;                   // L; 0 = plain causal tree on raw features
  int trees_per_layer = 200;        // Q
  double subsample_fraction = 0.5;  // without replacement
  TreeParams tree_params;           // shared across layers
  bool append_original = false;
  std::uint64_t master_seed = 0;
  // Fit-time worker count (0 = hardware concurrency). Execution environment
  // only: results are identical for any value and it is not serialized.
  int threads = 1;

  void validate() const;  // throws ConfigError
};

struct LayerOutput {
  std::vector<CausalTree> trees;
  Dataset encoded;  // Z_l: {Y, W, X_l} (+ previous covariates when appended)
  std::vector<std::vector<Conjunction>> rules;  // per tree, indexed by leaf id
};

struct CRFModel {
  CRFConfig config;
  FeatureSchema raw_schema;
  std::vector<std::vector<CausalTree>> layers;  // trees only, no data
  CausalTree final_tree;
  bool pruned = false;
  // encoded feature name "tree_{layer}_{q}" -> (layer (1-based), tree index)
  std::map<std::string, std::pair<int, int>> provenance;
};

// Per-stage seed derivation. Shared by the pipeline and by anything that
// needs to reproduce a stage (the L=0 model is bit-equal to a plain causal
// tree fit with seeds::final_split / seeds::final_fit).
namespace seeds {
std::uint64_t subsample(std::uint64_t master, int layer, int tree);
std::uint64_t split(std::uint64_t master, int layer, int tree);
std::uint64_t fit(std::uint64_t master, int layer, int tree);
std::uint64_t final_split(std::uint64_t master);
std::uint64_t final_fit(std::uint64_t master);
std::uint64_t prune(std::uint64_t master);
std::uint64_t forest(std::uint64_t master, int tree);
}  // namespace seeds

// Leaf id (DFS order) reached by each row.
std::vector<std::int32_t> leaf_encode(const CausalTree& tree, const Dataset& rows);

// Algorithm core: L layers of Q honest trees on subsamples of the previous
// encoding; each layer emits Z_l plus per-leaf path rules.
std::vector<LayerOutput> build_crf(const Dataset& ds, const CRFConfig& config);

// Layers + final honest causal tree over the last encoding (optionally
// cross-validation pruned). L=0 degenerates to a plain tree on raw features.
CRFModel fit_crf_ct(const Dataset& ds, const CRFConfig& config,
                    const TreeParams& final_params, bool prune,
                    int prune_folds = 5);
// Same, reusing layers already built for this (ds, config).
CRFModel fit_crf_ct(const Dataset& ds, std::vector<LayerOutput> layers,
                    const CRFConfig& config, const TreeParams& final_params,
                    bool prune, int prune_folds = 5);

std::vector<double> predict_model(const CRFModel& model, const Dataset& rows);

// Rows encoded through every layer: the model's view of the data right before
// the final tree (used for export and rule checks).
Dataset encode_dataset(const CRFModel& model, const Dataset& rows);

struct CausalForest {
  std::vector<CausalTree> trees;
  std::vector<double> predict(const Dataset& rows) const;
};

// Baseline: Q honest trees on independent subsamples, prediction = mean of
// the per-tree effects.
CausalForest forest_average_cate(const Dataset& ds, int q_trees,
                                 const TreeParams& params, double fraction,
                                 std::uint64_t seed, int threads = 1);

std::string encoded_feature_name(int layer, int tree);

}  // namespace crforest

#endif  // CRFOREST_FOREST_H_
