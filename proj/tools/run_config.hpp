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
#ifndef CRFOREST_TOOLS_RUN_CONFIG_H_
#define CRFOREST_TOOLS_RUN_CONFIG_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crforest/dataset.hpp"
#include "crforest/forest.hpp"
#include "crforest/rules.hpp"

namespace crforest::tools {

// JSON run configuration. Unknown keys are rejected everywhere. Defaults for
// the layer trees follow the forest's documented defaults (bucketized
// candidate grids, one candidate covariate, unit node size, 200 trees); the
// final tree and the forest baseline default to all-covariate unbucketized
// search.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;

  std::string train_path;
  std::string test_path;
  std::map<std::string, std::string> roles;

  std::optional<SyntheticSpec> synthetic;

  CRFConfig crf;          // crf.tree_params holds the layer-tree knobs
  TreeParams final_tree;
  TreeParams cf_tree;     // forest baseline knobs (sweep)
  int cf_trees = 200;

  bool prune = true;
  int prune_folds = 5;

  double lambda = 0.0;
  RulesReportOptions rules;

  std::vector<int> sweep_trees;
  std::vector<int> sweep_mtry;
  std::vector<int> sweep_nodesize;
  int repetitions = 1;

  std::string out_model;
  std::string out_predictions;
  std::string out_report;
  std::string out_table;
};

RunConfig default_config();
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

}  // namespace crforest::tools

#endif  // CRFOREST_TOOLS_RUN_CONFIG_H_
