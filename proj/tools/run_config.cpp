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
#include "run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "crforest/errors.hpp"

namespace crforest::tools {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown key `" + where + "." + key + "`");
    }
  }
}

template <typename T>
T get_as(const json& obj, const std::string& where, const std::string& key,
         T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError("bad value for `" + where + "." + key + "`");
  }
}

int get_mtry(const json& obj, const std::string& where, int fallback) {
  if (!obj.contains("mtry")) return fallback;
  const json& v = obj.at("mtry");
  if (v.is_string()) {
    if (v.get<std::string>() == "all") return TreeParams::kAllFeatures;
    throw ConfigError("bad value for `" + where + ".mtry` (int or \"all\")");
  }
  if (!v.is_number_integer()) {
    throw ConfigError("bad value for `" + where + ".mtry` (int or \"all\")");
  }
  return v.get<int>();
}

TreeParams parse_tree(const json& obj, const std::string& where,
                      const TreeParams& defaults) {
  require_keys(obj, where,
               {"mtry", "nodesize", "max_depth", "bucketized", "alpha",
                "min_gain", "honest_ratio", "min_total_leaf_size"});
  TreeParams p = defaults;
  p.mtry = get_mtry(obj, where, defaults.mtry);
  p.nodesize = get_as<int>(obj, where, "nodesize", defaults.nodesize);
  p.max_depth = get_as<int>(obj, where, "max_depth", defaults.max_depth);
  p.bucketized = get_as<bool>(obj, where, "bucketized", defaults.bucketized);
  p.alpha = get_as<double>(obj, where, "alpha", defaults.alpha);
  p.min_gain = get_as<double>(obj, where, "min_gain", defaults.min_gain);
  p.honest_ratio =
      get_as<double>(obj, where, "honest_ratio", defaults.honest_ratio);
  p.min_total_leaf_size = get_as<int>(obj, where, "min_total_leaf_size",
                                      defaults.min_total_leaf_size);
  return p;
}

SyntheticSpec parse_synthetic(const json& obj) {
  require_keys(obj, "synthetic",
               {"n", "d_num", "d_cat", "seed", "confounding", "tau"});
  SyntheticSpec spec;
  const auto n = get_as<long long>(obj, "synthetic", "n", 1000);
  if (n < 0) throw ConfigError("bad value for `synthetic.n`");
  spec.n = static_cast<std::size_t>(n);
  spec.d_num = static_cast<std::size_t>(
      get_as<long long>(obj, "synthetic", "d_num", 10));
  spec.d_cat = static_cast<std::size_t>(
      get_as<long long>(obj, "synthetic", "d_cat", 0));
  spec.seed = get_as<std::uint64_t>(obj, "synthetic", "seed", 0);
  spec.confounding_strength =
      get_as<double>(obj, "synthetic", "confounding", 0.0);
  if (obj.contains("tau")) {
    const json& tau = obj.at("tau");
    require_keys(tau, "synthetic.tau", {"form", "value", "feature", "low", "high"});
    const auto form = get_as<std::string>(tau, "synthetic.tau", "form", "constant");
    if (form == "constant") {
      spec.tau_form = TauForm::constant;
      spec.tau_value = get_as<double>(tau, "synthetic.tau", "value", 1.0);
    } else if (form == "step") {
      spec.tau_form = TauForm::step;
      spec.tau_feature = static_cast<std::size_t>(
          get_as<long long>(tau, "synthetic.tau", "feature", 0));
      spec.tau_low = get_as<double>(tau, "synthetic.tau", "low", 0.0);
      spec.tau_high = get_as<double>(tau, "synthetic.tau", "high", 1.0);
    } else {
      throw ConfigError("bad value for `synthetic.tau.form`: `" + form + "`");
    }
  }
  return spec;
}

}  // namespace

RunConfig default_config() {
  RunConfig cfg;
  cfg.crf.layers = 1;
  cfg.crf.trees_per_layer = 200;
  cfg.crf.subsample_fraction = 0.5;
  cfg.crf.tree_params.mtry = 1;
  cfg.crf.tree_params.nodesize = 1;
  cfg.crf.tree_params.max_depth = 5;
  cfg.crf.tree_params.bucketized = true;
  cfg.crf.tree_params.alpha = 1.0;
  cfg.final_tree.mtry = TreeParams::kAllFeatures;
  cfg.final_tree.nodesize = 1;
  cfg.final_tree.max_depth = 5;
  cfg.final_tree.bucketized = false;
  cfg.cf_tree.mtry = TreeParams::kAllFeatures;
  cfg.cf_tree.nodesize = 1;
  cfg.cf_tree.max_depth = 5;
  cfg.cf_tree.bucketized = false;
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  require_keys(root, "config",
               {"seed", "threads", "data", "synthetic", "crf", "layer_tree",
                "final_tree", "cf", "prune", "metrics", "rules", "sweep",
                "output"});
  RunConfig cfg = default_config();
  cfg.seed = get_as<std::uint64_t>(root, "config", "seed", 0);
  cfg.threads = get_as<int>(root, "config", "threads", 1);

  if (root.contains("data")) {
    const json& data = root.at("data");
    require_keys(data, "data", {"train", "test", "roles"});
    cfg.train_path = get_as<std::string>(data, "data", "train", "");
    cfg.test_path = get_as<std::string>(data, "data", "test", "");
    if (data.contains("roles")) {
      for (const auto& [col, role] : data.at("roles").items()) {
        if (!role.is_string()) throw ConfigError("bad value for `data.roles`");
        cfg.roles[col] = role.get<std::string>();
      }
    }
  }
  if (root.contains("synthetic")) cfg.synthetic = parse_synthetic(root.at("synthetic"));

  if (root.contains("crf")) {
    const json& crf = root.at("crf");
    require_keys(crf, "crf",
                 {"layers", "trees_per_layer", "subsample_fraction",
                  "append_original"});
    cfg.crf.layers = get_as<int>(crf, "crf", "layers", cfg.crf.layers);
    cfg.crf.trees_per_layer =
        get_as<int>(crf, "crf", "trees_per_layer", cfg.crf.trees_per_layer);
    cfg.crf.subsample_fraction = get_as<double>(crf, "crf", "subsample_fraction",
                                                cfg.crf.subsample_fraction);
    cfg.crf.append_original =
        get_as<bool>(crf, "crf", "append_original", cfg.crf.append_original);
  }
  if (root.contains("layer_tree")) {
    cfg.crf.tree_params =
        parse_tree(root.at("layer_tree"), "layer_tree", cfg.crf.tree_params);
  }
  if (root.contains("final_tree")) {
    cfg.final_tree = parse_tree(root.at("final_tree"), "final_tree", cfg.final_tree);
  }
  if (root.contains("cf")) {
    const json& cf = root.at("cf");
    require_keys(cf, "cf", {"trees", "tree"});
    cfg.cf_trees = get_as<int>(cf, "cf", "trees", cfg.cf_trees);
    if (cf.contains("tree")) {
      cfg.cf_tree = parse_tree(cf.at("tree"), "cf.tree", cfg.cf_tree);
    }
  }
  if (root.contains("prune")) {
    const json& prune = root.at("prune");
    require_keys(prune, "prune", {"enabled", "folds"});
    cfg.prune = get_as<bool>(prune, "prune", "enabled", cfg.prune);
    cfg.prune_folds = get_as<int>(prune, "prune", "folds", cfg.prune_folds);
  }
  if (root.contains("metrics")) {
    const json& metrics = root.at("metrics");
    require_keys(metrics, "metrics", {"lambda"});
    cfg.lambda = get_as<double>(metrics, "metrics", "lambda", cfg.lambda);
  }
  if (root.contains("rules")) {
    const json& rules = root.at("rules");
    require_keys(rules, "rules", {"top_k", "minimize", "max_terms"});
    cfg.rules.top_k = get_as<int>(rules, "rules", "top_k", cfg.rules.top_k);
    cfg.rules.minimize = get_as<bool>(rules, "rules", "minimize", cfg.rules.minimize);
    const auto max_terms =
        get_as<long long>(rules, "rules", "max_terms",
                          static_cast<long long>(cfg.rules.max_terms));
    if (max_terms < 1) throw ConfigError("bad value for `rules.max_terms`");
    cfg.rules.max_terms = static_cast<std::size_t>(max_terms);
  }
  if (root.contains("sweep")) {
    const json& sweep = root.at("sweep");
    require_keys(sweep, "sweep", {"trees", "mtry", "nodesize", "repetitions"});
    cfg.sweep_trees = get_as<std::vector<int>>(sweep, "sweep", "trees", {});
    cfg.sweep_mtry = get_as<std::vector<int>>(sweep, "sweep", "mtry", {});
    cfg.sweep_nodesize = get_as<std::vector<int>>(sweep, "sweep", "nodesize", {});
    cfg.repetitions = get_as<int>(sweep, "sweep", "repetitions", cfg.repetitions);
  }
  if (root.contains("output")) {
    const json& output = root.at("output");
    require_keys(output, "output", {"model", "predictions", "report", "table"});
    cfg.out_model = get_as<std::string>(output, "output", "model", "");
    cfg.out_predictions = get_as<std::string>(output, "output", "predictions", "");
    cfg.out_report = get_as<std::string>(output, "output", "report", "");
    cfg.out_table = get_as<std::string>(output, "output", "table", "");
  }

  cfg.crf.master_seed = cfg.seed;
  cfg.crf.threads = cfg.threads;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config `" + path + "`");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace crforest::tools
