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
#include "crforest/model_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crforest/errors.hpp"

namespace crforest {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::string fingerprint64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json schema_to_json(const FeatureSchema& schema) {
  json arr = json::array();
  for (const auto& f : schema) {
    json j;
    j["name"] = f.name;
    j["kind"] = f.kind == FeatureKind::numeric ? "numeric" : "categorical";
    if (f.kind == FeatureKind::categorical) j["levels"] = f.levels;
    arr.push_back(j);
  }
  return arr;
}

FeatureSchema schema_from_json(const json& arr) {
  FeatureSchema schema;
  for (const auto& j : arr) {
    FeatureInfo f;
    f.name = j.at("name").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "numeric") {
      f.kind = FeatureKind::numeric;
    } else if (kind == "categorical") {
      f.kind = FeatureKind::categorical;
      f.levels = j.at("levels").get<std::vector<std::string>>();
    } else {
      throw DataError("model file: unknown feature kind `" + kind + "`");
    }
    schema.push_back(std::move(f));
  }
  return schema;
}

json params_to_json(const TreeParams& p) {
  json j;
  j["mtry"] = p.mtry;
  j["nodesize"] = p.nodesize;
  j["max_depth"] = p.max_depth;
  j["bucketized"] = p.bucketized;
  j["alpha"] = p.alpha;
  j["min_gain"] = p.min_gain;
  j["honest_ratio"] = p.honest_ratio;
  j["min_total_leaf_size"] = p.min_total_leaf_size;
  return j;
}

TreeParams params_from_json(const json& j) {
  TreeParams p;
  p.mtry = j.at("mtry").get<int>();
  p.nodesize = j.at("nodesize").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.bucketized = j.at("bucketized").get<bool>();
  p.alpha = j.at("alpha").get<double>();
  p.min_gain = j.at("min_gain").get<double>();
  p.honest_ratio = j.at("honest_ratio").get<double>();
  p.min_total_leaf_size = j.at("min_total_leaf_size").get<int>();
  return p;
}

json node_to_json(const CausalTree& tree, std::int32_t at) {
  const TreeNode& n = tree.nodes[at];
  json j;
  if (n.is_leaf) {
    json leaf;
    leaf["id"] = n.leaf_id;
    leaf["tau_hat"] = n.tau_hat;
    leaf["n1"] = n.est.n1;
    leaf["n0"] = n.est.n0;
    leaf["mean1"] = n.est.mean1;
    leaf["mean0"] = n.est.mean0;
    leaf["var1"] = n.est.var1;
    leaf["var0"] = n.est.var0;
    j["leaf"] = leaf;
    return j;
  }
  json split;
  split["feature"] = tree.schema[n.split.feature].name;
  split["feature_index"] = n.split.feature;
  if (n.split.is_categorical) {
    split["kind"] = "categorical";
    json levels = json::array();
    for (auto code : n.split.left_levels) {
      levels.push_back(tree.schema[n.split.feature].levels[code]);
    }
    split["left_levels"] = levels;
  } else {
    split["kind"] = "numeric";
    split["threshold"] = n.split.threshold;
  }
  // Interior est stats so a loaded tree can still be collapsed/pruned.
  json est;
  est["tau_hat"] = n.tau_hat;
  est["n1"] = n.est.n1;
  est["n0"] = n.est.n0;
  est["mean1"] = n.est.mean1;
  est["mean0"] = n.est.mean0;
  est["var1"] = n.est.var1;
  est["var0"] = n.est.var0;
  j["split"] = split;
  j["est"] = est;
  j["left"] = node_to_json(tree, n.left);
  j["right"] = node_to_json(tree, n.right);
  return j;
}

std::int32_t node_from_json(const json& j, CausalTree& tree) {
  const auto at = static_cast<std::int32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    const json& leaf = j.at("leaf");
    TreeNode& n = tree.nodes[at];
    n.is_leaf = true;
    n.leaf_id = leaf.at("id").get<std::int32_t>();
    n.tau_hat = leaf.at("tau_hat").get<double>();
    n.est.n1 = leaf.at("n1").get<std::int64_t>();
    n.est.n0 = leaf.at("n0").get<std::int64_t>();
    n.est.mean1 = leaf.at("mean1").get<double>();
    n.est.mean0 = leaf.at("mean0").get<double>();
    n.est.var1 = leaf.at("var1").get<double>();
    n.est.var0 = leaf.at("var0").get<double>();
    return at;
  }
  const json& split = j.at("split");
  {
    TreeNode& n = tree.nodes[at];
    n.is_leaf = false;
    n.split.feature = split.at("feature_index").get<int>();
    if (n.split.feature < 0 ||
        static_cast<std::size_t>(n.split.feature) >= tree.schema.size()) {
      throw DataError("model file: split feature index out of range");
    }
    const std::string kind = split.at("kind").get<std::string>();
    if (kind == "categorical") {
      n.split.is_categorical = true;
      const auto& levels = tree.schema[n.split.feature].levels;
      for (const auto& name : split.at("left_levels")) {
        const auto it =
            std::find(levels.begin(), levels.end(), name.get<std::string>());
        if (it == levels.end()) {
          throw DataError("model file: unknown level in split");
        }
        n.split.left_levels.push_back(
            static_cast<std::int32_t>(it - levels.begin()));
      }
      std::sort(n.split.left_levels.begin(), n.split.left_levels.end());
    } else {
      n.split.is_categorical = false;
      n.split.threshold = split.at("threshold").get<double>();
    }
    const json& est = j.at("est");
    n.tau_hat = est.at("tau_hat").get<double>();
    n.est.n1 = est.at("n1").get<std::int64_t>();
    n.est.n0 = est.at("n0").get<std::int64_t>();
    n.est.mean1 = est.at("mean1").get<double>();
    n.est.mean0 = est.at("mean0").get<double>();
    n.est.var1 = est.at("var1").get<double>();
    n.est.var0 = est.at("var0").get<double>();
  }
  const std::int32_t l = node_from_json(j.at("left"), tree);
  const std::int32_t r = node_from_json(j.at("right"), tree);
  tree.nodes[at].left = l;
  tree.nodes[at].right = r;
  return at;
}

json tree_to_json(const CausalTree& tree) {
  json j;
  j["schema"] = schema_to_json(tree.schema);
  j["params"] = params_to_json(tree.params);
  j["fit_seed"] = tree.fit_seed;
  j["root"] = node_to_json(tree, 0);
  return j;
}

CausalTree tree_from_json(const json& j) {
  CausalTree tree;
  tree.schema = schema_from_json(j.at("schema"));
  tree.params = params_from_json(j.at("params"));
  tree.fit_seed = j.at("fit_seed").get<std::uint64_t>();
  node_from_json(j.at("root"), tree);
  return tree;
}

json model_to_json(const CRFModel& model) {
  json j;
  j["format_version"] = kFormatVersion;
  json cfg;
  cfg["layers"] = model.config.layers;
  cfg["trees_per_layer"] = model.config.trees_per_layer;
  cfg["subsample_fraction"] = model.config.subsample_fraction;
  cfg["append_original"] = model.config.append_original;
  cfg["master_seed"] = model.config.master_seed;
  cfg["tree_params"] = params_to_json(model.config.tree_params);
  j["config"] = cfg;
  j["schema"] = schema_to_json(model.raw_schema);
  json layers = json::array();
  for (const auto& layer : model.layers) {
    json trees = json::array();
    for (const auto& t : layer) trees.push_back(tree_to_json(t));
    layers.push_back(trees);
  }
  j["layers"] = layers;
  j["final_tree"] = tree_to_json(model.final_tree);
  j["pruned"] = model.pruned;
  json prov;
  for (const auto& [name, lq] : model.provenance) {
    prov[name] = json::array({lq.first, lq.second});
  }
  j["provenance"] = prov;
  j["fit_seed"] = model.config.master_seed;
  return j;
}

}  // namespace

std::string model_to_string(const CRFModel& model) {
  json j = model_to_json(model);
  j["fingerprint"] = fingerprint64(j.dump());
  return j.dump(1);
}

CRFModel model_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& ex) {
    throw DataError(std::string("model file is not valid JSON: ") + ex.what());
  }
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw DataError("model file: unsupported format version");
    }
    const std::string stored = j.at("fingerprint").get<std::string>();
    j.erase("fingerprint");
    if (fingerprint64(j.dump()) != stored) {
      throw DataError("model file: fingerprint mismatch (corrupt file)");
    }
    CRFModel model;
    const json& cfg = j.at("config");
    model.config.layers = cfg.at("layers").get<int>();
    model.config.trees_per_layer = cfg.at("trees_per_layer").get<int>();
    model.config.subsample_fraction = cfg.at("subsample_fraction").get<double>();
    model.config.append_original = cfg.at("append_original").get<bool>();
    model.config.master_seed = cfg.at("master_seed").get<std::uint64_t>();
    model.config.tree_params = params_from_json(cfg.at("tree_params"));
    model.raw_schema = schema_from_json(j.at("schema"));
    for (const auto& layer : j.at("layers")) {
      std::vector<CausalTree> trees;
      for (const auto& t : layer) trees.push_back(tree_from_json(t));
      model.layers.push_back(std::move(trees));
    }
    model.final_tree = tree_from_json(j.at("final_tree"));
    model.pruned = j.at("pruned").get<bool>();
    for (const auto& [name, lq] : j.at("provenance").items()) {
      model.provenance[name] = {lq.at(0).get<int>(), lq.at(1).get<int>()};
    }
    return model;
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& ex) {
    throw DataError(std::string("model file: ") + ex.what());
  }
}

void save_model(const CRFModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write `" + path + "`");
  out << model_to_string(model) << "\n";
  if (!out) throw DataError("write failed for `" + path + "`");
}

CRFModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open `" + path + "`");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_string(ss.str());
}

}  // namespace crforest
