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
#include "crforest/forest.hpp"

#include <stdexcept>

#include "crforest/errors.hpp"
#include "crforest/parallel.hpp"
#include "crforest/random.hpp"

namespace crforest {

namespace seeds {
namespace {
constexpr std::uint64_t kSubsample = 0xA1;
constexpr std::uint64_t kSplit = 0xA2;
constexpr std::uint64_t kFit = 0xA3;
constexpr std::uint64_t kFinalSplit = 0xB1;
constexpr std::uint64_t kFinalFit = 0xB2;
constexpr std::uint64_t kPrune = 0xB3;
constexpr std::uint64_t kForest = 0xC1;

std::uint64_t stage(std::uint64_t master, std::uint64_t tag, int layer, int tree) {
  return mix_seed(mix_seed(master, tag),
                  mix_seed(static_cast<std::uint64_t>(layer),
                           static_cast<std::uint64_t>(tree)));
}
}  // namespace

std::uint64_t subsample(std::uint64_t master, int layer, int tree) {
  return stage(master, kSubsample, layer, tree);
}
std::uint64_t split(std::uint64_t master, int layer, int tree) {
  return stage(master, kSplit, layer, tree);
}
std::uint64_t fit(std::uint64_t master, int layer, int tree) {
  return stage(master, kFit, layer, tree);
}
std::uint64_t final_split(std::uint64_t master) { return mix_seed(master, kFinalSplit); }
std::uint64_t final_fit(std::uint64_t master) { return mix_seed(master, kFinalFit); }
std::uint64_t prune(std::uint64_t master) { return mix_seed(master, kPrune); }
std::uint64_t forest(std::uint64_t master, int tree) {
  return stage(master, kForest, 0, tree);
}
}  // namespace seeds

void CRFConfig::validate() const {
  if (layers < 0) throw ConfigError("crf: layers must be >= 0");
  if (trees_per_layer < 1) throw ConfigError("crf: trees_per_layer must be >= 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
    throw ConfigError("crf: subsample_fraction must be in (0,1]");
  }
  tree_params.validate();
}

std::string encoded_feature_name(int layer, int tree) {
  return "tree_" + std::to_string(layer) + "_" + std::to_string(tree);
}

std::vector<std::int32_t> leaf_encode(const CausalTree& tree, const Dataset& rows) {
  SchemaBinding binding(tree.schema, rows);
  std::vector<std::int32_t> out(rows.n());
  for (std::size_t i = 0; i < rows.n(); ++i) {
    out[i] = static_cast<std::int32_t>(route_row(tree, binding, i));
  }
  return out;
}

namespace {

FeatureColumn encoded_column(const std::string& name, const CausalTree& tree,
                             std::vector<std::int32_t> codes) {
  FeatureColumn col;
  col.info.name = name;
  col.info.kind = FeatureKind::categorical;
  const int leaves = tree.leaf_count();
  col.info.levels.reserve(leaves);
  for (int j = 0; j < leaves; ++j) col.info.levels.push_back(std::to_string(j));
  col.cat = std::move(codes);
  return col;
}

// Z_l from the previous frame and the fitted layer trees.
Dataset encode_layer(const Dataset& prev, const std::vector<CausalTree>& trees,
                     int layer, bool append_original, int threads) {
  std::vector<std::vector<std::int32_t>> codes(trees.size());
  parallel_for(trees.size(), threads, [&](std::size_t q) {
    try {
      codes[q] = leaf_encode(trees[q], prev);
    } catch (const RoutingError& ex) {
      throw RoutingError("layer " + std::to_string(layer) + " tree " +
                         std::to_string(q) + ": " + ex.what());
    }
  });
  Dataset z;
  z.features.reserve(trees.size() + (append_original ? prev.features.size() : 0));
  for (std::size_t q = 0; q < trees.size(); ++q) {
    z.features.push_back(encoded_column(
        encoded_feature_name(layer, static_cast<int>(q)), trees[q],
        std::move(codes[q])));
  }
  if (append_original) {
    for (const auto& f : prev.features) z.features.push_back(f);
  }
  z.w = prev.w;
  z.y = prev.y;
  z.ycf = prev.ycf;
  z.mu0 = prev.mu0;
  z.mu1 = prev.mu1;
  z.e = prev.e;
  return z;
}

CausalTree fit_layer_tree(const Dataset& frame, const CRFConfig& config,
                          int layer, int q) {
  try {
    const Dataset sub = subsample(frame, config.subsample_fraction,
                                  seeds::subsample(config.master_seed, layer, q));
    auto [tr, es] = honest_split(sub, 0.5, seeds::split(config.master_seed, layer, q));
    return fit_causal_tree(tr, es, config.tree_params,
                           seeds::fit(config.master_seed, layer, q));
  } catch (const std::exception& ex) {
    throw FitError("layer " + std::to_string(layer) + " tree " +
                   std::to_string(q) + ": " + ex.what());
  }
}

}  // namespace

std::vector<LayerOutput> build_crf(const Dataset& ds, const CRFConfig& config) {
  config.validate();
  ds.validate();
  std::vector<LayerOutput> out;
  out.reserve(config.layers);
  const Dataset* prev = &ds;
  for (int l = 1; l <= config.layers; ++l) {
    LayerOutput layer;
    layer.trees.resize(config.trees_per_layer);
    parallel_for(static_cast<std::size_t>(config.trees_per_layer), config.threads,
                 [&](std::size_t q) {
                   layer.trees[q] =
                       fit_layer_tree(*prev, config, l, static_cast<int>(q));
                 });
    layer.encoded = encode_layer(*prev, layer.trees, l, config.append_original,
                                 config.threads);
    layer.rules.resize(layer.trees.size());
    for (std::size_t q = 0; q < layer.trees.size(); ++q) {
      const int leaves = layer.trees[q].leaf_count();
      layer.rules[q].reserve(leaves);
      for (int j = 0; j < leaves; ++j) {
        layer.rules[q].push_back(extract_path_rule(layer.trees[q], j));
      }
    }
    out.push_back(std::move(layer));
    prev = &out.back().encoded;
  }
  return out;
}

CRFModel fit_crf_ct(const Dataset& ds, std::vector<LayerOutput> layers,
                    const CRFConfig& config, const TreeParams& final_params,
                    bool prune, int prune_folds) {
  config.validate();
  final_params.validate();
  CRFModel model;
  model.config = config;
  model.raw_schema = ds.schema();
  model.layers.reserve(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t q = 0; q < layers[l].trees.size(); ++q) {
      model.provenance[encoded_feature_name(static_cast<int>(l) + 1,
                                            static_cast<int>(q))] = {
          static_cast<int>(l) + 1, static_cast<int>(q)};
    }
    model.layers.push_back(std::move(layers[l].trees));
  }
  const Dataset& final_frame = layers.empty() ? ds : layers.back().encoded;
  auto [tr, es] =
      honest_split(final_frame, 0.5, seeds::final_split(config.master_seed));
  model.final_tree =
      fit_causal_tree(tr, es, final_params, seeds::final_fit(config.master_seed));
  if (prune) {
    model.final_tree = prune_tree(model.final_tree, tr, es, prune_folds,
                                  seeds::prune(config.master_seed));
    model.pruned = true;
  }
  return model;
}

CRFModel fit_crf_ct(const Dataset& ds, const CRFConfig& config,
                    const TreeParams& final_params, bool prune, int prune_folds) {
  return fit_crf_ct(ds, build_crf(ds, config), config, final_params, prune,
                    prune_folds);
}

Dataset encode_dataset(const CRFModel& model, const Dataset& rows) {
  if (model.layers.empty()) return rows;
  Dataset cur = encode_layer(rows, model.layers[0], 1,
                             model.config.append_original, model.config.threads);
  for (std::size_t l = 1; l < model.layers.size(); ++l) {
    cur = encode_layer(cur, model.layers[l], static_cast<int>(l) + 1,
                       model.config.append_original, model.config.threads);
  }
  return cur;
}

std::vector<double> predict_model(const CRFModel& model, const Dataset& rows) {
  const Dataset encoded = encode_dataset(model, rows);
  return predict_cate(model.final_tree, encoded);
}

std::vector<double> CausalForest::predict(const Dataset& rows) const {
  std::vector<double> mean(rows.n(), 0.0);
  for (const auto& tree : trees) {
    const std::vector<double> p = predict_cate(tree, rows);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p[i];
  }
  const auto q = static_cast<double>(trees.size());
  for (auto& v : mean) v /= q;
  return mean;
}

CausalForest forest_average_cate(const Dataset& ds, int q_trees,
                                 const TreeParams& params, double fraction,
                                 std::uint64_t seed, int threads) {
  if (q_trees < 1) throw ConfigError("forest: need at least one tree");
  params.validate();
  ds.validate();
  CausalForest forest;
  forest.trees.resize(q_trees);
  parallel_for(static_cast<std::size_t>(q_trees), threads, [&](std::size_t q) {
    try {
      const Dataset sub = subsample(
          ds, fraction, seeds::subsample(seeds::forest(seed, static_cast<int>(q)), 0, 0));
      auto [tr, es] = honest_split(
          sub, 0.5, seeds::split(seeds::forest(seed, static_cast<int>(q)), 0, 0));
      forest.trees[q] = fit_causal_tree(
          tr, es, params, seeds::fit(seeds::forest(seed, static_cast<int>(q)), 0, 0));
    } catch (const FitError&) {
      throw;
    } catch (const std::exception& ex) {
      throw FitError("forest tree " + std::to_string(q) + ": " + ex.what());
    }
  });
  return forest;
}

}  // namespace crforest
