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
#include "crforest/causal_tree.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "crforest/errors.hpp"
#include "crforest/random.hpp"

namespace crforest {

namespace {

struct GroupAccum {
  std::int64_t n1 = 0, n0 = 0;
  double s1 = 0, s0 = 0;    // sums of y
  double q1 = 0, q0 = 0;    // sums of y^2

  void add(std::int8_t w, double y) {
    if (w == 1) {
      ++n1;
      s1 += y;
      q1 += y * y;
    } else {
      ++n0;
      s0 += y;
      q0 += y * y;
    }
  }
  std::int64_t total() const { return n1 + n0; }
  static double var(std::int64_t n, double s, double q) {
    if (n < 2) return 0.0;
    const double v = (q - s * s / static_cast<double>(n)) /
                     static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double tau() const {
    return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
  }
  // s^2_1/n_1 + s^2_0/n_0, the variance penalty of one node.
  double penalty() const {
    return var(n1, s1, q1) / static_cast<double>(n1) +
           var(n0, s0, q0) / static_cast<double>(n0);
  }
  GroupAccum minus(const GroupAccum& o) const {
    GroupAccum r;
    r.n1 = n1 - o.n1;
    r.n0 = n0 - o.n0;
    r.s1 = s1 - o.s1;
    r.s0 = s0 - o.s0;
    r.q1 = q1 - o.q1;
    r.q0 = q0 - o.q0;
    return r;
  }
};

GroupStats finalize_stats(const Dataset& ds, const std::vector<std::size_t>& idx) {
  GroupAccum a;
  for (auto i : idx) a.add(ds.w[i], ds.y[i]);
  GroupStats g;
  g.n1 = a.n1;
  g.n0 = a.n0;
  g.mean1 = a.n1 > 0 ? a.s1 / static_cast<double>(a.n1) : 0.0;
  g.mean0 = a.n0 > 0 ? a.s0 / static_cast<double>(a.n0) : 0.0;
  g.var1 = GroupAccum::var(a.n1, a.s1, a.q1);
  g.var0 = GroupAccum::var(a.n0, a.s0, a.q0);
  return g;
}

struct Candidate {
  double gain = 0.0;
  SplitAtom atom;
  bool valid = false;
};

// Tie-break: higher gain, then lower feature index, then lower threshold /
// lexicographically smaller level set.
bool candidate_improves(const Candidate& cand, const Candidate& best) {
  if (!best.valid) return true;
  if (cand.gain != best.gain) return cand.gain > best.gain;
  if (cand.atom.feature != best.atom.feature) {
    return cand.atom.feature < best.atom.feature;
  }
  if (!cand.atom.is_categorical) return cand.atom.threshold < best.atom.threshold;
  return std::lexicographical_compare(
      cand.atom.left_levels.begin(), cand.atom.left_levels.end(),
      best.atom.left_levels.begin(), best.atom.left_levels.end());
}

class TreeFitter {
 public:
  TreeFitter(const Dataset& train, const Dataset& est, const TreeParams& params,
             std::uint64_t seed)
      : train_(train), est_(est), params_(params), rng_(seed) {
    mtry_ = std::min<std::size_t>(
        static_cast<std::size_t>(params.mtry), train.n_features());
    n_root_ = static_cast<double>(train.n());
  }

  CausalTree fit() {
    std::vector<std::size_t> train_idx(train_.n()), est_idx(est_.n());
    for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
    for (std::size_t i = 0; i < est_idx.size(); ++i) est_idx[i] = i;
    CausalTree tree;
    tree.schema = train_.schema();
    tree.params = params_;
    build(tree.nodes, train_idx, est_idx, 0);
    assign_leaf_ids(tree.nodes);
    return tree;
  }

 private:
  static void assign_leaf_ids(std::vector<TreeNode>& nodes) {
    std::int32_t next = 0;
    // Preorder construction already visits leaves left-to-right, but number
    // them with an explicit DFS so the invariant does not hinge on that.
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
      const std::int32_t at = stack.back();
      stack.pop_back();
      if (nodes[at].is_leaf) {
        nodes[at].leaf_id = next++;
      } else {
        stack.push_back(nodes[at].right);
        stack.push_back(nodes[at].left);
      }
    }
  }

  std::vector<int> sample_features() {
    const std::size_t d = train_.n_features();
    std::vector<int> all(d);
    for (std::size_t j = 0; j < d; ++j) all[j] = static_cast<int>(j);
    if (mtry_ >= d) return all;
    for (std::size_t i = 0; i < mtry_; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(d - i));
      std::swap(all[i], all[j]);
    }
    all.resize(mtry_);
    std::sort(all.begin(), all.end());
    return all;
  }

  bool child_ok(const GroupAccum& train_side, std::int64_t est_n1,
                std::int64_t est_n0, std::int64_t est_total) const {
    const auto need = static_cast<std::int64_t>(params_.nodesize);
    if (train_side.n1 < need || train_side.n0 < need) return false;
    if (est_n1 < need || est_n0 < need) return false;
    if (params_.min_total_leaf_size > 0) {
      const auto m = static_cast<std::int64_t>(params_.min_total_leaf_size);
      if (train_side.total() < m || est_total < m) return false;
    }
    return true;
  }

  double gain_of(const GroupAccum& parent, const GroupAccum& left,
                 const GroupAccum& right) const {
    const auto nl = static_cast<double>(left.total());
    const auto nr = static_cast<double>(right.total());
    const auto np = static_cast<double>(parent.total());
    const double tl = left.tau(), tr = right.tau(), tp = parent.tau();
    const double hetero = (nl * tl * tl + nr * tr * tr - np * tp * tp) / n_root_;
    if (params_.alpha == 0.0) return hetero;
    return hetero -
           params_.alpha * (left.penalty() + right.penalty() - parent.penalty());
  }

  void scan_numeric(int feature, const std::vector<std::size_t>& train_idx,
                    const std::vector<std::size_t>& est_idx,
                    const GroupAccum& parent, Candidate& best) const {
    const auto& col = train_.features[feature].num;
    const std::size_t m = train_idx.size();
    std::vector<std::size_t> order(train_idx);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    std::vector<double> vals(m);
    for (std::size_t i = 0; i < m; ++i) vals[i] = col[order[i]];
    if (vals.front() == vals.back()) return;  // constant in node

    std::vector<GroupAccum> prefix(m + 1);
    for (std::size_t i = 0; i < m; ++i) {
      prefix[i + 1] = prefix[i];
      prefix[i + 1].add(train_.w[order[i]], train_.y[order[i]]);
    }

    const auto& ecol = est_.features[feature].num;
    std::vector<std::size_t> eorder(est_idx);
    std::sort(eorder.begin(), eorder.end(),
              [&](std::size_t a, std::size_t b) { return ecol[a] < ecol[b]; });
    std::vector<double> evals(eorder.size());
    std::vector<std::int64_t> e1(eorder.size() + 1, 0), e0(eorder.size() + 1, 0);
    for (std::size_t i = 0; i < eorder.size(); ++i) {
      evals[i] = ecol[eorder[i]];
      e1[i + 1] = e1[i] + (est_.w[eorder[i]] == 1);
      e0[i + 1] = e0[i] + (est_.w[eorder[i]] == 0);
    }

    std::vector<double> thresholds;
    if (params_.bucketized) {
      for (int k = 1; k <= 9; ++k) {
        thresholds.push_back(vals[(static_cast<std::size_t>(k) * m) / 10]);
      }
    } else {
      for (std::size_t i = 0; i + 1 < m; ++i) {
        if (vals[i] < vals[i + 1]) {
          thresholds.push_back(0.5 * (vals[i] + vals[i + 1]));
        }
      }
    }
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());

    for (double t : thresholds) {
      // Count by the same comparison routing uses, so candidates whose
      // midpoint rounds onto an observed value stay consistent.
      const std::size_t pos = static_cast<std::size_t>(
          std::upper_bound(vals.begin(), vals.end(), t) - vals.begin());
      if (pos == 0 || pos == m) continue;
      const GroupAccum& left = prefix[pos];
      const GroupAccum right = prefix[m].minus(left);
      const std::size_t epos = static_cast<std::size_t>(
          std::upper_bound(evals.begin(), evals.end(), t) - evals.begin());
      const std::int64_t etot = static_cast<std::int64_t>(evals.size());
      if (!child_ok(left, e1[epos], e0[epos], static_cast<std::int64_t>(epos)) ||
          !child_ok(right, e1[evals.size()] - e1[epos],
                    e0[evals.size()] - e0[epos],
                    etot - static_cast<std::int64_t>(epos))) {
        continue;
      }
      Candidate cand;
      cand.valid = true;
      cand.gain = gain_of(parent, left, right);
      cand.atom.feature = feature;
      cand.atom.is_categorical = false;
      cand.atom.threshold = t;
      if (candidate_improves(cand, best)) best = cand;
    }
  }

  void scan_categorical(int feature, const std::vector<std::size_t>& train_idx,
                        const std::vector<std::size_t>& est_idx,
                        const GroupAccum& parent, Candidate& best) const {
    const auto& col = train_.features[feature].cat;
    const std::size_t n_levels = train_.features[feature].info.levels.size();
    std::vector<GroupAccum> by_level(n_levels);
    for (auto i : train_idx) by_level[col[i]].add(train_.w[i], train_.y[i]);

    struct LevelOrder {
      std::int32_t code;
      double tau;
    };
    std::vector<LevelOrder> observed;
    for (std::size_t c = 0; c < n_levels; ++c) {
      if (by_level[c].total() == 0) continue;
      const auto& g = by_level[c];
      const double tau = (g.n1 > 0 && g.n0 > 0) ? g.tau() : 0.0;
      observed.push_back({static_cast<std::int32_t>(c), tau});
    }
    if (observed.size() < 2) return;
    std::sort(observed.begin(), observed.end(),
              [](const LevelOrder& a, const LevelOrder& b) {
                if (a.tau != b.tau) return a.tau < b.tau;
                return a.code < b.code;
              });

    const auto& ecol = est_.features[feature].cat;
    std::vector<std::int64_t> e1(n_levels, 0), e0(n_levels, 0);
    std::int64_t etot1 = 0, etot0 = 0;
    for (auto i : est_idx) {
      if (est_.w[i] == 1) {
        ++e1[ecol[i]];
        ++etot1;
      } else {
        ++e0[ecol[i]];
        ++etot0;
      }
    }

    GroupAccum left;
    std::int64_t le1 = 0, le0 = 0;
    std::vector<std::int32_t> left_levels;
    for (std::size_t j = 0; j + 1 < observed.size(); ++j) {
      const std::int32_t code = observed[j].code;
      left.s1 += by_level[code].s1;
      left.s0 += by_level[code].s0;
      left.q1 += by_level[code].q1;
      left.q0 += by_level[code].q0;
      left.n1 += by_level[code].n1;
      left.n0 += by_level[code].n0;
      le1 += e1[code];
      le0 += e0[code];
      left_levels.push_back(code);
      const GroupAccum right = parent.minus(left);
      if (!child_ok(left, le1, le0, le1 + le0) ||
          !child_ok(right, etot1 - le1, etot0 - le0,
                    (etot1 + etot0) - (le1 + le0))) {
        continue;
      }
      Candidate cand;
      cand.valid = true;
      cand.gain = gain_of(parent, left, right);
      cand.atom.feature = feature;
      cand.atom.is_categorical = true;
      cand.atom.left_levels = left_levels;
      std::sort(cand.atom.left_levels.begin(), cand.atom.left_levels.end());
      if (candidate_improves(cand, best)) best = cand;
    }
  }

  bool goes_left(const SplitAtom& atom, const Dataset& ds, std::size_t i) const {
    if (!atom.is_categorical) {
      return ds.features[atom.feature].num[i] <= atom.threshold;
    }
    const std::int32_t code = ds.features[atom.feature].cat[i];
    return std::binary_search(atom.left_levels.begin(), atom.left_levels.end(),
                              code);
  }

  std::int32_t build(std::vector<TreeNode>& nodes,
                     const std::vector<std::size_t>& train_idx,
                     const std::vector<std::size_t>& est_idx, int depth) {
    const auto at = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    nodes[at].est = finalize_stats(est_, est_idx);
    nodes[at].tau_hat = nodes[at].est.tau();

    if (depth >= params_.max_depth) return at;

    GroupAccum parent;
    for (auto i : train_idx) parent.add(train_.w[i], train_.y[i]);

    Candidate best;
    for (int f : sample_features()) {
      if (train_.features[f].info.kind == FeatureKind::numeric) {
        scan_numeric(f, train_idx, est_idx, parent, best);
      } else {
        scan_categorical(f, train_idx, est_idx, parent, best);
      }
    }
    if (!best.valid || best.gain <= params_.min_gain) return at;

    std::vector<std::size_t> tl, tr, el, er;
    for (auto i : train_idx) (goes_left(best.atom, train_, i) ? tl : tr).push_back(i);
    for (auto i : est_idx) (goes_left(best.atom, est_, i) ? el : er).push_back(i);

    nodes[at].is_leaf = false;
    nodes[at].split = best.atom;
    const std::int32_t l = build(nodes, tl, el, depth + 1);
    const std::int32_t r = build(nodes, tr, er, depth + 1);
    nodes[at].left = l;
    nodes[at].right = r;
    return at;
  }

  const Dataset& train_;
  const Dataset& est_;
  TreeParams params_;
  Rng rng_;
  std::size_t mtry_ = 1;
  double n_root_ = 1;
};

}  // namespace

void TreeParams::validate() const {
  if (mtry < 1) throw ConfigError("tree: mtry must be >= 1");
  if (nodesize < 1) throw ConfigError("tree: nodesize must be >= 1");
  if (max_depth < 0) throw ConfigError("tree: max_depth must be >= 0");
  if (alpha < 0) throw ConfigError("tree: alpha must be >= 0");
  if (min_gain < 0) throw ConfigError("tree: min_gain must be >= 0");
  if (!(honest_ratio > 0.0 && honest_ratio < 1.0)) {
    throw ConfigError("tree: honest_ratio must be in (0,1)");
  }
  if (min_total_leaf_size < 0) {
    throw ConfigError("tree: min_total_leaf_size must be >= 0");
  }
}

int CausalTree::leaf_count() const {
  int c = 0;
  for (const auto& n : nodes) c += n.is_leaf;
  return c;
}

const TreeNode& CausalTree::leaf(int leaf_id) const {
  for (const auto& n : nodes) {
    if (n.is_leaf && n.leaf_id == leaf_id) return n;
  }
  throw ConfigError("no leaf with id " + std::to_string(leaf_id));
}

int CausalTree::depth() const {
  // Iterative depth over the node-index tree.
  std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
  int best = 0;
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[at].is_leaf) {
      stack.push_back({nodes[at].left, d + 1});
      stack.push_back({nodes[at].right, d + 1});
    }
  }
  return best;
}

SchemaBinding::SchemaBinding(const FeatureSchema& tree_schema, const Dataset& ds) {
  num_cols_.resize(tree_schema.size(), nullptr);
  cat_cols_.resize(tree_schema.size(), nullptr);
  code_maps_.resize(tree_schema.size());
  columns_.resize(tree_schema.size(), nullptr);
  for (std::size_t f = 0; f < tree_schema.size(); ++f) {
    const FeatureInfo& want = tree_schema[f];
    const FeatureColumn* col = ds.find_feature(want.name);
    if (col == nullptr) {
      throw SchemaError("missing feature column `" + want.name + "`");
    }
    if (col->info.kind != want.kind) {
      throw SchemaError("feature `" + want.name + "` has the wrong kind");
    }
    columns_[f] = col;
    if (want.kind == FeatureKind::numeric) {
      num_cols_[f] = &col->num;
    } else {
      cat_cols_[f] = &col->cat;
      if (col->info.levels != want.levels) {
        std::unordered_map<std::string, std::int32_t> lookup;
        for (std::size_t c = 0; c < want.levels.size(); ++c) {
          lookup[want.levels[c]] = static_cast<std::int32_t>(c);
        }
        auto& map = code_maps_[f];
        map.resize(col->info.levels.size());
        for (std::size_t c = 0; c < col->info.levels.size(); ++c) {
          auto it = lookup.find(col->info.levels[c]);
          map[c] = it == lookup.end() ? -1 : it->second;
        }
      }
    }
  }
}

const std::string& SchemaBinding::level_name(int feature, std::size_t row) const {
  const FeatureColumn* col = columns_[feature];
  return col->info.levels[col->cat[row]];
}

int route_row(const CausalTree& tree, const SchemaBinding& binding,
              std::size_t row) {
  std::int32_t at = 0;
  while (!tree.nodes[at].is_leaf) {
    const SplitAtom& atom = tree.nodes[at].split;
    bool left;
    if (!atom.is_categorical) {
      left = binding.num(atom.feature, row) <= atom.threshold;
    } else {
      const std::int32_t code = binding.cat(atom.feature, row);
      if (code < 0) {
        throw RoutingError("row " + std::to_string(row) + ": feature `" +
                           tree.schema[atom.feature].name + "` level `" +
                           binding.level_name(atom.feature, row) +
                           "` was not seen at fit time");
      }
      left = std::binary_search(atom.left_levels.begin(),
                                atom.left_levels.end(), code);
    }
    at = left ? tree.nodes[at].left : tree.nodes[at].right;
  }
  return tree.nodes[at].leaf_id;
}

namespace {
const TreeNode& leaf_by_id(const CausalTree& tree, int leaf_id) {
  // Leaves are numbered in DFS order, so a linear scan keyed on leaf_id is
  // fine for prediction-sized trees; cache-friendly and allocation free.
  for (const auto& n : tree.nodes) {
    if (n.is_leaf && n.leaf_id == leaf_id) return n;
  }
  throw ConfigError("corrupt tree: leaf id not found");
}
}  // namespace

double predict_cate(const CausalTree& tree, const Dataset& rows, std::size_t row) {
  SchemaBinding binding(tree.schema, rows);
  return leaf_by_id(tree, route_row(tree, binding, row)).tau_hat;
}

std::vector<double> predict_cate(const CausalTree& tree, const Dataset& rows) {
  SchemaBinding binding(tree.schema, rows);
  std::vector<double> tau_by_leaf(tree.leaf_count());
  for (const auto& n : tree.nodes) {
    if (n.is_leaf) tau_by_leaf[n.leaf_id] = n.tau_hat;
  }
  std::vector<double> out(rows.n());
  for (std::size_t i = 0; i < rows.n(); ++i) {
    out[i] = tau_by_leaf[route_row(tree, binding, i)];
  }
  return out;
}

CausalTree fit_causal_tree(const Dataset& train, const Dataset& est,
                           const TreeParams& params, std::uint64_t seed) {
  params.validate();
  if (train.schema() != est.schema()) {
    throw SchemaError("fit: train and est datasets must share one schema");
  }
  if (train.treated_count() == 0 || train.control_count() == 0 ||
      est.treated_count() == 0 || est.control_count() == 0) {
    throw ValidationError("fit: both subsets need treated and control rows");
  }
  TreeFitter fitter(train, est, params, seed);
  CausalTree tree = fitter.fit();
  tree.fit_seed = seed;
  return tree;
}

CausalTree fit_causal_tree(const Dataset& ds, const TreeParams& params,
                           std::uint64_t seed) {
  params.validate();
  auto [train, est] = honest_split(ds, params.honest_ratio, mix_seed(seed, 0xE57ull));
  return fit_causal_tree(train, est, params, seed);
}

namespace {

// Per-node train-subset risk terms for cost-complexity pruning.
struct NodeRisk {
  std::int64_t n = 0;
  double tau = 0.0;
  // -(n * tau^2) / n_root
  double leaf_risk(double n_root) const {
    return -(static_cast<double>(n) * tau * tau) / n_root;
  }
};

std::vector<NodeRisk> train_risks(const CausalTree& tree, const Dataset& train) {
  struct Acc {
    std::int64_t n1 = 0, n0 = 0;
    double s1 = 0, s0 = 0;
  };
  std::vector<Acc> acc(tree.nodes.size());
  SchemaBinding binding(tree.schema, train);
  for (std::size_t i = 0; i < train.n(); ++i) {
    std::int32_t at = 0;
    for (;;) {
      Acc& a = acc[at];
      if (train.w[i] == 1) {
        ++a.n1;
        a.s1 += train.y[i];
      } else {
        ++a.n0;
        a.s0 += train.y[i];
      }
      if (tree.nodes[at].is_leaf) break;
      const SplitAtom& atom = tree.nodes[at].split;
      bool left;
      if (!atom.is_categorical) {
        left = binding.num(atom.feature, i) <= atom.threshold;
      } else {
        const std::int32_t code = binding.cat(atom.feature, i);
        left = code >= 0 && std::binary_search(atom.left_levels.begin(),
                                               atom.left_levels.end(), code);
      }
      at = left ? tree.nodes[at].left : tree.nodes[at].right;
    }
  }
  std::vector<NodeRisk> out(tree.nodes.size());
  for (std::size_t k = 0; k < acc.size(); ++k) {
    out[k].n = acc[k].n1 + acc[k].n0;
    out[k].tau = (acc[k].n1 > 0 && acc[k].n0 > 0)
                     ? acc[k].s1 / static_cast<double>(acc[k].n1) -
                           acc[k].s0 / static_cast<double>(acc[k].n0)
                     : 0.0;
  }
  return out;
}

CausalTree rebuild_collapsed(const CausalTree& tree,
                             const std::vector<char>& collapse) {
  CausalTree out;
  out.schema = tree.schema;
  out.params = tree.params;
  out.fit_seed = tree.fit_seed;
  // DFS copy preserving left-to-right order.
  struct Copier {
    const CausalTree& src;
    const std::vector<char>& collapse;
    CausalTree& dst;
    std::int32_t copy(std::int32_t at) {
      const auto to = static_cast<std::int32_t>(dst.nodes.size());
      dst.nodes.emplace_back();
      const TreeNode& n = src.nodes[at];
      dst.nodes[to].est = n.est;
      dst.nodes[to].tau_hat = n.tau_hat;
      if (!n.is_leaf && !collapse[at]) {
        dst.nodes[to].is_leaf = false;
        dst.nodes[to].split = n.split;
        const std::int32_t l = copy(n.left);
        const std::int32_t r = copy(n.right);
        dst.nodes[to].left = l;
        dst.nodes[to].right = r;
      }
      return to;
    }
  } copier{tree, collapse, out};
  copier.copy(0);
  std::int32_t next = 0;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const std::int32_t at = stack.back();
    stack.pop_back();
    if (out.nodes[at].is_leaf) {
      out.nodes[at].leaf_id = next++;
    } else {
      stack.push_back(out.nodes[at].right);
      stack.push_back(out.nodes[at].left);
    }
  }
  return out;
}

std::vector<char> collapse_set_at(const CausalTree& tree,
                                  const std::vector<NodeRisk>& risks,
                                  double n_root, double alpha) {
  std::vector<char> collapse(tree.nodes.size(), 0);
  // Bottom-up optimal cost; postorder via explicit recursion.
  std::vector<double> cost(tree.nodes.size(), 0.0);
  struct Walker {
    const CausalTree& tree;
    const std::vector<NodeRisk>& risks;
    double n_root, alpha;
    std::vector<char>& collapse;
    std::vector<double>& cost;
    double walk(std::int32_t at) {
      const double as_leaf = risks[at].leaf_risk(n_root) + alpha;
      if (tree.nodes[at].is_leaf) {
        cost[at] = as_leaf;
        return as_leaf;
      }
      const double sub = walk(tree.nodes[at].left) + walk(tree.nodes[at].right);
      if (as_leaf <= sub) {  // ties collapse: prefer the smaller tree
        collapse[at] = 1;
        cost[at] = as_leaf;
      } else {
        cost[at] = sub;
      }
      return cost[at];
    }
  } walker{tree, risks, n_root, alpha, collapse, cost};
  walker.walk(0);
  return collapse;
}

// Weakest-link breakpoints of the train risk.
std::vector<double> weakest_link_alphas(const CausalTree& tree,
                                        const std::vector<NodeRisk>& risks,
                                        double n_root) {
  std::vector<double> alphas;
  std::vector<char> collapsed(tree.nodes.size(), 0);
  for (;;) {
    if (tree.nodes[0].is_leaf || collapsed[0]) break;
    // Leaf risk sum and leaf count of the current subtree below each node.
    std::vector<double> sub_risk(tree.nodes.size(), 0.0);
    std::vector<int> sub_leaves(tree.nodes.size(), 0);
    struct Walker {
      const CausalTree& tree;
      const std::vector<char>& collapsed;
      const std::vector<NodeRisk>& risks;
      double n_root;
      std::vector<double>& sub_risk;
      std::vector<int>& sub_leaves;
      void walk(std::int32_t at) {
        if (tree.nodes[at].is_leaf || collapsed[at]) {
          sub_risk[at] = risks[at].leaf_risk(n_root);
          sub_leaves[at] = 1;
          return;
        }
        walk(tree.nodes[at].left);
        walk(tree.nodes[at].right);
        sub_risk[at] = sub_risk[tree.nodes[at].left] + sub_risk[tree.nodes[at].right];
        sub_leaves[at] = sub_leaves[tree.nodes[at].left] + sub_leaves[tree.nodes[at].right];
      }
    } walker{tree, collapsed, risks, n_root, sub_risk, sub_leaves};
    walker.walk(0);

    double gmin = 0.0;
    bool found = false;
    for (std::size_t at = 0; at < tree.nodes.size(); ++at) {
      if (tree.nodes[at].is_leaf || collapsed[at]) continue;
      if (sub_leaves[at] < 2) continue;
      const double g = (risks[at].leaf_risk(n_root) - sub_risk[at]) /
                       static_cast<double>(sub_leaves[at] - 1);
      if (!found || g < gmin) {
        gmin = g;
        found = true;
      }
    }
    if (!found) break;
    alphas.push_back(gmin);
    // Collapse every node achieving the minimum; mark whole subtrees so only
    // live internal nodes are revisited.
    for (std::size_t at = 0; at < tree.nodes.size(); ++at) {
      if (tree.nodes[at].is_leaf || collapsed[at]) continue;
      if (sub_leaves[at] < 2) continue;
      const double g = (risks[at].leaf_risk(n_root) - sub_risk[at]) /
                       static_cast<double>(sub_leaves[at] - 1);
      if (g == gmin) collapsed[at] = 1;
    }
    // Propagate collapse downward.
    struct Marker {
      const CausalTree& tree;
      std::vector<char>& collapsed;
      void mark(std::int32_t at, bool under) {
        if (under) collapsed[at] = 1;
        if (!tree.nodes[at].is_leaf) {
          const bool next = under || collapsed[at];
          mark(tree.nodes[at].left, next);
          mark(tree.nodes[at].right, next);
        }
      }
    } marker{tree, collapsed};
    marker.mark(0, false);
  }
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  return alphas;
}

}  // namespace

namespace detail {

CausalTree prune_at(const CausalTree& tree, const Dataset& train, double alpha) {
  const auto risks = train_risks(tree, train);
  const auto n_root = static_cast<double>(train.n());
  return rebuild_collapsed(tree, collapse_set_at(tree, risks, n_root, alpha));
}

}  // namespace detail

namespace {

// Nested weakest-link subtree sequence, largest first, deduplicated by leaf
// count. ladder[0] is the input tree itself.
std::vector<CausalTree> subtree_ladder(const CausalTree& tree,
                                       const Dataset& fit_ds) {
  const auto risks = train_risks(tree, fit_ds);
  const auto n_root = static_cast<double>(fit_ds.n());
  const auto alphas = weakest_link_alphas(tree, risks, n_root);
  std::vector<CausalTree> ladder;
  ladder.push_back(tree);
  std::vector<double> evals;
  for (std::size_t j = 0; j + 1 < alphas.size(); ++j) {
    evals.push_back(0.5 * (alphas[j] + alphas[j + 1]));
  }
  if (!alphas.empty()) evals.push_back(alphas.back());
  for (double a : evals) {
    CausalTree sub =
        rebuild_collapsed(tree, collapse_set_at(tree, risks, n_root, a));
    if (sub.leaf_count() < ladder.back().leaf_count()) {
      ladder.push_back(std::move(sub));
    }
  }
  if (ladder.back().leaf_count() > 1) {
    // The collapse-everything end of the sequence.
    ladder.push_back(rebuild_collapsed(
        tree, std::vector<char>(tree.nodes.size(), 1)));
  }
  return ladder;
}

const CausalTree& nearest_by_leaves(const std::vector<CausalTree>& ladder,
                                    int target) {
  const CausalTree* best = &ladder.front();
  int best_d = std::numeric_limits<int>::max();
  for (const auto& t : ladder) {
    const int d = std::abs(t.leaf_count() - target);
    if (d < best_d || (d == best_d && t.leaf_count() < best->leaf_count())) {
      best_d = d;
      best = &t;
    }
  }
  return *best;
}

}  // namespace

CausalTree prune_tree(const CausalTree& tree, const Dataset& train,
                      const Dataset& est, int folds, std::uint64_t seed) {
  (void)est;  // leaf effects are already stored per node from the honest fit
  if (folds < 2) throw ConfigError("prune: folds must be >= 2");
  if (tree.nodes.size() == 1) return tree;

  std::vector<std::size_t> treated, control;
  for (std::size_t i = 0; i < train.n(); ++i) {
    (train.w[i] == 1 ? treated : control).push_back(i);
  }
  // Every fold-complement is refit honestly, which needs two rows per arm;
  // clamp the fold count accordingly and skip the CV when the data cannot
  // support it.
  const int usable =
      static_cast<int>(std::min(treated.size(), control.size()));
  const int k_folds = std::min(folds, usable / 2);
  if (k_folds < 2) return tree;

  std::vector<CausalTree> ladder = subtree_ladder(tree, train);
  if (ladder.size() == 1) return tree;

  Rng rng(mix_seed(seed, 0xF01Dull));
  rng.shuffle(treated);
  rng.shuffle(control);
  std::vector<int> fold_of(train.n(), 0);
  for (std::size_t i = 0; i < treated.size(); ++i) {
    fold_of[treated[i]] = static_cast<int>(i % k_folds);
  }
  for (std::size_t i = 0; i < control.size(); ++i) {
    fold_of[control[i]] = static_cast<int>(i % k_folds);
  }

  const std::vector<double> full_pred = predict_cate(tree, train);
  std::vector<double> cv_err(ladder.size(), 0.0);
  for (int k = 0; k < k_folds; ++k) {
    std::vector<std::size_t> fit_idx, held_idx;
    for (std::size_t i = 0; i < train.n(); ++i) {
      (fold_of[i] == k ? held_idx : fit_idx).push_back(i);
    }
    const Dataset fit_ds = train.select_rows(fit_idx);
    // Full honest refit on the fold complement (its own estimation half), so
    // fold leaf effects are not correlated with the input tree's through a
    // shared estimation subset.
    const CausalTree fold_tree = fit_causal_tree(
        fit_ds, tree.params, mix_seed(seed, 0xF17ull, static_cast<std::uint64_t>(k)));
    const auto fold_ladder = subtree_ladder(fold_tree, fit_ds);
    for (std::size_t j = 0; j < ladder.size(); ++j) {
      // Complexity-matched fold subtree: same rung of the pruning sequence.
      const CausalTree& sub =
          nearest_by_leaves(fold_ladder, ladder[j].leaf_count());
      SchemaBinding binding(sub.schema, train);
      std::vector<double> tau_by_leaf(sub.leaf_count());
      for (const auto& n : sub.nodes) {
        if (n.is_leaf) tau_by_leaf[n.leaf_id] = n.tau_hat;
      }
      for (auto i : held_idx) {
        const double p = tau_by_leaf[route_row(sub, binding, i)];
        const double d = full_pred[i] - p;
        cv_err[j] += d * d;
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t j = 1; j < ladder.size(); ++j) {
    if (cv_err[j] <= cv_err[best]) best = j;  // ties -> the smaller tree
  }
  if (best == 0) return tree;
  return std::move(ladder[best]);
}

}  // namespace crforest
