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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "crforest/errors.hpp"
#include "crforest/forest.hpp"
#include "crforest/random.hpp"
#include "crforest/rules.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace crforest;
using namespace crforest::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

FeatureInfo numeric_info(const std::string& name) {
  return {name, FeatureKind::numeric, {}};
}

FeatureInfo binary_info(const std::string& name) {
  return {name, FeatureKind::categorical, {"0", "1"}};
}

TreeNode leaf_node(int id, double tau) {
  TreeNode n;
  n.is_leaf = true;
  n.leaf_id = id;
  n.tau_hat = tau;
  return n;
}

TreeNode numeric_split(int feature, double threshold, int left, int right) {
  TreeNode n;
  n.is_leaf = false;
  n.split.feature = feature;
  n.split.is_categorical = false;
  n.split.threshold = threshold;
  n.left = left;
  n.right = right;
  return n;
}

TreeNode cat_split(int feature, std::vector<std::int32_t> left_levels, int left,
                   int right) {
  TreeNode n;
  n.is_leaf = false;
  n.split.feature = feature;
  n.split.is_categorical = true;
  n.split.left_levels = std::move(left_levels);
  n.left = left;
  n.right = right;
  return n;
}

// x0 <= 3 then x0 <= 1 on the left path.
CausalTree nested_interval_tree() {
  CausalTree t;
  t.schema = {numeric_info("x0")};
  t.nodes = {numeric_split(0, 3.0, 1, 4), numeric_split(0, 1.0, 2, 3),
             leaf_node(0, 1.0), leaf_node(1, 2.0), leaf_node(2, 3.0)};
  return t;
}

// The paper-shaped pair of layer trees plus a final tree over encodings:
// treeA leaf 1: bronchitis=0, elementary=0, eye=0, religious > 2.5
// treeB leaf 1: bronchitis=0, heart=0, sleep <= 0.5, elementary=0, religious > 2.5
// treeB leaf 4: bronchitis=0, heart=1
CRFModel tlisa_model() {
  const FeatureSchema raw = {binary_info("bronchitis"), binary_info("elementary"),
                             binary_info("eye"),        binary_info("heart"),
                             numeric_info("religious"), numeric_info("sleep")};
  CausalTree tree_a;
  tree_a.schema = raw;
  tree_a.nodes = {
      cat_split(0, {0}, 1, 8),       // bronchitis
      cat_split(1, {0}, 2, 7),       // elementary
      cat_split(2, {0}, 3, 6),       // eye
      numeric_split(4, 2.5, 4, 5),   // religious
      leaf_node(0, 0.1), leaf_node(1, -1.0), leaf_node(2, 0.2),
      leaf_node(3, 0.3), leaf_node(4, 0.4)};

  CausalTree tree_b;
  tree_b.schema = raw;
  tree_b.nodes = {
      cat_split(0, {0}, 1, 10),      // bronchitis
      cat_split(3, {0}, 2, 9),       // heart
      numeric_split(5, 0.5, 3, 8),   // sleep
      cat_split(1, {0}, 4, 7),       // elementary
      numeric_split(4, 2.5, 5, 6),   // religious
      leaf_node(0, 0.0), leaf_node(1, -2.0), leaf_node(2, 0.0),
      leaf_node(3, 0.0), leaf_node(4, -1.5), leaf_node(5, 0.0)};

  CRFModel model;
  model.raw_schema = raw;
  model.layers.push_back({tree_a, tree_b});
  model.provenance["tree_1_0"] = {1, 0};
  model.provenance["tree_1_1"] = {1, 1};
  model.config.layers = 1;
  model.config.trees_per_layer = 2;

  CausalTree final_tree;
  FeatureInfo enc0{"tree_1_0", FeatureKind::categorical, {"0", "1", "2", "3", "4"}};
  FeatureInfo enc1{"tree_1_1",
                   FeatureKind::categorical,
                   {"0", "1", "2", "3", "4", "5"}};
  final_tree.schema = {enc0, enc1};
  final_tree.nodes = {cat_split(0, {1}, 1, 4), cat_split(1, {1, 4}, 2, 3),
                      leaf_node(0, -3.08), leaf_node(1, 0.5), leaf_node(2, 0.9)};
  model.final_tree = final_tree;
  return model;
}

}  // namespace

TEST_CASE("path rule of a root-only tree is TRUE") {
  CausalTree t;
  t.schema = {numeric_info("x0")};
  t.nodes = {leaf_node(0, 2.0)};
  const Conjunction c = extract_path_rule(t, 0);
  CHECK(c.is_true());
  CHECK(c.literal_count() == 0);
}

TEST_CASE("nested numeric bounds tighten to one atom") {
  const Conjunction c = extract_path_rule(nested_interval_tree(), 0);
  REQUIRE(c.intervals.size() == 1);
  CHECK(c.intervals.at("x0").hi == 1.0);
  CHECK_FALSE(c.intervals.at("x0").has_lo());
  CHECK(c.literal_count() == 1);

  const Conjunction mid = extract_path_rule(nested_interval_tree(), 1);
  CHECK(mid.intervals.at("x0").lo == 1.0);
  CHECK(mid.intervals.at("x0").hi == 3.0);
  CHECK(mid.literal_count() == 2);
}

TEST_CASE("unknown leaf id is rejected") {
  CHECK_THROWS(extract_path_rule(nested_interval_tree(), 7));
}

TEST_CASE("leaf conjunctions agree with routing and partition the space") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.d_num = 2;
  spec.d_cat = 1;
  spec.seed = 15;
  const Dataset ds = simulate(spec);
  TreeParams p;
  p.mtry = 3;
  p.max_depth = 4;
  const CausalTree tree = fit_causal_tree(ds, ds, p, 77);

  SyntheticSpec probe_spec = spec;
  probe_spec.n = 1000;
  probe_spec.seed = 16;
  const Dataset probe = simulate(probe_spec);
  std::vector<Conjunction> leaf_rules;
  for (int j = 0; j < tree.leaf_count(); ++j) {
    leaf_rules.push_back(extract_path_rule(tree, j));
  }
  SchemaBinding binding(tree.schema, probe);
  for (std::size_t i = 0; i < probe.n(); ++i) {
    const int routed = route_row(tree, binding, i);
    int hits = 0;
    for (int j = 0; j < tree.leaf_count(); ++j) {
      const bool in = eval_conjunction(leaf_rules[j], probe, i);
      hits += in;
      CHECK(in == (routed == j));
    }
    CHECK(hits == 1);  // pairwise disjoint, union TRUE
  }
}

TEST_CASE("expansion folds a complete leaf cover to TRUE") {
  CRFModel model = tlisa_model();
  Conjunction c;
  c.intersect_members("tree_1_0", {"0", "1", "2", "3", "4"});
  const Expr e = expand_rule(model, c);
  CHECK(e.kind == Expr::Kind::constant);
  CHECK(e.truth);
}

TEST_CASE("expansion of a one-layer model leaves only base atoms") {
  CRFModel model = tlisa_model();
  const Conjunction path = extract_path_rule(model.final_tree, 0);
  const Expr e = expand_rule(model, path);
  // walk: no member atom may reference an encoded feature
  std::vector<const Expr*> stack{&e};
  while (!stack.empty()) {
    const Expr* at = stack.back();
    stack.pop_back();
    if (at->kind == Expr::Kind::member_atom) {
      CHECK(model.provenance.find(at->feature) == model.provenance.end());
    }
    for (const auto& child : at->children) stack.push_back(&child);
  }
}

TEST_CASE("paper-shaped rule expands to AND over one OR branch") {
  CRFModel model = tlisa_model();
  const Conjunction path = extract_path_rule(model.final_tree, 0);
  REQUIRE(path.members.size() == 2);
  CHECK(path.members.at("tree_1_0") == std::vector<std::string>{"1"});
  CHECK(path.members.at("tree_1_1") == std::vector<std::string>{"1", "4"});

  const Expr e = expand_rule(model, path);
  REQUIRE(e.kind == Expr::Kind::all_of);
  int or_nodes = 0;
  for (const auto& child : e.children) {
    if (child.kind == Expr::Kind::any_of) {
      ++or_nodes;
      CHECK(child.children.size() == 2);
    }
  }
  CHECK(or_nodes == 1);
}

TEST_CASE("TLISA-shaped rule reduces to the paper's two-term DNF") {
  CRFModel model = tlisa_model();
  const Conjunction path = extract_path_rule(model.final_tree, 0);
  const Expr e = expand_rule(model, path);
  auto terms = to_dnf(e, 10000);
  REQUIRE(terms.size() == 2);

  const Universe universe = raw_universe(model);
  const auto minimized = minimize_dnf(terms, universe);
  REQUIRE(minimized.size() == 2);

  // Both terms share the four common literals.
  for (const auto& t : minimized) {
    CHECK(t.members.at("bronchitis") == std::vector<std::string>{"0"});
    CHECK(t.members.at("elementary") == std::vector<std::string>{"0"});
    CHECK(t.members.at("eye") == std::vector<std::string>{"0"});
    CHECK(t.intervals.at("religious").lo == 2.5);
  }
  // They differ in heart-disease status; the heart=0 term also bounds sleep.
  bool saw_heart0 = false, saw_heart1 = false;
  for (const auto& t : minimized) {
    if (t.members.at("heart") == std::vector<std::string>{"0"}) {
      saw_heart0 = true;
      CHECK(t.intervals.at("sleep").hi == 0.5);
      CHECK(t.literal_count() == 6);
    }
    if (t.members.at("heart") == std::vector<std::string>{"1"}) {
      saw_heart1 = true;
      CHECK(t.intervals.find("sleep") == t.intervals.end());
      CHECK(t.literal_count() == 5);
    }
  }
  CHECK(saw_heart0);
  CHECK(saw_heart1);

  // Idempotent on this instance.
  CHECK(minimize_dnf(minimized, universe) == minimized);
}

TEST_CASE("to_dnf distributes AND over OR") {
  // A and (B or C) with A = x0 <= 1, B = g0 in {a}, C = g0 in {b}
  Interval le1;
  le1.hi = 1.0;
  const Expr e = Expr::all_of(
      {Expr::numeric("x0", le1),
       Expr::any_of({Expr::member("g0", {"a"}), Expr::member("g0", {"b"})})});
  const auto terms = to_dnf(e);
  REQUIRE(terms.size() == 2);
  for (const auto& t : terms) {
    CHECK(t.intervals.at("x0").hi == 1.0);
    CHECK(t.members.at("g0").size() == 1);
  }
}

TEST_CASE("to_dnf prunes contradictory branches during distribution") {
  Interval le1, gt2, le0;
  le1.hi = 1.0;
  gt2.lo = 2.0;
  le0.hi = 0.0;
  const Expr e = Expr::all_of(
      {Expr::numeric("x0", le1),
       Expr::any_of({Expr::numeric("x0", gt2), Expr::numeric("x0", le0)})});
  const auto terms = to_dnf(e);
  REQUIRE(terms.size() == 1);
  CHECK(terms[0].intervals.at("x0").hi == 0.0);
  CHECK_FALSE(terms[0].intervals.at("x0").has_lo());
}

TEST_CASE("to_dnf enforces the term budget") {
  // (a1 or b1) and (a2 or b2) and ... -> 2^6 terms
  std::vector<Expr> clauses;
  for (int k = 0; k < 6; ++k) {
    Interval lo_side, hi_side;
    lo_side.hi = -0.5 - 0.1 * k;
    hi_side.lo = 0.5 + 0.1 * k;
    clauses.push_back(Expr::any_of({Expr::numeric("x" + std::to_string(k), lo_side),
                                    Expr::numeric("x" + std::to_string(k), hi_side)}));
  }
  const Expr e = Expr::all_of(std::move(clauses));
  CHECK(to_dnf(e, 10000).size() == 64);
  try {
    to_dnf(e, 10);
    FAIL("expected RuleExplosionError");
  } catch (const RuleExplosionError& ex) {
    CHECK(ex.partial_terms > 10);
  }
}

TEST_CASE("random expressions: DNF is cell-equivalent to the input") {
  Rng rng(501);
  for (int trial = 0; trial < 60; ++trial) {
    int atoms = 12;
    const Expr e = random_expr(rng, atoms);
    const auto dnf = to_dnf(e, 100000);
    CHECK(expr_equivalent_to_dnf(e, dnf));
  }
}

TEST_CASE("to_dnf is invariant to child ordering") {
  Rng rng(907);
  for (int trial = 0; trial < 30; ++trial) {
    int atoms = 10;
    Expr e = random_expr(rng, atoms);
    const auto base = to_dnf(e, 100000);
    // shuffle children recursively in place
    std::vector<Expr*> stack{&e};
    while (!stack.empty()) {
      Expr* at = stack.back();
      stack.pop_back();
      rng.shuffle(at->children);
      for (auto& c : at->children) stack.push_back(&c);
    }
    CHECK(to_dnf(e, 100000) == base);
  }
}

TEST_CASE("minimize: absorption drops subsumed terms") {
  Conjunction a;
  a.intersect_members("g0", {"a"});
  Conjunction ab = a;
  ab.intersect_interval("x0", -kInf, 1.0);
  const auto out = minimize_dnf({a, ab}, pool_universe());
  REQUIRE(out.size() == 1);
  CHECK(out[0] == a);
}

TEST_CASE("minimize: numeric consensus merges complementary halves") {
  Conjunction left, right;
  left.intersect_members("g0", {"a"});
  left.intersect_interval("x0", -kInf, 2.0);
  right.intersect_members("g0", {"a"});
  right.intersect_interval("x0", 2.0, kInf);
  const auto out = minimize_dnf({left, right}, pool_universe());
  REQUIRE(out.size() == 1);
  CHECK(out[0].intervals.empty());
  CHECK(out[0].members.at("g0") == std::vector<std::string>{"a"});
}

TEST_CASE("minimize: categorical consensus needs a partition of the universe") {
  Conjunction lo, hi;
  lo.intersect_interval("x0", -kInf, 0.0);
  lo.intersect_members("g0", {"a"});
  hi.intersect_interval("x0", -kInf, 0.0);
  hi.intersect_members("g0", {"b", "c"});
  const auto merged = minimize_dnf({lo, hi}, pool_universe());
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].members.empty());

  // Overlapping non-nested sets are outside the consensus rule and stay.
  Conjunction left = lo, right = hi;
  left.members["g0"] = {"a", "b"};
  right.members["g0"] = {"b", "c"};
  const auto kept = minimize_dnf({left, right}, pool_universe());
  CHECK(kept.size() == 2);
}

TEST_CASE("minimize drops full-universe memberships as trivial") {
  Conjunction t;
  t.intersect_members("g0", {"a", "b", "c"});
  t.intersect_interval("x1", 0.5, kInf);
  const auto out = minimize_dnf({t}, pool_universe());
  REQUIRE(out.size() == 1);
  CHECK(out[0].members.empty());
  CHECK(out[0].intervals.at("x1").lo == 0.5);
}

TEST_CASE("minimize preserves semantics and never grows on random DNFs") {
  Rng rng(611);
  const Universe universe = pool_universe();
  for (int trial = 0; trial < 80; ++trial) {
    std::vector<Conjunction> terms;
    const std::size_t k = 1 + rng.below(6);
    for (std::size_t j = 0; j < k; ++j) terms.push_back(random_term(rng));
    const auto mini = minimize_dnf(terms, universe);

    auto count_literals = [](const std::vector<Conjunction>& ts) {
      std::size_t c = 0;
      for (const auto& t : ts) c += t.literal_count();
      return c;
    };
    CHECK(mini.size() <= terms.size());
    CHECK(count_literals(mini) <= count_literals(terms));
    CHECK(minimize_dnf(mini, universe) == mini);  // idempotent
    CHECK(dnfs_equivalent(terms, mini, &universe));
  }
}

TEST_CASE("rules_report: single-leaf model prints IF TRUE") {
  SyntheticSpec spec;
  spec.n = 60;
  spec.d_num = 1;
  spec.seed = 5;
  const Dataset ds = simulate(spec);
  CRFConfig config;
  config.layers = 0;
  config.master_seed = 3;
  TreeParams final_params;
  final_params.max_depth = 0;  // force a root-only tree
  const CRFModel model = fit_crf_ct(ds, config, final_params, false);
  const auto rules = rules_report(model);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].terms.size() == 1);
  CHECK(rules[0].terms[0].is_true());
  const std::string text = format_rule(rules[0]);
  CHECK(text.find("IF TRUE THEN CATE = ") == 0);
}

TEST_CASE("rules_report renders paper-style text") {
  const CRFModel model = tlisa_model();
  const auto rules = rules_report(model);
  REQUIRE(rules.size() == 3);
  // Largest |CATE| first.
  CHECK(rules[0].cate == -3.08);
  CHECK(rules[0].leaf_id == 0);
  const std::string text = format_rule(rules[0]);
  CHECK(text.find("IF (") == 0);
  CHECK(text.find("bronchitis = 0") != std::string::npos);
  CHECK(text.find("religious > 2.5") != std::string::npos);
  CHECK(text.find("∨") != std::string::npos);  // an OR of two terms
  CHECK(text.find("THEN CATE = -3.08") != std::string::npos);
}

TEST_CASE("rules_report honors top_k and the minimize flag") {
  const CRFModel model = tlisa_model();
  RulesReportOptions opts;
  opts.top_k = 1;
  CHECK(rules_report(model, opts).size() == 1);

  RulesReportOptions raw_opts;
  raw_opts.minimize = false;
  for (const auto& rule : rules_report(model, raw_opts)) {
    CHECK(rule.terms_after == rule.terms_before);
  }
  for (const auto& rule : rules_report(model)) {
    CHECK(rule.terms_after <= rule.terms_before);
    CHECK(rule.literals_after <= rule.literals_before);
  }
}

TEST_CASE("rules_report falls back to encoded form on term explosion") {
  const CRFModel model = tlisa_model();
  RulesReportOptions opts;
  opts.max_terms = 1;
  const auto rules = rules_report(model, opts);
  REQUIRE(rules.size() == 3);
  const auto& top = rules[0];  // the two-term rule cannot fit in 1 term
  CHECK_FALSE(top.expanded);
  REQUIRE(top.terms.size() == 1);
  CHECK(top.terms[0].members.contains("tree_1_0"));
}

TEST_CASE("report rules agree with model routing on random rows") {
  SyntheticSpec spec;
  spec.n = 600;
  spec.d_num = 4;
  spec.seed = 808;
  spec.tau_form = TauForm::step;
  spec.tau_feature = 1;
  spec.tau_low = 0.0;
  spec.tau_high = 3.0;
  const Dataset ds = simulate(spec);
  CRFConfig config;
  config.layers = 1;
  config.trees_per_layer = 8;
  config.master_seed = 99;
  config.tree_params.mtry = 2;
  config.tree_params.max_depth = 3;
  config.tree_params.nodesize = 3;
  TreeParams final_params;
  final_params.mtry = TreeParams::kAllFeatures;
  final_params.max_depth = 3;
  final_params.nodesize = 3;
  const CRFModel model = fit_crf_ct(ds, config, final_params, false);

  RulesReportOptions opts;
  opts.top_k = 0;
  const auto rules = rules_report(model, opts);
  REQUIRE(rules.size() == static_cast<std::size_t>(model.final_tree.leaf_count()));
  for (const auto& rule : rules) REQUIRE(rule.expanded);

  SyntheticSpec probe_spec = spec;
  probe_spec.n = 2000;
  probe_spec.seed = 809;
  const Dataset probe = simulate(probe_spec);
  const Dataset encoded = encode_dataset(model, probe);
  SchemaBinding binding(model.final_tree.schema, encoded);
  for (std::size_t i = 0; i < probe.n(); ++i) {
    const int routed = route_row(model.final_tree, binding, i);
    for (const auto& rule : rules) {
      CHECK(eval_terms(rule.terms, probe, i) == (routed == rule.leaf_id));
    }
  }
}
