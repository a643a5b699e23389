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
#ifndef CRFOREST_RULES_H_
#define CRFOREST_RULES_H_

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "crforest/causal_tree.hpp"
#include "crforest/dataset.hpp"

namespace crforest {

struct CRFModel;  // forest.hpp

// Half-open numeric region lo < x <= hi.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool empty() const { return !(lo < hi); }
  bool has_lo() const { return lo != -std::numeric_limits<double>::infinity(); }
  bool has_hi() const { return hi != std::numeric_limits<double>::infinity(); }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool operator==(const Interval&) const = default;
};

// Normalized conjunction: per numeric feature one interval, per categorical
// feature one allowed level set. Feature keys are column names, so rules stay
// printable without a schema; encoded features use their tree_{l}_{q} name
// with leaf ids as level strings.
struct Conjunction {
  std::map<std::string, Interval> intervals;
  std::map<std::string, std::vector<std::string>> members;  // sorted level names

  bool is_true() const { return intervals.empty() && members.empty(); }
  bool contradictory() const;
  std::size_t literal_count() const;  // finite bounds + memberships
  void intersect_interval(const std::string& feature, double lo, double hi);
  void intersect_members(const std::string& feature,
                         const std::vector<std::string>& allowed);
  // Canonical key: deterministic ordering of DNF term lists.
  std::string key() const;
  bool operator==(const Conjunction&) const = default;
};

// AND/OR expression over atoms. Negation lives in atom direction/complement
// sets; there is no negation node.
struct Expr {
  enum class Kind { constant, numeric_atom, member_atom, all_of, any_of };
  Kind kind = Kind::constant;
  bool truth = true;  // constant payload
  std::string feature;
  Interval interval;                  // numeric_atom
  std::vector<std::string> allowed;   // member_atom, sorted
  std::vector<Expr> children;

  static Expr make_true();
  static Expr make_false();
  static Expr numeric(const std::string& feature, const Interval& iv);
  static Expr member(const std::string& feature, std::vector<std::string> allowed);
  // Constant-folding, flattening constructors.
  static Expr all_of(std::vector<Expr> children);
  static Expr any_of(std::vector<Expr> children);
};

// Conjunction of the split atoms along the root->leaf path, normalized.
// The right branch of a categorical split constrains to the complement of
// the left set over the schema's declared levels.
Conjunction extract_path_rule(const CausalTree& tree, int leaf_id);

// Replaces every encoded atom (resolved through the model's provenance map)
// by the OR of the recursively expanded path rules of its allowed leaves;
// an allowed set covering all leaves folds to TRUE.
Expr expand_rule(const CRFModel& model, const Conjunction& conj);

// AND-over-OR distribution with contradictions pruned during distribution,
// deterministic output order. Throws RuleExplosionError past max_terms.
std::vector<Conjunction> to_dnf(const Expr& expr, std::size_t max_terms = 10000);

// Full level sets per categorical feature, used to recognize trivial
// memberships and complementary (jointly exhaustive) pairs.
using Universe = std::map<std::string, std::vector<std::string>>;

// Exact simplification to a fixpoint of: constraint tightening, empty-term
// and duplicate drops, absorption, and single-feature consensus merges.
// Never increases term or literal count; idempotent.
std::vector<Conjunction> minimize_dnf(std::vector<Conjunction> terms,
                                      const Universe& universe);

bool eval_conjunction(const Conjunction& term, const Dataset& rows, std::size_t row);
bool eval_terms(const std::vector<Conjunction>& terms, const Dataset& rows,
                std::size_t row);
bool eval_expr(const Expr& expr, const Dataset& rows, std::size_t row);

struct DnfRule {
  std::vector<Conjunction> terms;  // OR of terms
  double cate = 0.0;               // final-tree leaf tau_hat
  int leaf_id = -1;
  bool expanded = true;  // false: term budget hit, emitted in encoded form
  std::size_t terms_before = 0;
  std::size_t literals_before = 0;
  std::size_t terms_after = 0;
  std::size_t literals_after = 0;
};

struct RulesReportOptions {
  bool minimize = true;
  int top_k = 0;  // 0 = all
  std::size_t max_terms = 10000;
};

// One rule per final-tree leaf: extract -> expand -> to_dnf -> (minimize),
// sorted by |CATE| descending. A leaf whose expansion exceeds the term budget
// is reported unexpanded instead of aborting the report.
std::vector<DnfRule> rules_report(const CRFModel& model,
                                  const RulesReportOptions& options = {});

Universe raw_universe(const CRFModel& model);

std::string format_term(const Conjunction& term);
// "IF <term> ∨ <term> THEN CATE = <value>"
std::string format_rule(const DnfRule& rule);

}  // namespace crforest

#endif  // CRFOREST_RULES_H_
