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
#include "crforest/rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "crforest/errors.hpp"
#include "crforest/forest.hpp"

namespace crforest {

bool Conjunction::contradictory() const {
  for (const auto& entry : intervals) {
    if (entry.second.empty()) return true;
  }
  for (const auto& entry : members) {
    if (entry.second.empty()) return true;
  }
  return false;
}

std::size_t Conjunction::literal_count() const {
  std::size_t c = members.size();
  for (const auto& entry : intervals) {
    c += entry.second.has_lo() + entry.second.has_hi();
  }
  return c;
}

void Conjunction::intersect_interval(const std::string& feature, double lo,
                                     double hi) {
  auto it = intervals.find(feature);
  if (it == intervals.end()) {
    Interval iv;
    iv.lo = lo;
    iv.hi = hi;
    if (!iv.has_lo() && !iv.has_hi()) return;  // vacuous
    intervals.emplace(feature, iv);
    return;
  }
  it->second.lo = std::max(it->second.lo, lo);
  it->second.hi = std::min(it->second.hi, hi);
}

void Conjunction::intersect_members(const std::string& feature,
                                    const std::vector<std::string>& allowed) {
  auto it = members.find(feature);
  if (it == members.end()) {
    members.emplace(feature, allowed);
    return;
  }
  std::vector<std::string> merged;
  std::set_intersection(it->second.begin(), it->second.end(), allowed.begin(),
                        allowed.end(), std::back_inserter(merged));
  it->second = std::move(merged);
}

std::string Conjunction::key() const {
  std::ostringstream os;
  for (const auto& [f, iv] : intervals) {
    os << 'n' << f << '\x1f';
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g|%.17g", iv.lo, iv.hi);
    os << buf << '\x1e';
  }
  for (const auto& [f, levels] : members) {
    os << 'c' << f << '\x1f';
    for (const auto& l : levels) os << l << '\x1f';
    os << '\x1e';
  }
  return os.str();
}

Expr Expr::make_true() {
  Expr e;
  e.kind = Kind::constant;
  e.truth = true;
  return e;
}

Expr Expr::make_false() {
  Expr e;
  e.kind = Kind::constant;
  e.truth = false;
  return e;
}

Expr Expr::numeric(const std::string& feature, const Interval& iv) {
  if (iv.empty()) return make_false();
  if (!iv.has_lo() && !iv.has_hi()) return make_true();
  Expr e;
  e.kind = Kind::numeric_atom;
  e.feature = feature;
  e.interval = iv;
  return e;
}

Expr Expr::member(const std::string& feature, std::vector<std::string> allowed) {
  if (allowed.empty()) return make_false();
  Expr e;
  e.kind = Kind::member_atom;
  e.feature = feature;
  e.allowed = std::move(allowed);
  return e;
}

Expr Expr::all_of(std::vector<Expr> children) {
  std::vector<Expr> kept;
  for (auto& c : children) {
    if (c.kind == Kind::constant) {
      if (!c.truth) return make_false();
      continue;
    }
    if (c.kind == Kind::all_of) {
      for (auto& gc : c.children) kept.push_back(std::move(gc));
    } else {
      kept.push_back(std::move(c));
    }
  }
  if (kept.empty()) return make_true();
  if (kept.size() == 1) return std::move(kept.front());
  Expr e;
  e.kind = Kind::all_of;
  e.children = std::move(kept);
  return e;
}

Expr Expr::any_of(std::vector<Expr> children) {
  std::vector<Expr> kept;
  for (auto& c : children) {
    if (c.kind == Kind::constant) {
      if (c.truth) return make_true();
      continue;
    }
    if (c.kind == Kind::any_of) {
      for (auto& gc : c.children) kept.push_back(std::move(gc));
    } else {
      kept.push_back(std::move(c));
    }
  }
  if (kept.empty()) return make_false();
  if (kept.size() == 1) return std::move(kept.front());
  Expr e;
  e.kind = Kind::any_of;
  e.children = std::move(kept);
  return e;
}

Conjunction extract_path_rule(const CausalTree& tree, int leaf_id) {
  // Locate the leaf, then climb to the root via parent links.
  std::vector<std::int32_t> parent(tree.nodes.size(), -1);
  std::vector<char> went_left(tree.nodes.size(), 0);
  std::int32_t leaf_at = -1;
  for (std::size_t at = 0; at < tree.nodes.size(); ++at) {
    const TreeNode& n = tree.nodes[at];
    if (n.is_leaf) {
      if (n.leaf_id == leaf_id) leaf_at = static_cast<std::int32_t>(at);
    } else {
      parent[n.left] = static_cast<std::int32_t>(at);
      went_left[n.left] = 1;
      parent[n.right] = static_cast<std::int32_t>(at);
    }
  }
  if (leaf_at < 0) {
    throw ConfigError("extract_path_rule: unknown leaf id " +
                      std::to_string(leaf_id));
  }
  Conjunction conj;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::int32_t at = leaf_at; parent[at] >= 0; at = parent[at]) {
    const TreeNode& p = tree.nodes[parent[at]];
    const SplitAtom& atom = p.split;
    const FeatureInfo& info = tree.schema[atom.feature];
    if (!atom.is_categorical) {
      if (went_left[at]) {
        conj.intersect_interval(info.name, -inf, atom.threshold);
      } else {
        conj.intersect_interval(info.name, atom.threshold, inf);
      }
    } else {
      std::vector<std::string> names;
      if (went_left[at]) {
        names.reserve(atom.left_levels.size());
        for (auto code : atom.left_levels) names.push_back(info.levels[code]);
      } else {
        for (std::size_t code = 0; code < info.levels.size(); ++code) {
          if (!std::binary_search(atom.left_levels.begin(),
                                  atom.left_levels.end(),
                                  static_cast<std::int32_t>(code))) {
            names.push_back(info.levels[code]);
          }
        }
      }
      std::sort(names.begin(), names.end());
      conj.intersect_members(info.name, names);
    }
  }
  return conj;
}

Expr expand_rule(const CRFModel& model, const Conjunction& conj) {
  std::vector<Expr> children;
  for (const auto& [feature, iv] : conj.intervals) {
    children.push_back(Expr::numeric(feature, iv));
  }
  for (const auto& [feature, allowed] : conj.members) {
    const auto prov = model.provenance.find(feature);
    if (prov == model.provenance.end()) {
      children.push_back(Expr::member(feature, allowed));
      continue;
    }
    const auto [layer, q] = prov->second;
    if (layer < 1 || static_cast<std::size_t>(layer) > model.layers.size() ||
        static_cast<std::size_t>(q) >= model.layers[layer - 1].size()) {
      throw ConfigError("expand_rule: dangling provenance for `" + feature + "`");
    }
    const CausalTree& tree = model.layers[layer - 1][q];
    if (allowed.size() == static_cast<std::size_t>(tree.leaf_count())) {
      continue;  // leaf regions partition the space: complete cover is TRUE
    }
    std::vector<Expr> branches;
    branches.reserve(allowed.size());
    for (const auto& name : allowed) {
      const int leaf_id = std::stoi(name);
      branches.push_back(expand_rule(model, extract_path_rule(tree, leaf_id)));
    }
    children.push_back(Expr::any_of(std::move(branches)));
  }
  return Expr::all_of(std::move(children));
}

namespace {

Conjunction merge_terms(const Conjunction& a, const Conjunction& b) {
  Conjunction out = a;
  for (const auto& [f, iv] : b.intervals) out.intersect_interval(f, iv.lo, iv.hi);
  for (const auto& [f, levels] : b.members) out.intersect_members(f, levels);
  return out;
}

std::vector<Conjunction> dnf_of(const Expr& expr, std::size_t max_terms) {
  switch (expr.kind) {
    case Expr::Kind::constant:
      if (expr.truth) return {Conjunction{}};
      return {};
    case Expr::Kind::numeric_atom: {
      Conjunction c;
      c.intersect_interval(expr.feature, expr.interval.lo, expr.interval.hi);
      if (c.contradictory()) return {};
      return {c};
    }
    case Expr::Kind::member_atom: {
      Conjunction c;
      c.intersect_members(expr.feature, expr.allowed);
      if (c.contradictory()) return {};
      return {c};
    }
    case Expr::Kind::any_of: {
      std::vector<Conjunction> out;
      for (const auto& child : expr.children) {
        auto sub = dnf_of(child, max_terms);
        for (auto& t : sub) out.push_back(std::move(t));
        if (out.size() > max_terms) {
          throw RuleExplosionError(
              "DNF exceeds " + std::to_string(max_terms) + " terms", out.size());
        }
      }
      return out;
    }
    case Expr::Kind::all_of: {
      std::vector<Conjunction> acc{Conjunction{}};
      for (const auto& child : expr.children) {
        const auto sub = dnf_of(child, max_terms);
        std::vector<Conjunction> next;
        for (const auto& a : acc) {
          for (const auto& b : sub) {
            Conjunction m = merge_terms(a, b);
            if (m.contradictory()) continue;  // pruned during distribution
            next.push_back(std::move(m));
            if (next.size() > max_terms) {
              throw RuleExplosionError(
                  "DNF exceeds " + std::to_string(max_terms) + " terms",
                  next.size());
            }
          }
        }
        acc = std::move(next);
        if (acc.empty()) return {};
      }
      return acc;
    }
  }
  return {};
}

}  // namespace

std::vector<Conjunction> to_dnf(const Expr& expr, std::size_t max_terms) {
  auto terms = dnf_of(expr, max_terms);
  std::sort(terms.begin(), terms.end(),
            [](const Conjunction& a, const Conjunction& b) {
              return a.key() < b.key();
            });
  return terms;
}

namespace {

bool sorted_equal(const std::vector<std::string>& a,
                  const std::vector<std::string>& b) {
  return a == b;
}

// True when every point of `a` lies in `b`.
bool region_subset(const Conjunction& a, const Conjunction& b) {
  for (const auto& [f, ivb] : b.intervals) {
    const auto it = a.intervals.find(f);
    if (it == a.intervals.end() || !ivb.contains(it->second)) return false;
  }
  for (const auto& [f, setb] : b.members) {
    const auto it = a.members.find(f);
    if (it == a.members.end()) return false;
    if (!std::includes(setb.begin(), setb.end(), it->second.begin(),
                       it->second.end())) {
      return false;
    }
  }
  return true;
}

// Complementary and jointly exhaustive pair on one feature -> merged term
// without that feature. Returns true and writes `merged` on success.
bool try_consensus(const Conjunction& a, const Conjunction& b,
                   const Universe& universe, Conjunction& merged) {
  int diffs = 0;
  std::string diff_feature;
  bool diff_is_interval = false;
  for (const auto& [f, iv] : a.intervals) {
    const auto it = b.intervals.find(f);
    if (it == b.intervals.end() || !(it->second == iv)) {
      ++diffs;
      diff_feature = f;
      diff_is_interval = true;
    }
  }
  for (const auto& [f, iv] : b.intervals) {
    if (!a.intervals.contains(f)) {
      ++diffs;
      diff_feature = f;
      diff_is_interval = true;
    }
  }
  for (const auto& [f, set] : a.members) {
    const auto it = b.members.find(f);
    if (it == b.members.end() || !sorted_equal(it->second, set)) {
      ++diffs;
      diff_feature = f;
      diff_is_interval = false;
    }
  }
  for (const auto& [f, set] : b.members) {
    if (!a.members.contains(f)) {
      ++diffs;
      diff_feature = f;
      diff_is_interval = false;
    }
  }
  if (diffs != 1) return false;

  if (diff_is_interval) {
    const auto ia = a.intervals.find(diff_feature);
    const auto ib = b.intervals.find(diff_feature);
    if (ia == a.intervals.end() || ib == b.intervals.end()) return false;
    const Interval& x = ia->second;
    const Interval& y = ib->second;
    const bool exhaustive =
        (!x.has_lo() && !y.has_hi() && x.hi == y.lo) ||
        (!y.has_lo() && !x.has_hi() && y.hi == x.lo);
    if (!exhaustive) return false;
    merged = a;
    merged.intervals.erase(diff_feature);
    return true;
  }

  const auto ia = a.members.find(diff_feature);
  const auto ib = b.members.find(diff_feature);
  if (ia == a.members.end() || ib == b.members.end()) return false;
  const auto uit = universe.find(diff_feature);
  if (uit == universe.end()) return false;
  std::vector<std::string> joined;
  std::set_union(ia->second.begin(), ia->second.end(), ib->second.begin(),
                 ib->second.end(), std::back_inserter(joined));
  if (joined.size() != ia->second.size() + ib->second.size()) return false;  // overlap
  if (!sorted_equal(joined, uit->second)) return false;
  merged = a;
  merged.members.erase(diff_feature);
  return true;
}

void tighten(Conjunction& term, const Universe& universe) {
  for (auto it = term.members.begin(); it != term.members.end();) {
    const auto uit = universe.find(it->first);
    if (uit != universe.end() && sorted_equal(it->second, uit->second)) {
      it = term.members.erase(it);  // allows every level: no constraint
    } else {
      ++it;
    }
  }
}

}  // namespace

std::vector<Conjunction> minimize_dnf(std::vector<Conjunction> terms,
                                      const Universe& universe) {
  for (auto& t : terms) tighten(t, universe);
  bool changed = true;
  while (changed) {
    changed = false;

    std::vector<Conjunction> kept;
    for (auto& t : terms) {
      if (!t.contradictory()) kept.push_back(std::move(t));
    }
    if (kept.size() != terms.size()) changed = true;
    terms = std::move(kept);

    std::sort(terms.begin(), terms.end(),
              [](const Conjunction& a, const Conjunction& b) {
                return a.key() < b.key();
              });
    const auto last = std::unique(terms.begin(), terms.end());
    if (last != terms.end()) {
      terms.erase(last, terms.end());
      changed = true;
    }

    std::vector<char> drop(terms.size(), 0);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (drop[i]) continue;
      for (std::size_t j = 0; j < terms.size(); ++j) {
        if (i == j || drop[j]) continue;
        if (region_subset(terms[i], terms[j])) {
          drop[i] = 1;
          changed = true;
          break;
        }
      }
    }
    if (std::any_of(drop.begin(), drop.end(), [](char c) { return c != 0; })) {
      std::vector<Conjunction> next;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        if (!drop[i]) next.push_back(std::move(terms[i]));
      }
      terms = std::move(next);
    }

    bool merged_any = false;
    for (std::size_t i = 0; i < terms.size() && !merged_any; ++i) {
      for (std::size_t j = i + 1; j < terms.size() && !merged_any; ++j) {
        Conjunction merged;
        if (try_consensus(terms[i], terms[j], universe, merged)) {
          tighten(merged, universe);
          terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(j));
          terms[i] = std::move(merged);
          merged_any = true;
          changed = true;
        }
      }
    }
  }
  return terms;
}

bool eval_conjunction(const Conjunction& term, const Dataset& rows,
                      std::size_t row) {
  for (const auto& [f, iv] : term.intervals) {
    const FeatureColumn* col = rows.find_feature(f);
    if (col == nullptr || col->info.kind != FeatureKind::numeric) {
      throw SchemaError("rule references missing numeric feature `" + f + "`");
    }
    const double v = col->num[row];
    if (!(iv.lo < v && v <= iv.hi)) return false;
  }
  for (const auto& [f, allowed] : term.members) {
    const FeatureColumn* col = rows.find_feature(f);
    if (col == nullptr || col->info.kind != FeatureKind::categorical) {
      throw SchemaError("rule references missing categorical feature `" + f + "`");
    }
    const std::string& level = col->info.levels[col->cat[row]];
    if (!std::binary_search(allowed.begin(), allowed.end(), level)) return false;
  }
  return true;
}

bool eval_terms(const std::vector<Conjunction>& terms, const Dataset& rows,
                std::size_t row) {
  for (const auto& t : terms) {
    if (eval_conjunction(t, rows, row)) return true;
  }
  return false;
}

bool eval_expr(const Expr& expr, const Dataset& rows, std::size_t row) {
  switch (expr.kind) {
    case Expr::Kind::constant:
      return expr.truth;
    case Expr::Kind::numeric_atom: {
      const FeatureColumn* col = rows.find_feature(expr.feature);
      if (col == nullptr || col->info.kind != FeatureKind::numeric) {
        throw SchemaError("expression references missing numeric feature `" +
                          expr.feature + "`");
      }
      const double v = col->num[row];
      return expr.interval.lo < v && v <= expr.interval.hi;
    }
    case Expr::Kind::member_atom: {
      const FeatureColumn* col = rows.find_feature(expr.feature);
      if (col == nullptr || col->info.kind != FeatureKind::categorical) {
        throw SchemaError("expression references missing categorical feature `" +
                          expr.feature + "`");
      }
      const std::string& level = col->info.levels[col->cat[row]];
      return std::binary_search(expr.allowed.begin(), expr.allowed.end(), level);
    }
    case Expr::Kind::all_of:
      for (const auto& c : expr.children) {
        if (!eval_expr(c, rows, row)) return false;
      }
      return true;
    case Expr::Kind::any_of:
      for (const auto& c : expr.children) {
        if (eval_expr(c, rows, row)) return true;
      }
      return false;
  }
  return false;
}

Universe raw_universe(const CRFModel& model) {
  Universe u;
  for (const auto& info : model.raw_schema) {
    if (info.kind == FeatureKind::categorical) {
      std::vector<std::string> levels = info.levels;
      std::sort(levels.begin(), levels.end());
      u[info.name] = std::move(levels);
    }
  }
  return u;
}

std::vector<DnfRule> rules_report(const CRFModel& model,
                                  const RulesReportOptions& options) {
  const Universe universe = raw_universe(model);
  std::vector<DnfRule> rules;
  const int leaves = model.final_tree.leaf_count();
  for (int leaf_id = 0; leaf_id < leaves; ++leaf_id) {
    DnfRule rule;
    rule.leaf_id = leaf_id;
    rule.cate = model.final_tree.leaf(leaf_id).tau_hat;
    const Conjunction path = extract_path_rule(model.final_tree, leaf_id);
    try {
      const Expr expr = expand_rule(model, path);
      auto terms = to_dnf(expr, options.max_terms);
      rule.terms_before = terms.size();
      for (const auto& t : terms) rule.literals_before += t.literal_count();
      if (options.minimize) terms = minimize_dnf(std::move(terms), universe);
      rule.terms_after = terms.size();
      for (const auto& t : terms) rule.literals_after += t.literal_count();
      rule.terms = std::move(terms);
      rule.expanded = true;
    } catch (const RuleExplosionError&) {
      rule.expanded = false;
      rule.terms = {path};
      rule.terms_before = rule.terms_after = 1;
      rule.literals_before = rule.literals_after = path.literal_count();
    }
    rules.push_back(std::move(rule));
  }
  std::stable_sort(rules.begin(), rules.end(),
                   [](const DnfRule& a, const DnfRule& b) {
                     const double am = std::fabs(a.cate), bm = std::fabs(b.cate);
                     if (am != bm) return am > bm;
                     return a.leaf_id < b.leaf_id;
                   });
  if (options.top_k > 0 &&
      rules.size() > static_cast<std::size_t>(options.top_k)) {
    rules.resize(static_cast<std::size_t>(options.top_k));
  }
  return rules;
}

namespace {
std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

std::string format_term(const Conjunction& term) {
  if (term.is_true()) return "TRUE";
  std::vector<std::pair<std::string, std::string>> atoms;  // (feature, text)
  for (const auto& [f, iv] : term.intervals) {
    if (iv.has_lo()) atoms.emplace_back(f, f + " > " + format_value(iv.lo));
    if (iv.has_hi()) atoms.emplace_back(f, f + " ≤ " + format_value(iv.hi));
  }
  for (const auto& [f, allowed] : term.members) {
    if (allowed.empty()) {
      atoms.emplace_back(f, f + " ∈ {}");
    } else if (allowed.size() == 1) {
      atoms.emplace_back(f, f + " = " + allowed.front());
    } else {
      std::string set = "{";
      for (std::size_t i = 0; i < allowed.size(); ++i) {
        if (i > 0) set += ", ";
        set += allowed[i];
      }
      set += "}";
      atoms.emplace_back(f, f + " ∈ " + set);
    }
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i > 0) out += " ∧ ";
    out += atoms[i].second;
  }
  return out;
}

std::string format_rule(const DnfRule& rule) {
  std::string body;
  if (rule.terms.empty()) {
    body = "FALSE";
  } else if (rule.terms.size() == 1) {
    body = format_term(rule.terms.front());
  } else {
    for (std::size_t i = 0; i < rule.terms.size(); ++i) {
      if (i > 0) body += " ∨ ";
      body += "(" + format_term(rule.terms[i]) + ")";
    }
  }
  return "IF " + body + " THEN CATE = " + format_value(rule.cate);
}

}  // namespace crforest
