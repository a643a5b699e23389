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
#ifndef CRFOREST_TESTS_ORACLES_H_
#define CRFOREST_TESTS_ORACLES_H_

// Brute-force reference implementations, independent of the library's fitted
// paths: naive split enumeration and exhaustive cell-wise rule equivalence.
// Everything here recomputes statistics with plain loops.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crforest/causal_tree.hpp"
#include "crforest/dataset.hpp"
#include "crforest/random.hpp"
#include "crforest/rules.hpp"

namespace crforest::testing {

struct OracleSplit {
  bool found = false;
  int feature = -1;
  bool is_categorical = false;
  double threshold = 0.0;
  std::vector<std::int32_t> left_levels;
  double gain = 0.0;
};

namespace oracle_detail {

struct Moments {
  std::int64_t n1 = 0, n0 = 0;
  double mean1 = 0, mean0 = 0, var1 = 0, var0 = 0;
  std::int64_t total() const { return n1 + n0; }
  double tau() const { return mean1 - mean0; }
  double penalty() const {
    return var1 / static_cast<double>(n1) + var0 / static_cast<double>(n0);
  }
};

inline Moments moments(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Moments m;
  double s1 = 0, s0 = 0;
  for (auto i : idx) {
    if (ds.w[i] == 1) {
      ++m.n1;
      s1 += ds.y[i];
    } else {
      ++m.n0;
      s0 += ds.y[i];
    }
  }
  m.mean1 = m.n1 > 0 ? s1 / static_cast<double>(m.n1) : 0.0;
  m.mean0 = m.n0 > 0 ? s0 / static_cast<double>(m.n0) : 0.0;
  double q1 = 0, q0 = 0;  // two-pass variances
  for (auto i : idx) {
    const double d = ds.y[i] - (ds.w[i] == 1 ? m.mean1 : m.mean0);
    (ds.w[i] == 1 ? q1 : q0) += d * d;
  }
  m.var1 = m.n1 >= 2 ? q1 / static_cast<double>(m.n1 - 1) : 0.0;
  m.var0 = m.n0 >= 2 ? q0 / static_cast<double>(m.n0 - 1) : 0.0;
  return m;
}

inline bool side_ok(const Moments& train_m, const Moments& est_m,
                    const TreeParams& p) {
  if (train_m.n1 < p.nodesize || train_m.n0 < p.nodesize) return false;
  if (est_m.n1 < p.nodesize || est_m.n0 < p.nodesize) return false;
  if (p.min_total_leaf_size > 0 &&
      (train_m.total() < p.min_total_leaf_size ||
       est_m.total() < p.min_total_leaf_size)) {
    return false;
  }
  return true;
}

inline double gain_of(const Moments& parent, const Moments& left,
                      const Moments& right, const TreeParams& p,
                      double n_root) {
  const double hetero =
      (static_cast<double>(left.total()) * left.tau() * left.tau() +
       static_cast<double>(right.total()) * right.tau() * right.tau() -
       static_cast<double>(parent.total()) * parent.tau() * parent.tau()) /
      n_root;
  if (p.alpha == 0.0) return hetero;
  return hetero - p.alpha * (left.penalty() + right.penalty() - parent.penalty());
}

inline bool improves(const OracleSplit& cand, const OracleSplit& best) {
  if (!best.found) return true;
  if (cand.gain != best.gain) return cand.gain > best.gain;
  if (cand.feature != best.feature) return cand.feature < best.feature;
  if (!cand.is_categorical) return cand.threshold < best.threshold;
  return std::lexicographical_compare(
      cand.left_levels.begin(), cand.left_levels.end(),
      best.left_levels.begin(), best.left_levels.end());
}

}  // namespace oracle_detail

// Enumerates every root split candidate (all features) and returns the argmax
// under the documented tie-break, or found=false when no candidate is valid.
inline OracleSplit oracle_best_root_split(const Dataset& train,
                                          const Dataset& est,
                                          const TreeParams& params) {
  using namespace oracle_detail;
  std::vector<std::size_t> all_train(train.n()), all_est(est.n());
  for (std::size_t i = 0; i < train.n(); ++i) all_train[i] = i;
  for (std::size_t i = 0; i < est.n(); ++i) all_est[i] = i;
  const Moments parent = moments(train, all_train);
  const auto n_root = static_cast<double>(train.n());

  OracleSplit best;
  for (std::size_t f = 0; f < train.n_features(); ++f) {
    const FeatureColumn& col = train.features[f];
    if (col.info.kind == FeatureKind::numeric) {
      std::vector<double> vals = col.num;
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      std::vector<double> thresholds;
      if (params.bucketized) {
        std::vector<double> sorted = col.num;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        for (int k = 1; k <= 9; ++k) {
          thresholds.push_back(sorted[(static_cast<std::size_t>(k) * m) / 10]);
        }
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                         thresholds.end());
      } else {
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
          thresholds.push_back(0.5 * (vals[i] + vals[i + 1]));
        }
      }
      for (double t : thresholds) {
        std::vector<std::size_t> tl, tr, el, er;
        for (std::size_t i = 0; i < train.n(); ++i) {
          (col.num[i] <= t ? tl : tr).push_back(i);
        }
        for (std::size_t i = 0; i < est.n(); ++i) {
          (est.features[f].num[i] <= t ? el : er).push_back(i);
        }
        if (tl.empty() || tr.empty()) continue;
        const Moments L = moments(train, tl), R = moments(train, tr);
        const Moments Le = moments(est, el), Re = moments(est, er);
        if (!side_ok(L, Le, params) || !side_ok(R, Re, params)) continue;
        OracleSplit cand;
        cand.found = true;
        cand.feature = static_cast<int>(f);
        cand.threshold = t;
        cand.gain = gain_of(parent, L, R, params, n_root);
        if (improves(cand, best)) best = cand;
      }
    } else {
      // Level ordering by in-node per-level effect, scanned as if ordinal.
      struct LevelTau {
        std::int32_t code;
        double tau;
      };
      std::vector<LevelTau> order;
      for (std::size_t c = 0; c < col.info.levels.size(); ++c) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < train.n(); ++i) {
          if (col.cat[i] == static_cast<std::int32_t>(c)) rows.push_back(i);
        }
        if (rows.empty()) continue;
        const Moments m = moments(train, rows);
        const double tau = (m.n1 > 0 && m.n0 > 0) ? m.tau() : 0.0;
        order.push_back({static_cast<std::int32_t>(c), tau});
      }
      if (order.size() < 2) continue;
      std::sort(order.begin(), order.end(), [](const LevelTau& a, const LevelTau& b) {
        if (a.tau != b.tau) return a.tau < b.tau;
        return a.code < b.code;
      });
      std::vector<std::int32_t> left;
      for (std::size_t j = 0; j + 1 < order.size(); ++j) {
        left.push_back(order[j].code);
        std::vector<std::int32_t> left_sorted = left;
        std::sort(left_sorted.begin(), left_sorted.end());
        std::vector<std::size_t> tl, tr, el, er;
        for (std::size_t i = 0; i < train.n(); ++i) {
          const bool in = std::binary_search(left_sorted.begin(),
                                             left_sorted.end(), col.cat[i]);
          (in ? tl : tr).push_back(i);
        }
        for (std::size_t i = 0; i < est.n(); ++i) {
          const bool in = std::binary_search(left_sorted.begin(),
                                             left_sorted.end(),
                                             est.features[f].cat[i]);
          (in ? el : er).push_back(i);
        }
        if (tl.empty() || tr.empty()) continue;
        const Moments L = moments(train, tl), R = moments(train, tr);
        const Moments Le = moments(est, el), Re = moments(est, er);
        if (!side_ok(L, Le, params) || !side_ok(R, Re, params)) continue;
        OracleSplit cand;
        cand.found = true;
        cand.feature = static_cast<int>(f);
        cand.is_categorical = true;
        cand.left_levels = left_sorted;
        cand.gain = gain_of(parent, L, R, params, n_root);
        if (improves(cand, best)) best = cand;
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Cell-enumeration equivalence: the thresholds and level sets appearing in an
// expression and a DNF induce a finite partition of the feature space; the two
// are equivalent iff they agree on one representative point per cell.

struct CellSpace {
  // feature -> sorted finite thresholds (numeric)
  std::map<std::string, std::vector<double>> thresholds;
  // feature -> every level that can occur (categorical)
  std::map<std::string, std::vector<std::string>> levels;
};

namespace oracle_detail {

inline void collect_conj(const Conjunction& c, CellSpace& space) {
  for (const auto& [f, iv] : c.intervals) {
    if (iv.has_lo()) space.thresholds[f].push_back(iv.lo);
    if (iv.has_hi()) space.thresholds[f].push_back(iv.hi);
  }
  for (const auto& [f, levels] : c.members) {
    auto& known = space.levels[f];
    known.insert(known.end(), levels.begin(), levels.end());
  }
}

inline void collect_expr(const Expr& e, CellSpace& space) {
  switch (e.kind) {
    case Expr::Kind::constant:
      return;
    case Expr::Kind::numeric_atom:
      if (e.interval.has_lo()) space.thresholds[e.feature].push_back(e.interval.lo);
      if (e.interval.has_hi()) space.thresholds[e.feature].push_back(e.interval.hi);
      return;
    case Expr::Kind::member_atom: {
      auto& known = space.levels[e.feature];
      known.insert(known.end(), e.allowed.begin(), e.allowed.end());
      return;
    }
    case Expr::Kind::all_of:
    case Expr::Kind::any_of:
      for (const auto& c : e.children) collect_expr(c, space);
      return;
  }
}

}  // namespace oracle_detail

// Representative points per numeric feature: one inside every half-open cell
// between consecutive thresholds (threshold itself for "<= t" cells, beyond
// the last for the open tail). Categorical cells: the universe's levels when
// one is given (consensus merges are exact only over observed levels),
// otherwise every mentioned level plus one synthetic unmentioned level.
inline std::size_t enumerate_cells(
    CellSpace space,
    const std::function<bool(const Dataset& row_frame, std::size_t row)>& lhs,
    const std::function<bool(const Dataset& row_frame, std::size_t row)>& rhs,
    const Universe* universe = nullptr) {
  std::vector<std::string> num_features;
  std::vector<std::vector<double>> num_points;
  for (auto& [f, ts] : space.thresholds) {
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<double> points;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      points.push_back(ts[i]);  // lands in (prev, ts[i]]
    }
    points.push_back(ts.empty() ? 0.0 : ts.back() + 1.0);  // open tail
    num_features.push_back(f);
    num_points.push_back(std::move(points));
  }
  std::vector<std::string> cat_features;
  std::vector<std::vector<std::string>> cat_points;
  for (auto& [f, ls] : space.levels) {
    if (universe != nullptr && universe->contains(f)) {
      ls = universe->at(f);
    } else {
      std::sort(ls.begin(), ls.end());
      ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
      ls.push_back("\x01unseen");  // a level outside every mentioned set
    }
    cat_features.push_back(f);
    cat_points.push_back(ls);
  }

  std::size_t cells = 1;
  for (const auto& p : num_points) cells *= p.size();
  for (const auto& p : cat_points) cells *= p.size();

  std::size_t checked = 0;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t rem = cell;
    Dataset frame;
    for (std::size_t k = 0; k < num_features.size(); ++k) {
      const std::size_t pick = rem % num_points[k].size();
      rem /= num_points[k].size();
      FeatureColumn col;
      col.info.name = num_features[k];
      col.info.kind = FeatureKind::numeric;
      col.num = {num_points[k][pick]};
      frame.features.push_back(std::move(col));
    }
    for (std::size_t k = 0; k < cat_features.size(); ++k) {
      const std::size_t pick = rem % cat_points[k].size();
      rem /= cat_points[k].size();
      FeatureColumn col;
      col.info.name = cat_features[k];
      col.info.kind = FeatureKind::categorical;
      col.info.levels = cat_points[k];
      col.cat = {static_cast<std::int32_t>(pick)};
      frame.features.push_back(std::move(col));
    }
    frame.w = {1};
    frame.y = {0.0};
    if (lhs(frame, 0) != rhs(frame, 0)) {
      return static_cast<std::size_t>(-1);  // disagreement sentinel
    }
    ++checked;
  }
  return checked;
}

inline bool expr_equivalent_to_dnf(const Expr& expr,
                                   const std::vector<Conjunction>& dnf) {
  CellSpace space;
  oracle_detail::collect_expr(expr, space);
  for (const auto& t : dnf) oracle_detail::collect_conj(t, space);
  const std::size_t result = enumerate_cells(
      std::move(space),
      [&](const Dataset& f, std::size_t r) { return eval_expr(expr, f, r); },
      [&](const Dataset& f, std::size_t r) { return eval_terms(dnf, f, r); });
  return result != static_cast<std::size_t>(-1);
}

// Small random dataset for split-oracle trials: d features (numeric or
// 2-3 level categorical), random treatment with both arms forced, normal y.
inline Dataset random_small_dataset(Rng& rng, std::size_t n, int d,
                                    bool with_categorical) {
  Dataset ds;
  for (int j = 0; j < d; ++j) {
    FeatureColumn col;
    col.info.name = "f" + std::to_string(j);
    const bool cat = with_categorical && rng.below(2) == 0;
    if (cat) {
      const int k = 2 + static_cast<int>(rng.below(2));
      col.info.kind = FeatureKind::categorical;
      for (int c = 0; c < k; ++c) {
        col.info.levels.push_back(std::string(1, static_cast<char>('a' + c)));
      }
      col.cat.resize(n);
      for (auto& c : col.cat) c = static_cast<std::int32_t>(rng.below(k));
    } else {
      col.info.kind = FeatureKind::numeric;
      col.num.resize(n);
      for (auto& v : col.num) v = rng.normal();
    }
    ds.features.push_back(std::move(col));
  }
  ds.w.resize(n);
  for (auto& v : ds.w) v = static_cast<std::int8_t>(rng.below(2));
  ds.w[0] = ds.w[1] = 1;
  ds.w[2] = ds.w[3] = 0;
  ds.y.resize(n);
  for (auto& v : ds.y) v = rng.normal() * 2.0;
  return ds;
}

// ---------------------------------------------------------------------------
// Random rule-algebra inputs over a small fixed pool: numeric x0/x1 and
// categorical g0/g1 with levels {a,b,c}.

inline const std::vector<std::string>& pool_levels() {
  static const std::vector<std::string> levels{"a", "b", "c"};
  return levels;
}

inline Universe pool_universe() {
  return {{"g0", pool_levels()}, {"g1", pool_levels()}};
}

inline Expr random_atom(Rng& rng) {
  static const double thresholds[] = {-1.5, -0.7, -0.2, 0.3, 0.9, 1.6};
  if (rng.below(2) == 0) {
    const std::string f = rng.below(2) == 0 ? "x0" : "x1";
    const double t = thresholds[rng.below(6)];
    Interval iv;
    if (rng.below(2) == 0) {
      iv.hi = t;
    } else {
      iv.lo = t;
    }
    return Expr::numeric(f, iv);
  }
  const std::string f = rng.below(2) == 0 ? "g0" : "g1";
  std::vector<std::string> allowed;
  for (const auto& level : pool_levels()) {
    if (rng.below(2) == 0) allowed.push_back(level);
  }
  if (allowed.empty()) allowed.push_back(pool_levels()[rng.below(3)]);
  return Expr::member(f, std::move(allowed));
}

inline Expr random_expr(Rng& rng, int& atoms_left, int depth = 0) {
  if (depth >= 3 || atoms_left <= 1 || rng.below(3) == 0) {
    atoms_left -= 1;
    return random_atom(rng);
  }
  const std::size_t arity = 2 + rng.below(2);
  std::vector<Expr> children;
  for (std::size_t c = 0; c < arity && atoms_left > 0; ++c) {
    children.push_back(random_expr(rng, atoms_left, depth + 1));
  }
  return rng.below(2) == 0 ? Expr::all_of(std::move(children))
                           : Expr::any_of(std::move(children));
}

inline Conjunction random_term(Rng& rng) {
  Conjunction c;
  const std::size_t atoms = 1 + rng.below(4);
  for (std::size_t k = 0; k < atoms; ++k) {
    const Expr atom = random_atom(rng);
    if (atom.kind == Expr::Kind::numeric_atom) {
      c.intersect_interval(atom.feature, atom.interval.lo, atom.interval.hi);
    } else {
      c.intersect_members(atom.feature, atom.allowed);
    }
  }
  return c;
}

inline bool dnfs_equivalent(const std::vector<Conjunction>& a,
                            const std::vector<Conjunction>& b,
                            const Universe* universe = nullptr) {
  CellSpace space;
  for (const auto& t : a) oracle_detail::collect_conj(t, space);
  for (const auto& t : b) oracle_detail::collect_conj(t, space);
  const std::size_t result = enumerate_cells(
      std::move(space),
      [&](const Dataset& f, std::size_t r) { return eval_terms(a, f, r); },
      [&](const Dataset& f, std::size_t r) { return eval_terms(b, f, r); },
      universe);
  return result != static_cast<std::size_t>(-1);
}

}  // namespace crforest::testing

#endif  // CRFOREST_TESTS_ORACLES_H_
