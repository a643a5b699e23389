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
#include "crforest/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "crforest/errors.hpp"
#include "crforest/random.hpp"

namespace crforest {

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void require_finite(double v, const std::string& where) {
  if (!std::isfinite(v)) {
    throw ValidationError("missing or non-finite value in " + where +
                          " (missing values are rejected at load)");
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::int8_t parse_binary(const std::string& s, const std::string& col,
                         std::size_t row) {
  double v = 0;
  if (!parse_double(s, v) || (v != 0.0 && v != 1.0)) {
    throw ValidationError("column `" + col + "` must be binary 0/1, got `" + s +
                          "` at data row " + std::to_string(row));
  }
  return static_cast<std::int8_t>(v);
}

}  // namespace

std::size_t Dataset::treated_count() const {
  std::size_t c = 0;
  for (auto v : w) c += (v == 1);
  return c;
}

std::size_t Dataset::control_count() const {
  std::size_t c = 0;
  for (auto v : w) c += (v == 0);
  return c;
}

std::vector<double> Dataset::true_tau() const {
  if (!has_ground_truth()) {
    throw ValidationError("true_tau requires mu0 and mu1 columns");
  }
  std::vector<double> tau(n());
  for (std::size_t i = 0; i < n(); ++i) tau[i] = (*mu1)[i] - (*mu0)[i];
  return tau;
}

FeatureSchema Dataset::schema() const {
  FeatureSchema s;
  s.reserve(features.size());
  for (const auto& f : features) s.push_back(f.info);
  return s;
}

const FeatureColumn* Dataset::find_feature(const std::string& name) const {
  for (const auto& f : features) {
    if (f.info.name == name) return &f;
  }
  return nullptr;
}

Dataset Dataset::select_rows(const std::vector<std::size_t>& idx) const {
  Dataset out;
  out.features.reserve(features.size());
  for (const auto& f : features) {
    FeatureColumn c;
    c.info = f.info;
    if (f.info.kind == FeatureKind::numeric) {
      c.num.reserve(idx.size());
      for (auto i : idx) c.num.push_back(f.num[i]);
    } else {
      c.cat.reserve(idx.size());
      for (auto i : idx) c.cat.push_back(f.cat[i]);
    }
    out.features.push_back(std::move(c));
  }
  auto take_d = [&](const std::vector<double>& src) {
    std::vector<double> v;
    v.reserve(idx.size());
    for (auto i : idx) v.push_back(src[i]);
    return v;
  };
  auto take_b = [&](const std::vector<std::int8_t>& src) {
    std::vector<std::int8_t> v;
    v.reserve(idx.size());
    for (auto i : idx) v.push_back(src[i]);
    return v;
  };
  out.w = take_b(w);
  out.y = take_d(y);
  if (ycf) out.ycf = take_d(*ycf);
  if (mu0) out.mu0 = take_d(*mu0);
  if (mu1) out.mu1 = take_d(*mu1);
  if (e) out.e = take_b(*e);
  return out;
}

void Dataset::validate() const {
  const std::size_t rows = n();
  if (w.size() != rows) throw ValidationError("treatment column length mismatch");
  for (const auto& f : features) {
    if (f.size() != rows) {
      throw ValidationError("feature `" + f.info.name + "` length mismatch");
    }
    if (f.info.kind == FeatureKind::categorical) {
      for (auto code : f.cat) {
        if (code < 0 || static_cast<std::size_t>(code) >= f.info.levels.size()) {
          throw ValidationError("feature `" + f.info.name +
                                "` has a code outside its declared levels");
        }
      }
    } else {
      for (double v : f.num) require_finite(v, "feature `" + f.info.name + "`");
    }
  }
  auto check_len = [&](const auto& opt, const char* name) {
    if (opt && opt->size() != rows) {
      throw ValidationError(std::string("column `") + name + "` length mismatch");
    }
  };
  check_len(ycf, "ycf");
  check_len(mu0, "mu0");
  check_len(mu1, "mu1");
  check_len(e, "e");
  for (auto v : w) {
    if (v != 0 && v != 1) throw ValidationError("treatment values must be 0/1");
  }
  if (e) {
    for (auto v : *e) {
      if (v != 0 && v != 1) throw ValidationError("e values must be 0/1");
    }
  }
  for (double v : y) require_finite(v, "yf");
  if (treated_count() == 0 || control_count() == 0) {
    throw ValidationError(
        "dataset needs at least one treated and one control row");
  }
}

Dataset parse_csv(const std::string& text,
                  const std::map<std::string, std::string>& roles) {
  for (const auto& [col, role] : roles) {
    if (role != "t" && role != "yf" && role != "ycf" && role != "mu0" &&
        role != "mu1" && role != "e" && role != "feature") {
      throw SchemaError("unknown role `" + role + "` for column `" + col + "`");
    }
  }

  std::vector<std::string> lines;
  {
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        if (!cur.empty() && cur.back() == '\r') cur.pop_back();
        lines.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) {
      if (cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
    }
  }
  if (lines.empty()) throw SchemaError("empty CSV: missing header row");

  const std::vector<std::string> header = split_line(lines[0]);
  std::set<std::string> seen;
  for (const auto& h : header) {
    if (h.empty()) throw SchemaError("empty column name in header");
    if (!seen.insert(h).second) throw SchemaError("duplicate column `" + h + "`");
  }

  auto role_of = [&](const std::string& col) -> std::string {
    auto it = roles.find(col);
    if (it != roles.end()) return it->second;
    if (col == "t" || col == "yf" || col == "ycf" || col == "mu0" ||
        col == "mu1" || col == "e") {
      return col;
    }
    return "feature";
  };

  std::vector<std::string> col_roles(header.size());
  int t_col = -1, yf_col = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    col_roles[j] = role_of(header[j]);
    if (col_roles[j] == "t") {
      if (t_col >= 0) throw SchemaError("multiple treatment columns");
      t_col = static_cast<int>(j);
    }
    if (col_roles[j] == "yf") {
      if (yf_col >= 0) throw SchemaError("multiple outcome columns");
      yf_col = static_cast<int>(j);
    }
  }
  if (t_col < 0) throw SchemaError("no treatment column `t` found");
  if (yf_col < 0) throw SchemaError("no factual-outcome column `yf` found");

  std::vector<std::vector<std::string>> cells;
  cells.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;  // trailing blank line
    auto row = split_line(lines[i]);
    if (row.size() != header.size()) {
      throw SchemaError("row " + std::to_string(i) + " has " +
                        std::to_string(row.size()) + " cells, header has " +
                        std::to_string(header.size()));
    }
    cells.push_back(std::move(row));
  }
  const std::size_t rows = cells.size();
  if (rows == 0) throw ValidationError("CSV has a header but no data rows");

  Dataset ds;
  ds.w.resize(rows);
  ds.y.resize(rows);
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string& role = col_roles[j];
    const std::string& name = header[j];
    if (role == "t") {
      for (std::size_t i = 0; i < rows; ++i) {
        ds.w[i] = parse_binary(cells[i][j], name, i);
      }
    } else if (role == "e") {
      std::vector<std::int8_t> col(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        col[i] = parse_binary(cells[i][j], name, i);
      }
      ds.e = std::move(col);
    } else if (role == "yf" || role == "ycf" || role == "mu0" || role == "mu1") {
      std::vector<double> col(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        if (!parse_double(cells[i][j], col[i]) || !std::isfinite(col[i])) {
          throw ValidationError("column `" + name + "` row " +
                                std::to_string(i) + ": `" + cells[i][j] +
                                "` is not a finite real");
        }
      }
      if (role == "yf") {
        ds.y = std::move(col);
      } else if (role == "ycf") {
        ds.ycf = std::move(col);
      } else if (role == "mu0") {
        ds.mu0 = std::move(col);
      } else {
        ds.mu1 = std::move(col);
      }
    } else {  // feature
      bool numeric = true;
      std::vector<double> nums(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        if (cells[i][j].empty()) {
          throw ValidationError("feature `" + name + "` row " +
                                std::to_string(i) + " is empty");
        }
        if (!parse_double(cells[i][j], nums[i]) || !std::isfinite(nums[i])) {
          numeric = false;
          break;
        }
      }
      if (!numeric) {
        // A parseable but non-finite cell is a missing value, not a level.
        for (std::size_t i = 0; i < rows; ++i) {
          double v = 0;
          if (parse_double(cells[i][j], v) && !std::isfinite(v)) {
            throw ValidationError("feature `" + name + "` row " +
                                  std::to_string(i) + ": `" + cells[i][j] +
                                  "` is not finite");
          }
        }
      }
      FeatureColumn fc;
      fc.info.name = name;
      if (numeric) {
        fc.info.kind = FeatureKind::numeric;
        fc.num = std::move(nums);
      } else {
        fc.info.kind = FeatureKind::categorical;
        std::set<std::string> distinct;
        for (std::size_t i = 0; i < rows; ++i) distinct.insert(cells[i][j]);
        fc.info.levels.assign(distinct.begin(), distinct.end());
        fc.cat.resize(rows);
        for (std::size_t i = 0; i < rows; ++i) {
          const auto it = std::lower_bound(fc.info.levels.begin(),
                                           fc.info.levels.end(), cells[i][j]);
          fc.cat[i] = static_cast<std::int32_t>(it - fc.info.levels.begin());
        }
      }
      ds.features.push_back(std::move(fc));
    }
  }
  ds.validate();
  return ds;
}

Dataset load_csv(const std::string& path,
                 const std::map<std::string, std::string>& roles) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open `" + path + "`");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), roles);
}

std::string to_csv(const Dataset& ds) {
  std::string out;
  auto guard_text = [](const std::string& s) {
    if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos) {
      throw ValidationError("categorical level `" + s +
                            "` contains a delimiter; cannot export unquoted CSV");
    }
    return s;
  };
  bool first = true;
  auto emit = [&](const std::string& s) {
    if (!first) out += ',';
    out += s;
    first = false;
  };
  for (const auto& f : ds.features) emit(guard_text(f.info.name));
  emit("t");
  emit("yf");
  if (ds.ycf) emit("ycf");
  if (ds.mu0) emit("mu0");
  if (ds.mu1) emit("mu1");
  if (ds.e) emit("e");
  out += '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    first = true;
    for (const auto& f : ds.features) {
      if (f.info.kind == FeatureKind::numeric) {
        emit(format_double(f.num[i]));
      } else {
        emit(guard_text(f.info.levels[f.cat[i]]));
      }
    }
    emit(std::to_string(static_cast<int>(ds.w[i])));
    emit(format_double(ds.y[i]));
    if (ds.ycf) emit(format_double((*ds.ycf)[i]));
    if (ds.mu0) emit(format_double((*ds.mu0)[i]));
    if (ds.mu1) emit(format_double((*ds.mu1)[i]));
    if (ds.e) emit(std::to_string(static_cast<int>((*ds.e)[i])));
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write `" + path + "`");
  out << to_csv(ds);
  if (!out) throw DataError("write failed for `" + path + "`");
}

std::pair<Dataset, Dataset> honest_split(const Dataset& ds, double ratio,
                                         std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("honest_split: ratio must be in (0,1)");
  }
  std::vector<std::size_t> treated, control;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    (ds.w[i] == 1 ? treated : control).push_back(i);
  }
  const std::size_t n1 = treated.size(), n0 = control.size();
  if (n1 < 2 || n0 < 2) {
    throw SplitError("honest_split: need at least 2 treated and 2 control rows "
                     "to keep positivity in both halves");
  }
  const auto target =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ds.n())));
  if (target < 2 || target > ds.n() - 2) {
    throw SplitError("honest_split: ratio " + std::to_string(ratio) +
                     " leaves no room for a treated and control row per half");
  }
  // Proportional allocation per stratum (within +-1 row), clamped so both
  // halves keep at least one row of each arm.
  auto k1 = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n1)));
  const std::size_t k1_lo = target > (n0 - 1) ? target - (n0 - 1) : 1;
  const std::size_t k1_hi = std::min(n1 - 1, target - 1);
  if (k1_lo > k1_hi) {
    throw SplitError("honest_split: strata too small for the requested ratio");
  }
  k1 = std::clamp(k1, k1_lo, k1_hi);
  const std::size_t k0 = target - k1;

  Rng rng(mix_seed(seed, 0x5917ull));
  rng.shuffle(treated);
  rng.shuffle(control);
  std::vector<std::size_t> train_idx(treated.begin(), treated.begin() + k1);
  train_idx.insert(train_idx.end(), control.begin(), control.begin() + k0);
  std::vector<std::size_t> est_idx(treated.begin() + k1, treated.end());
  est_idx.insert(est_idx.end(), control.begin() + k0, control.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(est_idx.begin(), est_idx.end());
  return {ds.select_rows(train_idx), ds.select_rows(est_idx)};
}

Dataset subsample(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("subsample: fraction must be in (0,1]");
  }
  const auto m = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(ds.n())));
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::vector<std::size_t> idx(ds.n());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    rng.shuffle(idx);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
    std::size_t n1 = 0;
    for (auto i : idx) n1 += (ds.w[i] == 1);
    if (n1 >= 1 && m - n1 >= 1) return ds.select_rows(idx);
  }
  throw ResampleError(
      "subsample: could not draw a subset with both treated and control rows "
      "after 16 attempts");
}

namespace {

// Ground-truth checks rely on mu1 - mu0 reproducing tau(x) exactly. The naive
// sum rounds, so nudge mu0 by ulps until the stored difference is exact. A
// representable pair can fail to exist only when tau carries mantissa bits
// below the sum's grid; the rounded pair then stands (off by <= 1 ulp).
void exact_effect_pair(double& mu0, double& mu1, double tau) {
  mu1 = mu0 + tau;
  if (mu1 - mu0 == tau) return;
  const double inf = std::numeric_limits<double>::infinity();
  double up = mu1 - tau;
  double down = up;
  for (int k = 0; k < 8; ++k) {
    for (double cand : {up, down}) {
      const double hi = cand + tau;
      if (hi - cand == tau) {
        mu0 = cand;
        mu1 = hi;
        return;
      }
    }
    up = std::nextafter(up, inf);
    down = std::nextafter(down, -inf);
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n < 20) throw ConfigError("synthetic: n must be >= 20");
  if (d_num + d_cat < 1) throw ConfigError("synthetic: need at least 1 feature");
  if (confounding_strength < 0) {
    throw ConfigError("synthetic: confounding_strength must be >= 0");
  }
  if (tau_form == TauForm::step && tau_feature >= d_num + d_cat) {
    throw ConfigError("synthetic: tau step feature index out of range");
  }
}

Dataset simulate(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t d = spec.d_num + spec.d_cat;
  Rng rng(mix_seed(spec.seed, 0xD67ull));

  std::vector<double> beta(d);
  for (auto& b : beta) b = rng.uniform01() * 2.0 - 1.0;

  Dataset ds;
  ds.features.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    FeatureColumn& f = ds.features[j];
    f.info.kind = FeatureKind::numeric;
    f.info.name = j < spec.d_num ? "x" + std::to_string(j)
                                 : "b" + std::to_string(j - spec.d_num);
    f.num.resize(spec.n);
  }
  ds.w.resize(spec.n);
  ds.y.resize(spec.n);
  std::vector<double> mu0(spec.n), mu1(spec.n);

  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < spec.d_num; ++j) {
      ds.features[j].num[i] = rng.normal();
    }
    for (std::size_t j = spec.d_num; j < d; ++j) {
      ds.features[j].num[i] = rng.uniform01() < 0.5 ? 1.0 : 0.0;
    }
    const double x0 = ds.features[0].num[i];
    double p = 1.0 / (1.0 + std::exp(-spec.confounding_strength * x0));
    p = std::clamp(p, 0.05, 0.95);
    ds.w[i] = rng.uniform01() < p ? 1 : 0;
    const double noise = rng.normal();

    double m0 = 0.0;
    for (std::size_t j = 0; j < d; ++j) m0 += beta[j] * ds.features[j].num[i];
    double tau = 0.0;
    if (spec.tau_form == TauForm::constant) {
      tau = spec.tau_value;
    } else {
      tau = ds.features[spec.tau_feature].num[i] > 0 ? spec.tau_high
                                                     : spec.tau_low;
    }
    double m1 = 0.0;
    exact_effect_pair(m0, m1, tau);
    mu0[i] = m0;
    mu1[i] = m1;
    ds.y[i] = (ds.w[i] == 1 ? mu1[i] : mu0[i]) + noise;
  }
  ds.mu0 = std::move(mu0);
  ds.mu1 = std::move(mu1);
  ds.validate();
  return ds;
}

}  // namespace crforest
