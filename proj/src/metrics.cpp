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
#include "crforest/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "crforest/errors.hpp"

namespace crforest {

namespace {

void check_pair(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty()) throw ValidationError("metric on empty input");
  if (a.size() != b.size()) {
    throw ValidationError("metric length mismatch: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double pehe(const std::vector<double>& tau_hat, const std::vector<double>& tau) {
  check_pair(tau_hat, tau);
  double s = 0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double d = tau_hat[i] - tau[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(tau.size()));
}

double eps_ate(const std::vector<double>& tau_hat, const std::vector<double>& tau) {
  check_pair(tau_hat, tau);
  return std::fabs(mean_of(tau_hat) - mean_of(tau));
}

double eps_att(const Dataset& ds, const std::vector<double>& tau_hat) {
  if (tau_hat.size() != ds.n()) throw ValidationError("eps_att: length mismatch");
  if (!ds.e) throw ValidationError("eps_att: no randomized-subset flag `e`");
  double sy1 = 0, sy0 = 0, stau = 0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if ((*ds.e)[i] != 1) continue;
    if (ds.w[i] == 1) {
      sy1 += ds.y[i];
      stau += tau_hat[i];
      ++n1;
    } else {
      sy0 += ds.y[i];
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) {
    throw ValidationError(
        "eps_att: randomized subset needs treated and control rows");
  }
  const double att_true =
      sy1 / static_cast<double>(n1) - sy0 / static_cast<double>(n0);
  const double att_hat = stau / static_cast<double>(n1);
  return std::fabs(att_true - att_hat);
}

double policy_risk(const Dataset& ds, const std::vector<double>& tau_hat,
                   double lambda, std::vector<std::string>* warnings) {
  if (tau_hat.size() != ds.n()) {
    throw ValidationError("policy_risk: length mismatch");
  }
  if (!ds.e) throw ValidationError("policy_risk: no randomized-subset flag `e`");
  std::size_t n_e = 0, n_pi1 = 0;
  double sy_treat = 0, sy_control = 0;
  std::size_t n_treat_cell = 0, n_control_cell = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if ((*ds.e)[i] != 1) continue;
    ++n_e;
    const bool pi = tau_hat[i] > lambda;
    n_pi1 += pi;
    if (pi && ds.w[i] == 1) {
      sy_treat += ds.y[i];
      ++n_treat_cell;
    }
    if (!pi && ds.w[i] == 0) {
      sy_control += ds.y[i];
      ++n_control_cell;
    }
  }
  if (n_e == 0) throw ValidationError("policy_risk: randomized subset is empty");
  const double p1 = static_cast<double>(n_pi1) / static_cast<double>(n_e);
  double value = 0;
  if (p1 > 0) {
    if (n_treat_cell == 0) {
      if (warnings != nullptr) {
        warnings->push_back(
            "policy_risk: empty cell mean(y | w=1, pi=1, e=1); contributes 0");
      }
    } else {
      value += sy_treat / static_cast<double>(n_treat_cell) * p1;
    }
  }
  if (p1 < 1) {
    if (n_control_cell == 0) {
      if (warnings != nullptr) {
        warnings->push_back(
            "policy_risk: empty cell mean(y | w=0, pi=0, e=1); contributes 0");
      }
    } else {
      value += sy_control / static_cast<double>(n_control_cell) * (1.0 - p1);
    }
  }
  return 1.0 - value;
}

MetricsReport evaluate(const std::vector<double>& tau_hat, const Dataset& ds,
                       double lambda) {
  if (tau_hat.size() != ds.n()) {
    throw ValidationError("evaluate: predictions do not align with rows (" +
                          std::to_string(tau_hat.size()) + " vs " +
                          std::to_string(ds.n()) + ")");
  }
  MetricsReport report;
  if (ds.has_ground_truth()) {
    const auto tau = ds.true_tau();
    report.pehe = pehe(tau_hat, tau);
    report.eps_ate = eps_ate(tau_hat, tau);
  } else {
    report.unavailable["pehe"] = "no ground-truth effect columns (mu0/mu1)";
    report.unavailable["eps_ate"] = "no ground-truth effect columns (mu0/mu1)";
  }
  if (!ds.e) {
    report.unavailable["eps_att"] = "no randomized-subset flag";
    report.unavailable["r_pol"] = "no randomized-subset flag";
    return report;
  }
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if ((*ds.e)[i] == 1) (ds.w[i] == 1 ? n1 : n0) += 1;
  }
  if (n1 == 0 || n0 == 0) {
    report.unavailable["eps_att"] =
        "randomized subset lacks treated or control rows";
    report.unavailable["r_pol"] =
        "randomized subset lacks treated or control rows";
    return report;
  }
  report.eps_att = eps_att(ds, tau_hat);
  report.r_pol = policy_risk(ds, tau_hat, lambda, &report.warnings);
  return report;
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

std::string format_report(const MetricsReport& report) {
  std::ostringstream os;
  auto line = [&](const char* name, const std::optional<double>& v) {
    os << name << ": ";
    if (v) {
      os << fmt(*v);
    } else {
      auto it = report.unavailable.find(name);
      os << "n/a (" << (it == report.unavailable.end() ? "?" : it->second) << ")";
    }
    os << "\n";
  };
  line("pehe", report.pehe);
  line("eps_ate", report.eps_ate);
  line("eps_att", report.eps_att);
  line("r_pol", report.r_pol);
  for (const auto& w : report.warnings) os << "warning: " << w << "\n";
  return os.str();
}

std::vector<MetricAggregate> aggregate_reports(
    const std::vector<MetricsReport>& reports) {
  const char* names[] = {"pehe", "eps_ate", "eps_att", "r_pol"};
  std::vector<MetricAggregate> out;
  for (const char* name : names) {
    std::vector<double> values;
    for (const auto& r : reports) {
      const std::optional<double>* v = nullptr;
      if (std::string(name) == "pehe") v = &r.pehe;
      else if (std::string(name) == "eps_ate") v = &r.eps_ate;
      else if (std::string(name) == "eps_att") v = &r.eps_att;
      else v = &r.r_pol;
      if (v->has_value()) values.push_back(**v);
    }
    if (values.empty()) continue;
    MetricAggregate agg;
    agg.metric = name;
    agg.count = values.size();
    agg.mean = mean_of(values);
    if (values.size() > 1) {
      double ss = 0;
      for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
      const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
      agg.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
    }
    out.push_back(agg);
  }
  return out;
}

}  // namespace crforest
