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
#ifndef CRFOREST_METRICS_H_
#define CRFOREST_METRICS_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crforest/dataset.hpp"

namespace crforest {

// sqrt( mean( (tau_hat - tau)^2 ) )
double pehe(const std::vector<double>& tau_hat, const std::vector<double>& tau);

// | mean(tau_hat) - mean(tau) |
double eps_ate(const std::vector<double>& tau_hat, const std::vector<double>& tau);

// | ATT_true - ATT_hat | on the randomized subset:
//   ATT_true = mean(y | w=1, e=1) - mean(y | w=0, e=1)
//   ATT_hat  = mean(tau_hat | w=1, e=1)
double eps_att(const Dataset& ds, const std::vector<double>& tau_hat);

// Policy pi(x) = 1 iff tau_hat > lambda; on the randomized subset with
// p1 = P(pi=1):
//   R_pol = 1 - [ mean(y | w=1, pi=1, e=1) * p1 + mean(y | w=0, pi=0, e=1) * (1-p1) ]
// An empty conditional-mean cell with positive weight contributes 0 and is
// recorded in `warnings`.
double policy_risk(const Dataset& ds, const std::vector<double>& tau_hat,
                   double lambda = 0.0,
                   std::vector<std::string>* warnings = nullptr);

struct MetricsReport {
  std::optional<double> pehe;
  std::optional<double> eps_ate;
  std::optional<double> eps_att;
  std::optional<double> r_pol;
  std::map<std::string, std::string> unavailable;  // metric -> reason
  std::vector<std::string> warnings;
};

// Computes every metric whose columns exist: pehe/eps_ate need mu0+mu1,
// eps_att/r_pol need an e flag with treated and control rows inside e=1.
MetricsReport evaluate(const std::vector<double>& tau_hat, const Dataset& ds,
                       double lambda = 0.0);

std::string format_report(const MetricsReport& report);

struct MetricAggregate {
  std::string metric;
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * stderr, 0 for a single repetition
  std::size_t count = 0;
};

std::vector<MetricAggregate> aggregate_reports(
    const std::vector<MetricsReport>& reports);

}  // namespace crforest

#endif  // CRFOREST_METRICS_H_
