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

#include <cmath>

#include "crforest/errors.hpp"
#include "crforest/metrics.hpp"
#include "crforest/random.hpp"
#include "test_support.hpp"

using namespace crforest;
using crforest::testing::FrameBuilder;

TEST_CASE("pehe basics") {
  CHECK(pehe({1.5, -2.0, 0.0}, {1.5, -2.0, 0.0}) == 0.0);
  CHECK(pehe({1, 2}, {0, 0}) == doctest::Approx(1.5811388300841898).epsilon(1e-12));
  CHECK_THROWS_AS(pehe({1, 2, 3}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(pehe({}, {}), ValidationError);
}

TEST_CASE("eps_ate basics") {
  CHECK(eps_ate({0, 2}, {1, 1}) == 0.0);
  CHECK(eps_ate({1, 2}, {0, 0}) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(eps_ate({}, {}), ValidationError);
}

TEST_CASE("pehe dominates eps_ate and both are permutation invariant") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal() * 3;
      b[i] = rng.normal() * 3;
    }
    CHECK(pehe(a, b) == pehe(b, a));
    CHECK(pehe(a, b) >= eps_ate(a, b));

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<double> ap(n), bp(n);
    for (std::size_t i = 0; i < n; ++i) {
      ap[i] = a[perm[i]];
      bp[i] = b[perm[i]];
    }
    CHECK(pehe(ap, bp) == doctest::Approx(pehe(a, b)).epsilon(1e-12));
    CHECK(eps_ate(ap, bp) == doctest::Approx(eps_ate(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("eps_att hand example") {
  // Randomized subset {(w=1,y=2), (w=1,y=4), (w=0,y=1)} plus one
  // non-randomized row that must be ignored.
  const Dataset ds = FrameBuilder()
                         .numeric("x", {0, 0, 0, 0})
                         .treatment({1, 1, 0, 0})
                         .outcome({2, 4, 1, 9})
                         .randomized({1, 1, 1, 0})
                         .build();
  const double v = eps_att(ds, {1, 1, 0, 0});
  CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // Constant predictions equal to the true ATT cancel exactly.
  CHECK(eps_att(ds, {2, 2, 2, 2}) == 0.0);
}

TEST_CASE("eps_att requires a usable randomized subset") {
  const Dataset no_e = FrameBuilder()
                           .numeric("x", {0, 0})
                           .treatment({1, 0})
                           .outcome({1, 0})
                           .build();
  CHECK_THROWS_AS(eps_att(no_e, {0, 0}), ValidationError);

  const Dataset no_control = FrameBuilder()
                                 .numeric("x", {0, 0, 0})
                                 .treatment({1, 1, 0})
                                 .outcome({1, 1, 0})
                                 .randomized({1, 1, 0})
                                 .build();
  CHECK_THROWS_AS(eps_att(no_control, {0, 0, 0}), ValidationError);
}

TEST_CASE("policy_risk hand example") {
  const Dataset ds = FrameBuilder()
                         .numeric("x", {0, 0, 0, 0})
                         .treatment({1, 1, 0, 0})
                         .outcome({1, 0, 1, 0})
                         .randomized({1, 1, 1, 1})
                         .build();
  // pi = (1,1,0,0): p1 = 0.5, both cell means 0.5.
  const double v = policy_risk(ds, {1, 1, -1, -1});
  CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("policy_risk perfect all-treat policy") {
  const Dataset ds = FrameBuilder()
                         .numeric("x", {0, 0, 0})
                         .treatment({1, 1, 0})
                         .outcome({1, 1, 0})
                         .randomized({1, 1, 1})
                         .build();
  CHECK(policy_risk(ds, {2, 2, 2}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("policy_risk empty-cell convention") {
  // Everyone assigned to treatment but only control rows are randomized.
  const Dataset ds = FrameBuilder()
                         .numeric("x", {0, 0, 0})
                         .treatment({1, 0, 0})
                         .outcome({1, 1, 1})
                         .randomized({0, 1, 1})
                         .build();
  std::vector<std::string> warnings;
  const double v = policy_risk(ds, {1, 1, 1}, 0.0, &warnings);
  CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("empty cell") != std::string::npos);
}

TEST_CASE("policy_risk is invariant to sign-preserving transforms") {
  Rng rng(5);
  const std::size_t n = 60;
  std::vector<std::int8_t> w(n), e(n, 1);
  std::vector<double> y(n), tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = static_cast<std::int8_t>(rng.below(2));
    y[i] = static_cast<double>(rng.below(2));
    tau[i] = rng.normal();
  }
  w[0] = 1;
  w[1] = 0;
  const Dataset ds = FrameBuilder()
                         .numeric("x", std::vector<double>(n, 0.0))
                         .treatment(w)
                         .outcome(y)
                         .randomized(e)
                         .build();
  std::vector<double> warped(n);
  for (std::size_t i = 0; i < n; ++i) {
    warped[i] = std::tanh(tau[i]) * 7.0;  // strictly monotone through 0
  }
  CHECK(policy_risk(ds, tau) == policy_risk(ds, warped));
}

TEST_CASE("shifting predictions moves eps_ate by the mean shift") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.below(30);
    std::vector<double> a(n), b(n), shifted(n);
    const double c = rng.normal() * 2;
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      shifted[i] = a[i] + c;
      ma += a[i];
      mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    CHECK(eps_ate(shifted, b) ==
          doctest::Approx(std::fabs(ma - mb + c)).epsilon(1e-9));
  }
}

TEST_CASE("evaluate gates metrics on available columns") {
  SyntheticSpec spec;
  spec.n = 50;
  spec.d_num = 2;
  spec.seed = 8;
  const Dataset with_mu = simulate(spec);
  const MetricsReport r1 = evaluate(std::vector<double>(50, 0.0), with_mu);
  CHECK(r1.pehe.has_value());
  CHECK(r1.eps_ate.has_value());
  CHECK_FALSE(r1.eps_att.has_value());
  CHECK_FALSE(r1.r_pol.has_value());
  CHECK(r1.unavailable.at("eps_att") == "no randomized-subset flag");

  const Dataset with_e = FrameBuilder()
                             .numeric("x", {0, 0, 0})
                             .treatment({1, 0, 0})
                             .outcome({1, 0, 1})
                             .randomized({1, 1, 0})
                             .build();
  const MetricsReport r2 = evaluate({0.5, 0.5, 0.5}, with_e);
  CHECK_FALSE(r2.pehe.has_value());
  CHECK(r2.eps_att.has_value());
  CHECK(r2.r_pol.has_value());
  CHECK(r2.unavailable.at("pehe") ==
        "no ground-truth effect columns (mu0/mu1)");
}

TEST_CASE("evaluate with the oracle predictor is exactly zero") {
  SyntheticSpec spec;
  spec.n = 300;
  spec.d_num = 4;
  spec.seed = 12;
  spec.tau_form = TauForm::step;
  spec.tau_feature = 2;
  spec.tau_low = -1;
  spec.tau_high = 4;
  const Dataset ds = simulate(spec);
  const MetricsReport r = evaluate(ds.true_tau(), ds);
  CHECK(*r.pehe == 0.0);
  CHECK(*r.eps_ate == 0.0);
}

TEST_CASE("evaluate rejects misaligned predictions") {
  SyntheticSpec spec;
  spec.n = 30;
  spec.d_num = 1;
  spec.seed = 1;
  const Dataset ds = simulate(spec);
  CHECK_THROWS_AS(evaluate(std::vector<double>(29, 0.0), ds), ValidationError);
}

TEST_CASE("aggregate_reports computes mean and CI") {
  MetricsReport a, b;
  a.pehe = 1.0;
  b.pehe = 3.0;
  const auto rows = aggregate_reports({a, b});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].metric == "pehe");
  CHECK(rows[0].mean == 2.0);
  CHECK(rows[0].count == 2);
  // sd = sqrt(2), stderr = 1, ci = 1.96
  CHECK(rows[0].ci95 == doctest::Approx(1.96).epsilon(1e-12));
}
