// Copyright 2026 The SINet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "sinet/gradcheck.hpp"
#include "sinet/ops.hpp"

namespace sinet {
namespace {

TEST(GradcheckRelativeError, Formula) {
  EXPECT_DOUBLE_EQ(gradcheck_relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(gradcheck_relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(gradcheck_relative_error(-1.0, 1.0), 2.0);
  // tiny values are compared on the 1e-3 floor
  EXPECT_DOUBLE_EQ(gradcheck_relative_error(1e-6, 0.0), 1e-3);
}

TEST(CheckGradients, DetectsWrongGradient) {
  Parameter p("p", Tensor(Shape{3}, std::vector<double>{0.3, -0.7, 1.2}));
  // sum(sigmoid(p)) is correct; a rogue backward that doubles the gradient is not
  const LossBuilder good = [&](Tape& t) { return sum(sigmoid(t.parameter(p))); };
  std::vector<Parameter*> params{&p};
  EXPECT_LT(check_gradients(good, params).max_rel_error, 1e-7);
  const LossBuilder bad = [&](Tape& t) {
    Var x = t.parameter(p);
    Var y = sigmoid(x);
    Tensor v = y.value();
    return sum(t.record(std::move(v), {y}, [y](const Tensor& g, Tape& tape) {
      Tensor twice = g;
      for (auto& e : twice.data()) e *= 2.0;
      tape.accumulate(y, twice);
    }));
  };
  EXPECT_GT(check_gradients(bad, params).max_rel_error, 0.4);
}

TEST(CheckGradients, SamplingLimitsEntries) {
  Parameter p("p", Tensor(Shape{10}, 0.5));
  std::vector<Parameter*> params{&p};
  const LossBuilder f = [&](Tape& t) { return sum(sigmoid(t.parameter(p))); };
  GradCheckOptions o;
  o.max_entries = 4;
  EXPECT_EQ(check_gradients(f, params, o).entries, 4u);
  EXPECT_EQ(check_gradients(f, params).entries, 10u);
}

TEST(GradcheckSuite, PassesAtDefaultTolerance) {
  const auto results = run_gradcheck_suite(0, 1e-4);
  EXPECT_EQ(results.size(), gradcheck_case_names().size());
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << " " << r.max_rel_error;
    EXPECT_GT(r.entries, 0u) << r.name;
  }
}

TEST(GradcheckSuite, FailsAtImpossibleTolerance) {
  const auto results = run_gradcheck_suite(0, 1e-13);
  bool any_failed = false;
  for (const auto& r : results) any_failed |= !r.passed;
  EXPECT_TRUE(any_failed);
}

TEST(GradcheckSuite, ReproducibleForSeed) {
  const auto a = run_gradcheck_suite(3, 1e-4);
  const auto b = run_gradcheck_suite(3, 1e-4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].max_rel_error, b[i].max_rel_error);
  }
}

}  // namespace
}  // namespace sinet
