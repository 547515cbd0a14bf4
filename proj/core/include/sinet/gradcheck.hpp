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

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sinet/autograd.hpp"

namespace sinet {

/// |a - n| / max(|a|, |n|, 1e-3).
double gradcheck_relative_error(double analytic, double numeric);

/// Rebuilds the scalar loss on a fresh tape, binding every checked
/// Parameter with tape.parameter().
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Entries probed per parameter tensor; 0 probes every entry.
  std::size_t max_entries = 0;
  std::uint64_t seed = 0;  // picks the probed entries when sampling
};

struct GradCheckStats {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

/// Compares backward() against central differences of `build` with respect
/// to each parameter in `params`.
GradCheckStats check_gradients(const LossBuilder& build,
                               std::span<Parameter* const> params,
                               const GradCheckOptions& options = {});

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries = 0;
  bool passed = false;
};

/// Names of the built-in cases, operators first, then composed paths.
std::vector<std::string> gradcheck_case_names();

/// Runs every built-in case with inputs drawn from `seed`.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed,
                                                 double tolerance);

}  // namespace sinet
