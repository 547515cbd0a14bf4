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

#include <benchmark/benchmark.h>

#include "sinet/analyzer.hpp"
#include "sinet/arch.hpp"

namespace {

using namespace sinet;

void BM_AnalyzeFullModel(benchmark::State& state) {
  const ModelSpec spec = build_sinet(static_cast<double>(state.range(0)) / 10.0, 1000, 224);
  for (auto _ : state) {
    const CostReport r = analyze(spec);
    benchmark::DoNotOptimize(r.total.madds);
  }
}
BENCHMARK(BM_AnalyzeFullModel)->Arg(10)->Arg(18);

void BM_ReportJson(benchmark::State& state) {
  const CostReport r = analyze(build_sinet(1.0, 1000, 224));
  for (auto _ : state) benchmark::DoNotOptimize(to_json(r).dump());
}
BENCHMARK(BM_ReportJson);

}  // namespace
