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

#include "sinet/autograd.hpp"
#include "sinet/ops.hpp"
#include "sinet/rng.hpp"

namespace {

using namespace sinet;

// Args: channels, spatial size, kernel, groups.
void BM_Conv2dForward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const auto k = static_cast<std::size_t>(state.range(2));
  const auto g = static_cast<int>(state.range(3));
  Rng rng(1);
  const Tensor x = normal_tensor(Shape{1, c, hw, hw}, 0.0, 1.0, rng);
  const Tensor w = normal_tensor(Shape{c, c / static_cast<std::size_t>(g), k, k}, 0.0, 0.1, rng);
  MaddCounter counter;
  for (auto _ : state) {
    MaddCountScope scope(counter);
    Tape tape;
    Var y = conv2d(tape.constant(x), {tape.constant(w), std::nullopt, 1,
                                      static_cast<int>(k / 2), g});
    benchmark::DoNotOptimize(y.value().data().data());
  }
  state.counters["madds/s"] = benchmark::Counter(static_cast<double>(counter.madds()),
                                                 benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Conv2dForward)
    ->Args({64, 28, 1, 1})
    ->Args({64, 28, 1, 2})
    ->Args({64, 28, 3, 64})
    ->Args({32, 56, 3, 1});

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto g = static_cast<int>(state.range(1));
  Rng rng(2);
  Parameter w("w", normal_tensor(Shape{c, c / static_cast<std::size_t>(g), 3, 3}, 0.0, 0.1, rng));
  const Tensor x = normal_tensor(Shape{4, c, 14, 14}, 0.0, 1.0, rng);
  for (auto _ : state) {
    Tape tape;
    tape.backward(sum(conv2d(tape.variable(x), {tape.parameter(w), std::nullopt, 1, 1, g})));
    benchmark::DoNotOptimize(w.grad.data().data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({32, 1})->Args({32, 2})->Args({32, 32});

}  // namespace
