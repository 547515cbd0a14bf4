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

#include <vector>

#include "sinet/arch.hpp"
#include "sinet/network.hpp"
#include "sinet/rng.hpp"

namespace {

using namespace sinet;

// Desk-scale network; range(0) is the batch size.
void BM_DeskForward(benchmark::State& state) {
  const ModelSpec spec = build_desk_sinet(0.25, 3, 64);
  Network net(spec, 1);
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor x = normal_tensor(Shape{n, 3, 64, 64}, 0.0, 1.0, rng);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(net.forward(tape, x, Mode::Eval).logits.value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DeskForward)->Arg(1)->Arg(16);

void BM_DeskTrainStep(benchmark::State& state) {
  const ModelSpec spec = build_desk_sinet(0.25, 3, 64);
  Network net(spec, 1);
  Rng rng(4);
  const Tensor x = normal_tensor(Shape{16, 3, 64, 64}, 0.0, 1.0, rng);
  std::vector<int> labels(16);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  for (auto _ : state) {
    net.zero_grad();
    Tape tape;
    tape.backward(softmax_cross_entropy(net.forward(tape, x, Mode::Train).logits, labels));
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_DeskTrainStep);

}  // namespace
