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
#include <vector>

#include "sinet/arch.hpp"
#include "sinet/blocks.hpp"
#include "sinet/decision.hpp"

namespace sinet {

struct ForwardResult {
  Var logits;
  std::vector<Var> block_outputs;
};

/// Executable SINet instance: parameters laid out per NetworkPlan and a
/// forward pass recorded on a caller-provided tape.
class Network {
 public:
  Network(const ModelSpec& spec, std::uint64_t seed);

  ForwardResult forward(Tape& tape, const Tensor& images, Mode mode,
                        GateMode gates = GateMode::Attention);

  const ModelSpec& spec() const { return spec_; }
  const NetworkPlan& plan() const { return plan_; }

  std::vector<Parameter*> parameters();
  std::size_t parameter_count();
  void zero_grad();

 private:
  ModelSpec spec_;
  NetworkPlan plan_;
  Parameter stem_weight_;
  BatchNormLayer stem_bn_;
  std::vector<std::vector<SIUnitParams>> blocks_;
  AttentionHeadParams head_;
};

}  // namespace sinet
