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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sinet/autograd.hpp"
#include "sinet/ops.hpp"
#include "sinet/rng.hpp"

namespace sinet {

/// Affine layer x * W + b with W of shape (in, out).
struct DenseLayer {
  Parameter weight;
  std::optional<Parameter> bias;

  static DenseLayer init(int in, int out, bool with_bias, Rng& rng,
                         const std::string& name);
  Var apply(Tape& tape, const Var& x);
  void collect(std::vector<Parameter*>& out);
};

/// Attention gate of one block: alpha = sigmoid((Z W1) W2).
struct AttentionGateParams {
  Parameter w1;  // (c_k, d)
  Parameter w2;  // (d, 1)
};

struct HeadConfig {
  // Width of the fc between the pooled concat and the classifier; 0 feeds
  // the concat straight into the classifier.
  int hidden = 1280;
  int attention_min_hidden = 8;
  int attention_divisor = 4;
  bool classifier_bias = true;

  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

/// d = max(min_hidden, c_k / divisor).
int attention_hidden_width(int block_channels, const HeadConfig& cfg);

struct AttentionHeadParams {
  std::vector<AttentionGateParams> gates;  // empty for the plain head
  std::optional<DenseLayer> hidden;
  DenseLayer classifier;

  /// Hierarchical head over all blocks (attention on).
  static AttentionHeadParams init_attention(std::span<const int> block_widths,
                                            const HeadConfig& cfg, int classes,
                                            Rng& rng);
  /// General classification layer over the last block only.
  static AttentionHeadParams init_plain(int last_width, const HeadConfig& cfg,
                                        int classes, Rng& rng);
  void collect(std::vector<Parameter*>& out);
};

/// Global average pool of every block output.
std::vector<Var> compress(std::span<const Var> block_outputs);

Var attention_weight(const Var& z, const Var& w1, const Var& w2);

/// hidden fc (ReLU6) -> classifier fc, on an N x D feature matrix.
Var classify(const Var& features, AttentionHeadParams& head);

/// Logits of classify([alpha_1 Z_1, ..., alpha_k Z_k]).
Var joint_decision_logits(std::span<const Var> z, std::span<const Var> alphas,
                          AttentionHeadParams& head);
Var joint_decision(std::span<const Var> z, std::span<const Var> alphas,
                   AttentionHeadParams& head);

enum class GateMode { Attention, Bypass };

/// compress -> gates -> joint decision. Bypass fixes every alpha to 1.
Var hierarchical_logits(std::span<const Var> block_outputs,
                        AttentionHeadParams& head,
                        GateMode gates = GateMode::Attention);

Var plain_decision_logits(const Var& last_block_output,
                          AttentionHeadParams& head);
Var plain_decision(const Var& last_block_output, AttentionHeadParams& head);

}  // namespace sinet
