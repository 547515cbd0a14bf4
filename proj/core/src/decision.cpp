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

#include "sinet/decision.hpp"

#include <algorithm>
#include <numeric>

#include "sinet/errors.hpp"

namespace sinet {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

}  // namespace

DenseLayer DenseLayer::init(int in, int out, bool with_bias, Rng& rng,
                            const std::string& name) {
  if (in < 1 || out < 1) throw SpecError("dense layer widths must be >= 1");
  DenseLayer d;
  d.weight = Parameter(name + ".weight",
                       he_uniform(Shape{sz(in), sz(out)}, sz(in), rng));
  if (with_bias) d.bias = Parameter(name + ".bias", Tensor::zeros(Shape{sz(out)}));
  return d;
}

Var DenseLayer::apply(Tape& tape, const Var& x) {
  std::optional<Var> b;
  if (bias) b = tape.parameter(*bias);
  return fully_connected(x, tape.parameter(weight), b);
}

void DenseLayer::collect(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  if (bias) out.push_back(&*bias);
}

int attention_hidden_width(int block_channels, const HeadConfig& cfg) {
  if (cfg.attention_divisor < 1) {
    throw SpecError("attention divisor must be >= 1");
  }
  return std::max(cfg.attention_min_hidden,
                  block_channels / cfg.attention_divisor);
}

AttentionHeadParams AttentionHeadParams::init_attention(
    std::span<const int> block_widths, const HeadConfig& cfg, int classes,
    Rng& rng) {
  if (block_widths.empty()) throw SpecError("attention head needs >= 1 block");
  AttentionHeadParams h;
  for (std::size_t k = 0; k < block_widths.size(); ++k) {
    const int c = block_widths[k];
    const int d = attention_hidden_width(c, cfg);
    const std::string name = "head.attention" + std::to_string(k + 1);
    h.gates.push_back(
        {Parameter(name + ".w1", he_uniform(Shape{sz(c), sz(d)}, sz(c), rng)),
         Parameter(name + ".w2", he_uniform(Shape{sz(d), 1}, sz(d), rng))});
  }
  const int concat =
      std::accumulate(block_widths.begin(), block_widths.end(), 0);
  int width = concat;
  if (cfg.hidden > 0) {
    h.hidden = DenseLayer::init(concat, cfg.hidden, true, rng, "head.fc");
    width = cfg.hidden;
  }
  h.classifier = DenseLayer::init(width, classes, cfg.classifier_bias, rng,
                                  "head.classifier");
  return h;
}

AttentionHeadParams AttentionHeadParams::init_plain(int last_width,
                                                    const HeadConfig& cfg,
                                                    int classes, Rng& rng) {
  AttentionHeadParams h;
  int width = last_width;
  if (cfg.hidden > 0) {
    h.hidden = DenseLayer::init(last_width, cfg.hidden, true, rng, "head.fc");
    width = cfg.hidden;
  }
  h.classifier = DenseLayer::init(width, classes, cfg.classifier_bias, rng,
                                  "head.classifier");
  return h;
}

void AttentionHeadParams::collect(std::vector<Parameter*>& out) {
  for (auto& g : gates) {
    out.push_back(&g.w1);
    out.push_back(&g.w2);
  }
  if (hidden) hidden->collect(out);
  classifier.collect(out);
}

std::vector<Var> compress(std::span<const Var> block_outputs) {
  if (block_outputs.empty()) {
    throw DimensionError("compress needs at least one block output");
  }
  std::vector<Var> z;
  z.reserve(block_outputs.size());
  for (const auto& x : block_outputs) z.push_back(global_avg_pool(x));
  return z;
}

Var attention_weight(const Var& z, const Var& w1, const Var& w2) {
  return sigmoid(fully_connected(fully_connected(z, w1), w2));
}

Var classify(const Var& features, AttentionHeadParams& head) {
  Tape& tape = features.tape();
  Var h = features;
  if (head.hidden) h = relu6(head.hidden->apply(tape, h));
  return head.classifier.apply(tape, h);
}

Var joint_decision_logits(std::span<const Var> z, std::span<const Var> alphas,
                          AttentionHeadParams& head) {
  if (z.empty()) throw DimensionError("joint decision needs >= 1 block");
  if (z.size() != alphas.size()) {
    throw DimensionError("joint decision: " + std::to_string(z.size()) +
                         " pooled blocks but " + std::to_string(alphas.size()) +
                         " attention weights");
  }
  std::vector<Var> scaled;
  scaled.reserve(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    scaled.push_back(scale_rows(z[k], alphas[k]));
  }
  return classify(concat_channels(scaled), head);
}

Var joint_decision(std::span<const Var> z, std::span<const Var> alphas,
                   AttentionHeadParams& head) {
  return softmax(joint_decision_logits(z, alphas, head));
}

Var hierarchical_logits(std::span<const Var> block_outputs,
                        AttentionHeadParams& head, GateMode gates) {
  const std::vector<Var> z = compress(block_outputs);
  if (gates == GateMode::Bypass) return classify(concat_channels(z), head);
  if (head.gates.size() != z.size()) {
    throw DimensionError("head has " + std::to_string(head.gates.size()) +
                         " attention gates for " + std::to_string(z.size()) +
                         " blocks");
  }
  Tape& tape = block_outputs.front().tape();
  std::vector<Var> alphas;
  alphas.reserve(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    alphas.push_back(attention_weight(z[k], tape.parameter(head.gates[k].w1),
                                      tape.parameter(head.gates[k].w2)));
  }
  return joint_decision_logits(z, alphas, head);
}

Var plain_decision_logits(const Var& last_block_output,
                          AttentionHeadParams& head) {
  return classify(global_avg_pool(last_block_output), head);
}

Var plain_decision(const Var& last_block_output, AttentionHeadParams& head) {
  return softmax(plain_decision_logits(last_block_output, head));
}

}  // namespace sinet
