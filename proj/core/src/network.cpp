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

#include "sinet/network.hpp"

#include "sinet/errors.hpp"

namespace sinet {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

}  // namespace

Network::Network(const ModelSpec& spec, std::uint64_t seed)
    : spec_(spec), plan_(sinet::plan(spec)) {
  Rng rng(seed);
  const StemSpec& st = spec_.stem;
  const std::size_t fan_in = sz(st.in_channels * st.kernel * st.kernel);
  stem_weight_ = Parameter(
      "stem.weight",
      he_uniform(Shape{sz(st.channels), sz(st.in_channels), sz(st.kernel),
                       sz(st.kernel)},
                 fan_in, rng));
  stem_bn_ = BatchNormLayer("stem.bn", sz(st.channels));
  for (const auto& b : plan_.blocks) {
    std::vector<SIUnitParams> units;
    for (std::size_t u = 0; u < b.units.size(); ++u) {
      units.push_back(SIUnitParams::init(
          b.units[u], rng, b.name + ".unit" + std::to_string(u + 1)));
    }
    blocks_.push_back(std::move(units));
  }
  if (spec_.attention) {
    head_ = AttentionHeadParams::init_attention(plan_.block_widths, spec_.head,
                                                spec_.classes, rng);
  } else {
    head_ = AttentionHeadParams::init_plain(plan_.block_widths.back(),
                                            spec_.head, spec_.classes, rng);
  }
}

ForwardResult Network::forward(Tape& tape, const Tensor& images, Mode mode,
                               GateMode gates) {
  const std::size_t in = sz(spec_.input);
  if (images.rank() != 4 || images.dim(1) != sz(spec_.stem.in_channels) ||
      images.dim(2) != in || images.dim(3) != in) {
    throw DimensionError("network expects N x " +
                         std::to_string(spec_.stem.in_channels) + " x " +
                         std::to_string(in) + " x " + std::to_string(in) +
                         " input, got " + images.shape().str());
  }
  Var x = tape.constant(images);
  const StemSpec& st = spec_.stem;
  x = conv2d(x, {tape.parameter(stem_weight_), std::nullopt, st.stride,
                 (st.kernel - 1) / 2, 1});
  x = relu6(stem_bn_.apply(tape, x, mode));

  ForwardResult r;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    x = si_block(x, plan_.blocks[b].units, blocks_[b], mode);
    r.block_outputs.push_back(x);
  }
  if (spec_.attention) {
    r.logits = hierarchical_logits(r.block_outputs, head_, gates);
  } else {
    r.logits = plain_decision_logits(r.block_outputs.back(), head_);
  }
  return r;
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  out.push_back(&stem_weight_);
  stem_bn_.collect(out);
  for (auto& units : blocks_) {
    for (auto& u : units) u.collect(out);
  }
  head_.collect(out);
  return out;
}

std::size_t Network::parameter_count() {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void Network::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

}  // namespace sinet
