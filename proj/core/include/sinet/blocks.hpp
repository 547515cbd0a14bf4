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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sinet/autograd.hpp"
#include "sinet/ops.hpp"
#include "sinet/rng.hpp"

namespace sinet {

/// Inverted bottleneck realizing the composite function H of one group:
/// 1x1 expand to t*k, k x k depthwise with stride s, linear 1x1 to k'.
struct BottleneckConfig {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int expansion = 1;

  int hidden() const { return expansion * in_channels; }
  void validate() const;
  friend bool operator==(const BottleneckConfig&,
                         const BottleneckConfig&) = default;
};

/// One SI Unit. `branch` describes each of the `groups` identical branches,
/// so the unit reads branch.in_channels * groups channels.
struct SIUnitConfig {
  int groups = 2;
  bool exchange = false;
  BottleneckConfig branch;
  // When set, the unit ends with a dense funnel squeezing [input, current]
  // down to funnel_out_channels. Requires stride 1.
  bool funnel = false;
  int funnel_out_channels = 0;

  int in_channels() const { return branch.in_channels * groups; }
  int branch_out_channels() const { return branch.out_channels * groups; }
  int out_channels() const {
    return funnel ? funnel_out_channels : branch_out_channels();
  }
  void validate() const;
  friend bool operator==(const SIUnitConfig&, const SIUnitConfig&) = default;
};

/// Unit configs of one SI Block: the first unit carries the block stride
/// with exchange and funnel off, the remaining repeat-1 units are
/// shape-preserving with exchange as requested and a funnel. A unit whose
/// input width is not divisible by `groups` runs ungrouped.
std::vector<SIUnitConfig> block_units(int in_channels, int out_channels,
                                      int kernel, int stride, int repeat,
                                      int expansion, int groups,
                                      bool exchange);

struct BatchNormLayer {
  Parameter gamma;
  Parameter beta;
  BatchNormState state;

  BatchNormLayer() = default;
  BatchNormLayer(const std::string& name, std::size_t channels);

  Var apply(Tape& tape, const Var& x, Mode mode);
  void collect(std::vector<Parameter*>& out);
};

struct BottleneckParams {
  Parameter expand;
  BatchNormLayer expand_bn;
  Parameter depthwise;
  BatchNormLayer depthwise_bn;
  Parameter project;
  BatchNormLayer project_bn;

  static BottleneckParams init(const BottleneckConfig& cfg, Rng& rng,
                               const std::string& prefix);
  void collect(std::vector<Parameter*>& out);
};

struct FunnelParams {
  Parameter squeeze;  // (out, (prev + current) / groups, 1, 1)
  BatchNormLayer bn;

  static FunnelParams init(int prev_channels, int current_channels,
                           int out_channels, int groups, Rng& rng,
                           const std::string& prefix);
  void collect(std::vector<Parameter*>& out);
};

struct SIUnitParams {
  std::vector<BottleneckParams> branches;
  std::optional<FunnelParams> funnel;

  static SIUnitParams init(const SIUnitConfig& cfg, Rng& rng,
                           const std::string& prefix);
  void collect(std::vector<Parameter*>& out);
};

/// Composite function H: expand+BN+ReLU6, depthwise+BN+ReLU6, project+BN.
Var composite_h(const Var& x, const BottleneckConfig& cfg,
                BottleneckParams& params, Mode mode);

using Branch = std::function<Var(const Var&)>;

/// Splits x into branches.size() groups and returns
/// [H_0(x_0) + x_1, H_1(x_1) + x_2, ..., H_{g-1}(x_{g-1}) + x_0].
/// For two groups this is X1' = H(X1) + X2, X2' = H(X2) + X1.
Var exchange_shortcut(const Var& x, std::span<const Branch> branches);

/// Concatenates prev and current group-wise ([prev_0, cur_0, prev_1, ...])
/// and squeezes with a grouped 1x1 conv + BN + ReLU6.
Var dense_funnel(const Var& prev, const Var& current, FunnelParams& params,
                 int groups, Mode mode);

Var si_unit(const Var& x, const SIUnitConfig& cfg, SIUnitParams& params,
            Mode mode);

Var si_block(const Var& x, std::span<const SIUnitConfig> units,
             std::span<SIUnitParams> params, Mode mode);

}  // namespace sinet
