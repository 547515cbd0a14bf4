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

#include "sinet/blocks.hpp"

#include <string>

#include "sinet/errors.hpp"

namespace sinet {

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

void require_channels(const Var& x, int expected, const char* what) {
  const Shape& s = x.shape();
  if (s.rank() != 4 || s[1] != sz(expected)) {
    throw DimensionError(std::string(what) + " expects " +
                         std::to_string(expected) + " channels, got " +
                         s.str());
  }
}

}  // namespace

void BottleneckConfig::validate() const {
  if (in_channels < 1 || out_channels < 1) {
    throw SpecError("bottleneck channel counts must be >= 1");
  }
  if (kernel < 1 || kernel % 2 == 0) {
    throw SpecError("bottleneck kernel must be odd, got " +
                    std::to_string(kernel));
  }
  if (stride != 1 && stride != 2) {
    throw SpecError("bottleneck stride must be 1 or 2, got " +
                    std::to_string(stride));
  }
  if (expansion < 1) throw SpecError("bottleneck expansion must be >= 1");
}

void SIUnitConfig::validate() const {
  branch.validate();
  if (groups < 1) throw GroupError("SI unit groups must be >= 1");
  if (exchange) {
    if (groups < 2) {
      throw SpecError("exchange shortcut needs at least two groups");
    }
    if (branch.stride != 1) {
      throw UnsupportedError(
          "exchange shortcut requires stride-1 branches (shapes must match)");
    }
    if (branch.in_channels != branch.out_channels) {
      throw DimensionError(
          "exchange shortcut requires equal branch input/output widths");
    }
  }
  if (funnel) {
    if (branch.stride != 1) {
      throw UnsupportedError("dense funnel requires a stride-1 unit");
    }
    if (funnel_out_channels < 1 || funnel_out_channels % groups != 0) {
      throw GroupError("funnel output channels " +
                       std::to_string(funnel_out_channels) +
                       " not divisible by groups " + std::to_string(groups));
    }
  }
}

std::vector<SIUnitConfig> block_units(int in_channels, int out_channels,
                                      int kernel, int stride, int repeat,
                                      int expansion, int groups,
                                      bool exchange) {
  if (repeat < 1) throw SpecError("SI block needs at least one unit");
  if (groups < 1) throw GroupError("SI block groups must be >= 1");
  if (exchange && groups < 2) {
    throw SpecError("exchange shortcut needs at least two groups");
  }
  if (out_channels % groups != 0) {
    throw GroupError("block channels " + std::to_string(out_channels) +
                     " not divisible by groups " + std::to_string(groups));
  }
  std::vector<SIUnitConfig> units;
  units.reserve(sz(repeat));

  SIUnitConfig first;
  first.groups = (in_channels % groups == 0) ? groups : 1;
  first.exchange = false;
  first.branch = {in_channels / first.groups, out_channels / first.groups,
                  kernel, stride, expansion};
  first.funnel = false;
  first.funnel_out_channels = out_channels;
  first.validate();
  units.push_back(first);

  for (int i = 1; i < repeat; ++i) {
    SIUnitConfig u;
    u.groups = groups;
    u.exchange = exchange;
    u.branch = {out_channels / groups, out_channels / groups, kernel, 1,
                expansion};
    u.funnel = true;
    u.funnel_out_channels = out_channels;
    u.validate();
    units.push_back(u);
  }
  return units;
}

BatchNormLayer::BatchNormLayer(const std::string& name, std::size_t channels)
    : gamma(name + ".gamma", Tensor::ones(Shape{channels})),
      beta(name + ".beta", Tensor::zeros(Shape{channels})),
      state(channels) {}

Var BatchNormLayer::apply(Tape& tape, const Var& x, Mode mode) {
  return batchnorm2d(x, tape.parameter(gamma), tape.parameter(beta), state,
                     mode);
}

void BatchNormLayer::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

BottleneckParams BottleneckParams::init(const BottleneckConfig& cfg, Rng& rng,
                                        const std::string& prefix) {
  cfg.validate();
  const std::size_t in = sz(cfg.in_channels), hid = sz(cfg.hidden()),
                    out = sz(cfg.out_channels), k = sz(cfg.kernel);
  BottleneckParams p;
  p.expand = Parameter(prefix + ".expand",
                       he_uniform(Shape{hid, in, 1, 1}, in, rng));
  p.expand_bn = BatchNormLayer(prefix + ".expand_bn", hid);
  p.depthwise = Parameter(prefix + ".depthwise",
                          he_uniform(Shape{hid, 1, k, k}, k * k, rng));
  p.depthwise_bn = BatchNormLayer(prefix + ".depthwise_bn", hid);
  p.project = Parameter(prefix + ".project",
                        he_uniform(Shape{out, hid, 1, 1}, hid, rng));
  p.project_bn = BatchNormLayer(prefix + ".project_bn", out);
  return p;
}

void BottleneckParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&expand);
  expand_bn.collect(out);
  out.push_back(&depthwise);
  depthwise_bn.collect(out);
  out.push_back(&project);
  project_bn.collect(out);
}

FunnelParams FunnelParams::init(int prev_channels, int current_channels,
                                int out_channels, int groups, Rng& rng,
                                const std::string& prefix) {
  if (prev_channels % groups != 0 || current_channels % groups != 0 ||
      out_channels % groups != 0) {
    throw GroupError("funnel widths must be divisible by groups " +
                     std::to_string(groups));
  }
  const std::size_t per_group = sz((prev_channels + current_channels) / groups);
  FunnelParams p;
  p.squeeze = Parameter(
      prefix + ".squeeze",
      he_uniform(Shape{sz(out_channels), per_group, 1, 1}, per_group, rng));
  p.bn = BatchNormLayer(prefix + ".squeeze_bn", sz(out_channels));
  return p;
}

void FunnelParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&squeeze);
  bn.collect(out);
}

SIUnitParams SIUnitParams::init(const SIUnitConfig& cfg, Rng& rng,
                                const std::string& prefix) {
  cfg.validate();
  SIUnitParams p;
  for (int g = 0; g < cfg.groups; ++g) {
    p.branches.push_back(BottleneckParams::init(
        cfg.branch, rng, prefix + ".branch" + std::to_string(g)));
  }
  if (cfg.funnel) {
    p.funnel = FunnelParams::init(cfg.in_channels(), cfg.branch_out_channels(),
                                  cfg.funnel_out_channels, cfg.groups, rng,
                                  prefix + ".funnel");
  }
  return p;
}

void SIUnitParams::collect(std::vector<Parameter*>& out) {
  for (auto& b : branches) b.collect(out);
  if (funnel) funnel->collect(out);
}

Var composite_h(const Var& x, const BottleneckConfig& cfg,
                BottleneckParams& params, Mode mode) {
  cfg.validate();
  require_channels(x, cfg.in_channels, "composite_h");
  Tape& tape = x.tape();
  Var h = conv2d(x, {tape.parameter(params.expand), std::nullopt, 1, 0, 1});
  h = relu6(params.expand_bn.apply(tape, h, mode));
  h = conv2d(h, {tape.parameter(params.depthwise), std::nullopt, cfg.stride,
                 (cfg.kernel - 1) / 2, cfg.hidden()});
  h = relu6(params.depthwise_bn.apply(tape, h, mode));
  h = conv2d(h, {tape.parameter(params.project), std::nullopt, 1, 0, 1});
  return params.project_bn.apply(tape, h, mode);
}

Var exchange_shortcut(const Var& x, std::span<const Branch> branches) {
  const std::size_t g = branches.size();
  if (g == 0) throw GroupError("exchange shortcut needs at least one branch");
  std::vector<Var> parts = split_channels(x, g);
  std::vector<Var> outs;
  outs.reserve(g);
  for (std::size_t i = 0; i < g; ++i) {
    Var h = branches[i](parts[i]);
    const Var& partner = parts[(i + 1) % g];
    if (h.shape() != partner.shape()) {
      throw DimensionError("exchange shortcut: branch output " +
                           h.shape().str() + " cannot be added to group " +
                           partner.shape().str() +
                           " (branches must preserve shape)");
    }
    outs.push_back(add(h, partner));
  }
  return concat_channels(outs);
}

Var dense_funnel(const Var& prev, const Var& current, FunnelParams& params,
                 int groups, Mode mode) {
  const Shape& ps = prev.shape();
  const Shape& cs = current.shape();
  if (ps.rank() != 4 || cs.rank() != 4 || ps[0] != cs[0] || ps[2] != cs[2] ||
      ps[3] != cs[3]) {
    throw DimensionError("dense funnel: inputs must share N, H, W; got " +
                         ps.str() + " and " + cs.str());
  }
  if (groups < 1) throw GroupError("dense funnel groups must be >= 1");
  const std::size_t g = sz(groups);
  std::vector<Var> pieces;
  if (g == 1) {
    pieces = {prev, current};
  } else {
    const auto p = split_channels(prev, g);
    const auto c = split_channels(current, g);
    for (std::size_t i = 0; i < g; ++i) {
      pieces.push_back(p[i]);
      pieces.push_back(c[i]);
    }
  }
  Var joined = concat_channels(pieces);
  Tape& tape = prev.tape();
  Var y = conv2d(joined,
                 {tape.parameter(params.squeeze), std::nullopt, 1, 0, groups});
  return relu6(params.bn.apply(tape, y, mode));
}

Var si_unit(const Var& x, const SIUnitConfig& cfg, SIUnitParams& params,
            Mode mode) {
  cfg.validate();
  require_channels(x, cfg.in_channels(), "si_unit");
  if (params.branches.size() != sz(cfg.groups) ||
      params.funnel.has_value() != cfg.funnel) {
    throw SpecError("SI unit parameters do not match its config");
  }
  Var current;
  if (cfg.exchange) {
    std::vector<Branch> branches;
    for (auto& bp : params.branches) {
      branches.emplace_back([&cfg, &bp, mode](const Var& part) {
        return composite_h(part, cfg.branch, bp, mode);
      });
    }
    current = exchange_shortcut(x, branches);
  } else if (cfg.groups == 1) {
    current = composite_h(x, cfg.branch, params.branches.front(), mode);
  } else {
    const auto parts = split_channels(x, sz(cfg.groups));
    std::vector<Var> outs;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      outs.push_back(composite_h(parts[i], cfg.branch, params.branches[i], mode));
    }
    current = concat_channels(outs);
  }
  if (!cfg.funnel) return current;
  return dense_funnel(x, current, *params.funnel, cfg.groups, mode);
}

Var si_block(const Var& x, std::span<const SIUnitConfig> units,
             std::span<SIUnitParams> params, Mode mode) {
  if (units.empty()) throw SpecError("SI block needs at least one unit");
  if (units.size() != params.size()) {
    throw SpecError("SI block: unit and parameter counts differ");
  }
  Var y = x;
  for (std::size_t i = 0; i < units.size(); ++i) {
    y = si_unit(y, units[i], params[i], mode);
  }
  return y;
}

}  // namespace sinet
