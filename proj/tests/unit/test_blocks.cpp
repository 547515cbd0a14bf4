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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sinet/blocks.hpp"
#include "sinet/errors.hpp"
#include "sinet/rng.hpp"

namespace sinet {
namespace {

// Eval-mode BN with mean 0, var 1, eps 0, gamma 1, beta 0 is exactly the
// identity.
void bypass(BatchNormLayer& bn) {
  bn.gamma.value.fill(1.0);
  bn.beta.value.fill(0.0);
  bn.state.running_mean.fill(0.0);
  bn.state.running_var.fill(1.0);
  bn.state.eps = 0.0;
}

BottleneckParams identity_bottleneck(int channels, int kernel) {
  Rng rng(0);
  BottleneckConfig cfg{channels, channels, kernel, 1, 1};
  BottleneckParams p = BottleneckParams::init(cfg, rng, "h");
  p.expand.value.fill(0.0);
  p.project.value.fill(0.0);
  p.depthwise.value.fill(0.0);
  const auto c = static_cast<std::size_t>(channels);
  const auto k = static_cast<std::size_t>(kernel);
  for (std::size_t i = 0; i < c; ++i) {
    p.expand.value[i * c + i] = 1.0;
    p.project.value[i * c + i] = 1.0;
    p.depthwise.value[i * k * k + (k / 2) * k + k / 2] = 1.0;
  }
  bypass(p.expand_bn);
  bypass(p.depthwise_bn);
  bypass(p.project_bn);
  return p;
}

TEST(CompositeH, IdentityWeightsReproduceInput) {
  BottleneckParams p = identity_bottleneck(3, 3);
  Rng rng(1);
  const Tensor x = uniform_tensor(Shape{2, 3, 5, 5}, 0.0, 5.9, rng);
  Tape tape;
  const Tensor y = composite_h(tape.constant(x), {3, 3, 3, 1, 1}, p, Mode::Eval).value();
  EXPECT_LT(max_abs_diff(x, y), 1e-15);
}

TEST(CompositeH, StrideTwoHalvesSpatialSize) {
  Rng rng(2);
  BottleneckConfig cfg{4, 6, 5, 2, 3};
  BottleneckParams p = BottleneckParams::init(cfg, rng, "h");
  Tape tape;
  Var y = composite_h(tape.constant(uniform_tensor(Shape{1, 4, 8, 8}, -1, 1, rng)), cfg, p,
                      Mode::Train);
  EXPECT_EQ(y.shape(), (Shape{1, 6, 4, 4}));
}

TEST(CompositeH, ChannelMismatchThrows) {
  Rng rng(3);
  BottleneckConfig cfg{4, 4, 3, 1, 2};
  BottleneckParams p = BottleneckParams::init(cfg, rng, "h");
  Tape tape;
  EXPECT_THROW(composite_h(tape.constant(Tensor::ones(Shape{1, 3, 4, 4})), cfg, p, Mode::Eval),
               DimensionError);
}

TEST(CompositeH, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  BottleneckConfig cfg{4, 4, 3, 1, 2};
  BottleneckParams p = BottleneckParams::init(cfg, rng, "h");
  const Tensor x0 = uniform_tensor(Shape{1, 4, 6, 6}, -1, 1, rng);
  const Tensor r = uniform_tensor(Shape{1, 4, 6, 6}, -1, 1, rng);
  auto loss = [&](const Tensor& x) {
    Tape t;
    return weighted_sum(composite_h(t.constant(x), cfg, p, Mode::Train), r).value()[0];
  };
  Tape tape;
  Var x = tape.variable(x0);
  tape.backward(weighted_sum(composite_h(x, cfg, p, Mode::Train), r));
  EXPECT_LT(oracle::max_relative_error(x.grad(), oracle::numeric_gradient(loss, x0)), 1e-4);
}

using Branches = std::vector<Branch>;

TEST(ExchangeShortcut, ZeroBranchesSwapHalves) {
  Rng rng(5);
  const Tensor x = uniform_tensor(Shape{2, 6, 3, 3}, -1, 1, rng);
  Branch zero = [](const Var& v) { return v.tape().constant(Tensor::zeros(v.shape())); };
  Tape tape;
  const Tensor y = exchange_shortcut(tape.constant(x), Branches{zero, zero}).value();
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t h = 0; h < 3; ++h)
        for (std::size_t w = 0; w < 3; ++w)
          EXPECT_EQ(y.at(n, c, h, w), x.at(n, (c + 3) % 6, h, w));
}

TEST(ExchangeShortcut, IdentityBranchesGiveSumInBothHalves) {
  Rng rng(6);
  const Tensor x = uniform_tensor(Shape{1, 4, 2, 2}, -1, 1, rng);
  Branch id = [](const Var& v) { return v; };
  Tape tape;
  const Tensor y = exchange_shortcut(tape.constant(x), Branches{id, id}).value();
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t h = 0; h < 2; ++h)
      for (std::size_t w = 0; w < 2; ++w) {
        const double s = x.at(0, c, h, w) + x.at(0, c + 2, h, w);
        EXPECT_EQ(y.at(0, c, h, w), s);
        EXPECT_EQ(y.at(0, c + 2, h, w), s);
      }
}

TEST(ExchangeShortcut, CyclicForThreeGroups) {
  Rng rng(7);
  const Tensor x = uniform_tensor(Shape{1, 3, 1, 1}, -1, 1, rng);
  Branch zero = [](const Var& v) { return v.tape().constant(Tensor::zeros(v.shape())); };
  Tape tape;
  const Tensor y = exchange_shortcut(tape.constant(x), Branches{zero, zero, zero}).value();
  EXPECT_EQ(y[0], x[1]);
  EXPECT_EQ(y[1], x[2]);
  EXPECT_EQ(y[2], x[0]);
}

TEST(ExchangeShortcut, SwappingInputsAndBranchesSwapsOutputs) {
  Rng rng(8);
  BottleneckConfig cfg{3, 3, 3, 1, 2};
  BottleneckParams a = BottleneckParams::init(cfg, rng, "a");
  BottleneckParams b = BottleneckParams::init(cfg, rng, "b");
  const Tensor x = uniform_tensor(Shape{2, 6, 4, 4}, -1, 1, rng);
  Tensor xs(x.shape());
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t p = 0; p < 16; ++p)
        xs[(n * 6 + c) * 16 + p] = x[(n * 6 + (c + 3) % 6) * 16 + p];
  auto branch = [&cfg](BottleneckParams& bp) -> Branch {
    return [&cfg, &bp](const Var& v) { return composite_h(v, cfg, bp, Mode::Train); };
  };
  Tape tape;
  const Tensor y = exchange_shortcut(tape.constant(x), Branches{branch(a), branch(b)}).value();
  const Tensor ys = exchange_shortcut(tape.constant(xs), Branches{branch(b), branch(a)}).value();
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t p = 0; p < 16; ++p)
        EXPECT_EQ(ys[(n * 6 + c) * 16 + p], y[(n * 6 + (c + 3) % 6) * 16 + p]);
}

TEST(ExchangeShortcut, ShapeChangingBranchThrows) {
  Rng rng(9);
  BottleneckConfig cfg{2, 2, 3, 2, 1};
  BottleneckParams a = BottleneckParams::init(cfg, rng, "a");
  Branch strided = [&](const Var& v) { return composite_h(v, cfg, a, Mode::Train); };
  Tape tape;
  EXPECT_THROW(exchange_shortcut(tape.constant(Tensor::ones(Shape{1, 4, 4, 4})),
                                 Branches{strided, strided}),
               DimensionError);
}

TEST(DenseFunnel, SelectingCurrentProjectsOntoCurrent) {
  Rng rng(10);
  const Tensor prev = uniform_tensor(Shape{2, 2, 3, 3}, -5, 5, rng);
  const Tensor cur = uniform_tensor(Shape{2, 2, 3, 3}, 0.0, 5.9, rng);
  for (int groups : {1, 2}) {
    FunnelParams f = FunnelParams::init(2, 2, 2, groups, rng, "f");
    f.squeeze.value.fill(0.0);
    bypass(f.bn);
    if (groups == 1) {
      // joined = [prev0, prev1, cur0, cur1]
      f.squeeze.value[0 * 4 + 2] = 1.0;
      f.squeeze.value[1 * 4 + 3] = 1.0;
    } else {
      // per group: [prev_g, cur_g] -> pick cur_g
      f.squeeze.value[0 * 2 + 1] = 1.0;
      f.squeeze.value[1 * 2 + 1] = 1.0;
    }
    Tape tape;
    const Tensor y =
        dense_funnel(tape.constant(prev), tape.constant(cur), f, groups, Mode::Eval).value();
    EXPECT_EQ(y.values(), cur.values()) << "groups " << groups;
  }
}

TEST(DenseFunnel, SqueezesToRequestedWidth) {
  Rng rng(11);
  FunnelParams f = FunnelParams::init(32, 32, 32, 2, rng, "f");
  Tape tape;
  Var y = dense_funnel(tape.constant(uniform_tensor(Shape{1, 32, 2, 2}, -1, 1, rng)),
                       tape.constant(uniform_tensor(Shape{1, 32, 2, 2}, -1, 1, rng)), f, 2,
                       Mode::Train);
  EXPECT_EQ(y.shape(), (Shape{1, 32, 2, 2}));
}

TEST(DenseFunnel, SpatialMismatchThrows) {
  Rng rng(12);
  FunnelParams f = FunnelParams::init(2, 2, 2, 1, rng, "f");
  Tape tape;
  EXPECT_THROW(dense_funnel(tape.constant(Tensor::ones(Shape{1, 2, 2, 2})),
                            tape.constant(Tensor::ones(Shape{1, 2, 3, 3})), f, 1, Mode::Eval),
               DimensionError);
}

TEST(DenseFunnel, GradientMatchesFiniteDifferences) {
  Rng rng(13);
  FunnelParams f = FunnelParams::init(4, 4, 4, 2, rng, "f");
  const Tensor p0 = uniform_tensor(Shape{2, 4, 2, 2}, -1, 1, rng);
  const Tensor c0 = uniform_tensor(Shape{2, 4, 2, 2}, -1, 1, rng);
  const Tensor r = uniform_tensor(Shape{2, 4, 2, 2}, -1, 1, rng);
  auto loss = [&](const Tensor& p, const Tensor& c) {
    Tape t;
    return weighted_sum(dense_funnel(t.constant(p), t.constant(c), f, 2, Mode::Train), r)
        .value()[0];
  };
  Tape tape;
  Var p = tape.variable(p0), c = tape.variable(c0);
  tape.backward(weighted_sum(dense_funnel(p, c, f, 2, Mode::Train), r));
  EXPECT_LT(oracle::max_relative_error(
                p.grad(), oracle::numeric_gradient([&](const Tensor& t) { return loss(t, c0); }, p0)),
            1e-4);
  EXPECT_LT(oracle::max_relative_error(
                c.grad(), oracle::numeric_gradient([&](const Tensor& t) { return loss(p0, t); }, c0)),
            1e-4);
}

SIUnitConfig unit(int groups, bool exchange, int branch_in, int branch_out, int stride,
                  bool funnel, int funnel_out) {
  SIUnitConfig u;
  u.groups = groups;
  u.exchange = exchange;
  u.branch = {branch_in, branch_out, 3, stride, 2};
  u.funnel = funnel;
  u.funnel_out_channels = funnel_out;
  return u;
}

TEST(SIUnit, OutputWidthIsFunnelWidth) {
  Rng rng(14);
  const SIUnitConfig cfg = unit(2, true, 3, 3, 1, true, 10);
  SIUnitParams p = SIUnitParams::init(cfg, rng, "u");
  Tape tape;
  Var y = si_unit(tape.constant(uniform_tensor(Shape{2, 6, 4, 4}, -1, 1, rng)), cfg, p,
                  Mode::Train);
  EXPECT_EQ(y.shape(), (Shape{2, 10, 4, 4}));
}

// Bottleneck + funnel written out with raw operators, reading the same
// parameter tensors.
Tensor manual_bottleneck_funnel(const Tensor& x, SIUnitParams& p, Mode mode) {
  Tape t;
  BottleneckParams& b = p.branches.front();
  auto bn = [&](const Var& v, BatchNormLayer& l) {
    return batchnorm2d(v, t.constant(l.gamma.value), t.constant(l.beta.value), l.state, mode);
  };
  Var in = t.constant(x);
  const int hidden = static_cast<int>(b.depthwise.value.dim(0));
  Var h = relu6(bn(conv2d(in, {t.constant(b.expand.value), std::nullopt}), b.expand_bn));
  h = relu6(bn(conv2d(h, {t.constant(b.depthwise.value), std::nullopt, 1, 1, hidden}),
               b.depthwise_bn));
  h = bn(conv2d(h, {t.constant(b.project.value), std::nullopt}), b.project_bn);
  Var joined = concat_channels({in, h});
  Var y = relu6(bn(conv2d(joined, {t.constant(p.funnel->squeeze.value), std::nullopt}), p.funnel->bn));
  return y.value();
}

TEST(SIUnit, SingleGroupEqualsBottleneckPlusFunnel) {
  Rng rng(15);
  const SIUnitConfig cfg = unit(1, false, 4, 6, 1, true, 4);
  SIUnitParams p = SIUnitParams::init(cfg, rng, "u");
  SIUnitParams q = p;
  const Tensor x = uniform_tensor(Shape{2, 4, 5, 5}, -1, 1, rng);
  Tape tape;
  const Tensor y = si_unit(tape.constant(x), cfg, p, Mode::Train).value();
  const Tensor want = manual_bottleneck_funnel(x, q, Mode::Train);
  EXPECT_LT(max_abs_diff(y, want), 1e-12);
}

TEST(SIUnit, GradientMatchesFiniteDifferences) {
  Rng rng(16);
  const SIUnitConfig cfg = unit(2, true, 2, 2, 1, true, 4);
  SIUnitParams p = SIUnitParams::init(cfg, rng, "u");
  const Tensor x0 = uniform_tensor(Shape{2, 4, 3, 3}, -1, 1, rng);
  const Tensor r = uniform_tensor(Shape{2, 4, 3, 3}, -1, 1, rng);
  auto loss = [&](const Tensor& x) {
    Tape t;
    return weighted_sum(si_unit(t.constant(x), cfg, p, Mode::Train), r).value()[0];
  };
  Tape tape;
  Var x = tape.variable(x0);
  tape.backward(weighted_sum(si_unit(x, cfg, p, Mode::Train), r));
  EXPECT_LT(oracle::max_relative_error(x.grad(), oracle::numeric_gradient(loss, x0)), 1e-4);
}

TEST(SIUnit, ConfigValidation) {
  EXPECT_THROW(unit(1, true, 4, 4, 1, false, 0).validate(), SpecError);
  EXPECT_THROW(unit(2, true, 4, 4, 2, false, 0).validate(), UnsupportedError);
  EXPECT_THROW(unit(2, true, 4, 6, 1, false, 0).validate(), DimensionError);
  EXPECT_THROW(unit(2, false, 4, 4, 2, true, 8).validate(), UnsupportedError);
  EXPECT_THROW(unit(2, false, 4, 4, 1, true, 7).validate(), GroupError);
  EXPECT_NO_THROW(unit(2, true, 4, 4, 1, true, 8).validate());
  EXPECT_THROW((BottleneckConfig{4, 4, 2, 1, 1}.validate()), SpecError);
}

TEST(SIUnit, MismatchedParamsThrow) {
  Rng rng(17);
  SIUnitParams p = SIUnitParams::init(unit(2, false, 2, 2, 1, false, 0), rng, "u");
  Tape tape;
  EXPECT_THROW(si_unit(tape.constant(Tensor::ones(Shape{1, 4, 2, 2})),
                       unit(2, false, 2, 2, 1, true, 4), p, Mode::Eval),
               SpecError);
}

TEST(BlockUnits, FirstUnitStridesOthersExchangeAndFunnel) {
  const auto units = block_units(8, 16, 3, 2, 4, 6, 2, true);
  ASSERT_EQ(units.size(), 4u);
  EXPECT_EQ(units[0].branch.stride, 2);
  EXPECT_FALSE(units[0].exchange);
  EXPECT_FALSE(units[0].funnel);
  EXPECT_EQ(units[0].in_channels(), 8);
  EXPECT_EQ(units[0].out_channels(), 16);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_EQ(units[i].branch.stride, 1);
    EXPECT_TRUE(units[i].exchange);
    EXPECT_TRUE(units[i].funnel);
    EXPECT_EQ(units[i].in_channels(), 16);
    EXPECT_EQ(units[i].out_channels(), 16);
  }
  // 21 stem channels cannot be split in two.
  EXPECT_EQ(block_units(21, 24, 3, 2, 4, 3, 2, true)[0].groups, 1);
}

TEST(SIBlock, HalvesSpatialSizeAndYieldsRowChannels) {
  Rng rng(18);
  const auto units = block_units(8, 16, 3, 2, 4, 2, 2, true);
  std::vector<SIUnitParams> params;
  for (const auto& u : units) params.push_back(SIUnitParams::init(u, rng, "u"));
  Tape tape;
  const Tensor y = si_block(tape.constant(uniform_tensor(Shape{1, 8, 32, 32}, -1, 1, rng)),
                            units, params, Mode::Train)
                       .value();
  EXPECT_EQ(y.shape(), (Shape{1, 16, 16, 16}));
}

TEST(SIBlock, OutputsStayFiniteForLargeInputs) {
  Rng rng(19);
  const auto units = block_units(4, 8, 5, 2, 3, 3, 2, true);
  std::vector<SIUnitParams> params;
  for (const auto& u : units) params.push_back(SIUnitParams::init(u, rng, "u"));
  for (Mode mode : {Mode::Train, Mode::Eval}) {
    Tape tape;
    const Tensor y = si_block(tape.constant(uniform_tensor(Shape{2, 4, 8, 8}, -1e6, 1e6, rng)),
                              units, params, mode)
                         .value();
    for (double v : y.values()) EXPECT_TRUE(std::isfinite(v));
  }
}

}  // namespace
}  // namespace sinet
