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

#include "sinet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "sinet/blocks.hpp"
#include "sinet/decision.hpp"
#include "sinet/ops.hpp"
#include "sinet/rng.hpp"

namespace sinet {

double gradcheck_relative_error(double analytic, double numeric) {
  const double scale =
      std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / scale;
}

namespace {

double loss_value(const LossBuilder& build) {
  Tape tape;
  return build(tape).value()[0];
}

}  // namespace

GradCheckStats check_gradients(const LossBuilder& build,
                               std::span<Parameter* const> params,
                               const GradCheckOptions& options) {
  for (Parameter* p : params) p->grad = Tensor::zeros(p->value.shape());
  {
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
  }
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) analytic.push_back(p->grad);

  Rng pick(options.seed);
  GradCheckStats stats;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& value = params[t]->value;
    std::vector<std::size_t> idx(value.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_entries != 0 && idx.size() > options.max_entries) {
      pick.shuffle(std::span<std::size_t>(idx));
      idx.resize(options.max_entries);
    }
    for (std::size_t i : idx) {
      const double saved = value[i];
      value[i] = saved + options.step;
      const double up = loss_value(build);
      value[i] = saved - options.step;
      const double down = loss_value(build);
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      stats.max_rel_error = std::max(
          stats.max_rel_error,
          gradcheck_relative_error(analytic[t][i], numeric));
      ++stats.entries;
    }
  }
  return stats;
}

namespace {

// A case owns its parameters and builds a loss from them. Every case ends
// in a fixed random weighting of the output, so each output entry gets a
// distinct upstream gradient.
struct Case {
  std::vector<std::unique_ptr<Parameter>> owned;
  std::vector<Parameter*> params;
  LossBuilder build;
  GradCheckOptions options;

  Parameter& add(std::string name, Tensor value) {
    owned.push_back(std::make_unique<Parameter>(std::move(name), std::move(value)));
    params.push_back(owned.back().get());
    return *owned.back();
  }
};

// Draws values in [lo, hi] that keep clear of ReLU6's kinks at 0 and 6.
Tensor smooth_input(Shape shape, double lo, double hi, Rng& rng) {
  Tensor t = uniform_tensor(std::move(shape), lo, hi, rng);
  for (std::size_t i = 0; i < t.size(); ++i) {
    while (std::abs(t[i]) < 0.05 || std::abs(t[i] - 6.0) < 0.05) {
      t[i] = rng.uniform(lo, hi);
    }
  }
  return t;
}

Tensor weights_like(const Shape& s, Rng& rng) {
  return uniform_tensor(s, -1.0, 1.0, rng);
}

// Wraps an output-producing function in the weighted-sum loss. The weights
// are drawn lazily on the first build, once the output shape is known.
LossBuilder weighted(std::function<Var(Tape&)> out, std::shared_ptr<Rng> rng) {
  auto w = std::make_shared<Tensor>();
  return [out = std::move(out), rng, w](Tape& tape) {
    Var y = out(tape);
    if (w->empty()) *w = weights_like(y.shape(), *rng);
    return weighted_sum(y, *w);
  };
}

using CaseFactory = std::function<Case(std::uint64_t)>;

struct NamedCase {
  const char* name;
  CaseFactory make;
};

Case conv_case(std::uint64_t seed, Shape in, Shape w, int stride, int pad,
               int groups, bool bias) {
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  Parameter& x = c.add("x", uniform_tensor(in, -1.0, 1.0, *rng));
  Parameter& k = c.add("w", uniform_tensor(w, -1.0, 1.0, *rng));
  Parameter* b = nullptr;
  if (bias) b = &c.add("b", uniform_tensor(Shape{w[0]}, -1.0, 1.0, *rng));
  c.build = weighted(
      [&x, &k, b, stride, pad, groups](Tape& t) {
        ConvParams p{t.parameter(k), std::nullopt, stride, pad, groups};
        if (b) p.bias = t.parameter(*b);
        return conv2d(t.parameter(x), p);
      },
      rng);
  return c;
}

Case unary_case(std::uint64_t seed, Shape in, double lo, double hi,
                std::function<Var(const Var&)> f) {
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  Parameter& x = c.add("x", smooth_input(in, lo, hi, *rng));
  c.build = weighted([&x, f](Tape& t) { return f(t.parameter(x)); }, rng);
  return c;
}

Case batchnorm_case(std::uint64_t seed, Mode mode) {
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  Parameter& x = c.add("x", uniform_tensor(Shape{2, 3, 2, 2}, -2.0, 2.0, *rng));
  Parameter& g = c.add("gamma", uniform_tensor(Shape{3}, 0.5, 1.5, *rng));
  Parameter& b = c.add("beta", uniform_tensor(Shape{3}, -0.5, 0.5, *rng));
  auto state = std::make_shared<BatchNormState>(3);
  state->running_mean = uniform_tensor(Shape{3}, -0.5, 0.5, *rng);
  state->running_var = uniform_tensor(Shape{3}, 0.5, 2.0, *rng);
  const BatchNormState frozen = *state;
  c.build = weighted(
      [&x, &g, &b, state, frozen, mode](Tape& t) {
        // Keep eval probes on identical statistics.
        if (mode == Mode::Eval) *state = frozen;
        return batchnorm2d(t.parameter(x), t.parameter(g), t.parameter(b),
                           *state, mode);
      },
      rng);
  return c;
}

Case fc_case(std::uint64_t seed) {
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  Parameter& x = c.add("x", uniform_tensor(Shape{3, 4}, -1.0, 1.0, *rng));
  Parameter& w = c.add("w", uniform_tensor(Shape{4, 5}, -1.0, 1.0, *rng));
  Parameter& b = c.add("b", uniform_tensor(Shape{5}, -1.0, 1.0, *rng));
  c.build = weighted(
      [&x, &w, &b](Tape& t) {
        return fully_connected(t.parameter(x), t.parameter(w), t.parameter(b));
      },
      rng);
  return c;
}

Case binary_case(std::uint64_t seed, Shape a_shape, Shape b_shape,
                 std::function<Var(const Var&, const Var&)> f) {
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  Parameter& a = c.add("a", uniform_tensor(a_shape, -1.0, 1.0, *rng));
  Parameter& b = c.add("b", uniform_tensor(b_shape, -1.0, 1.0, *rng));
  c.build = weighted(
      [&a, &b, f](Tape& t) { return f(t.parameter(a), t.parameter(b)); }, rng);
  return c;
}

Case concat_case(std::uint64_t seed) {
  return binary_case(seed, Shape{2, 2, 2, 2}, Shape{2, 3, 2, 2},
                     [](const Var& a, const Var& b) {
                       return concat_channels({a, b});
                     });
}

Case split_case(std::uint64_t seed) {
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  Parameter& x = c.add("x", uniform_tensor(Shape{2, 6, 2, 2}, -1.0, 1.0, *rng));
  // Re-join the slices in a different order so each slice's gradient is
  // routed through a distinct position.
  c.build = weighted(
      [&x](Tape& t) {
        auto parts = split_channels(t.parameter(x), 3);
        return concat_channels({parts[2], mul(parts[0], parts[1])});
      },
      rng);
  return c;
}

Case cross_entropy_case(std::uint64_t seed) {
  Case c;
  Rng rng(seed);
  Parameter& x = c.add("logits", uniform_tensor(Shape{4, 3}, -2.0, 2.0, rng));
  std::vector<int> labels;
  for (int i = 0; i < 4; ++i) labels.push_back(static_cast<int>(rng.below(3)));
  c.build = [&x, labels](Tape& t) {
    return softmax_cross_entropy(t.parameter(x), labels);
  };
  return c;
}

Case sum_case(std::uint64_t seed) {
  Case c;
  Rng rng(seed);
  Parameter& x = c.add("x", uniform_tensor(Shape{2, 3}, -1.0, 1.0, rng));
  c.build = [&x](Tape& t) {
    Var v = t.parameter(x);
    return sum(mul(v, v));
  };
  return c;
}

void collect_into(Case& c, const std::vector<Parameter*>& ps) {
  c.params.insert(c.params.end(), ps.begin(), ps.end());
}

Case composite_case(std::uint64_t seed) {
  auto held = std::make_shared<BottleneckParams>();
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  BottleneckConfig cfg{4, 4, 3, 1, 2};
  Parameter& x = c.add("x", uniform_tensor(Shape{1, 4, 6, 6}, -1.0, 1.0, *rng));
  *held = BottleneckParams::init(cfg, *rng, "h");
  std::vector<Parameter*> ps;
  held->collect(ps);
  collect_into(c, ps);
  c.build = weighted(
      [&x, held, cfg](Tape& t) {
        return composite_h(t.parameter(x), cfg, *held, Mode::Train);
      },
      rng);
  return c;
}

Case exchange_case(std::uint64_t seed) {
  auto held = std::make_shared<std::vector<BottleneckParams>>();
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  BottleneckConfig cfg{2, 2, 3, 1, 2};
  Parameter& x = c.add("x", uniform_tensor(Shape{2, 4, 3, 3}, -1.0, 1.0, *rng));
  std::vector<Parameter*> ps;
  for (int g = 0; g < 2; ++g) {
    held->push_back(BottleneckParams::init(cfg, *rng, "h" + std::to_string(g)));
  }
  for (auto& h : *held) h.collect(ps);
  collect_into(c, ps);
  c.build = weighted(
      [&x, held, cfg](Tape& t) {
        std::vector<Branch> branches;
        for (auto& h : *held) {
          BottleneckParams* hp = &h;
          branches.push_back([hp, cfg](const Var& v) {
            return composite_h(v, cfg, *hp, Mode::Train);
          });
        }
        return exchange_shortcut(t.parameter(x), branches);
      },
      rng);
  return c;
}

Case funnel_case(std::uint64_t seed) {
  auto held = std::make_shared<FunnelParams>();
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  Parameter& prev =
      c.add("prev", uniform_tensor(Shape{2, 4, 2, 2}, -1.0, 1.0, *rng));
  Parameter& cur = c.add("cur", uniform_tensor(Shape{2, 4, 2, 2}, -1.0, 1.0, *rng));
  *held = FunnelParams::init(4, 4, 4, 2, *rng, "funnel");
  std::vector<Parameter*> ps;
  held->collect(ps);
  collect_into(c, ps);
  c.build = weighted(
      [&prev, &cur, held](Tape& t) {
        return dense_funnel(t.parameter(prev), t.parameter(cur), *held, 2,
                            Mode::Train);
      },
      rng);
  return c;
}

Case si_unit_case(std::uint64_t seed, SIUnitConfig cfg, std::size_t hw) {
  auto held = std::make_shared<SIUnitParams>();
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  const auto in = static_cast<std::size_t>(cfg.in_channels());
  Parameter& x = c.add("x", uniform_tensor(Shape{2, in, hw, hw}, -1.0, 1.0, *rng));
  *held = SIUnitParams::init(cfg, *rng, "unit");
  std::vector<Parameter*> ps;
  held->collect(ps);
  collect_into(c, ps);
  c.build = weighted(
      [&x, held, cfg](Tape& t) {
        return si_unit(t.parameter(x), cfg, *held, Mode::Train);
      },
      rng);
  return c;
}

Case attention_case(std::uint64_t seed) {
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  Parameter& z = c.add("z", uniform_tensor(Shape{3, 6}, -1.0, 1.0, *rng));
  Parameter& w1 = c.add("w1", uniform_tensor(Shape{6, 4}, -1.0, 1.0, *rng));
  Parameter& w2 = c.add("w2", uniform_tensor(Shape{4, 1}, -1.0, 1.0, *rng));
  c.build = weighted(
      [&z, &w1, &w2](Tape& t) {
        return attention_weight(t.parameter(z), t.parameter(w1),
                                t.parameter(w2));
      },
      rng);
  return c;
}

Case joint_decision_case(std::uint64_t seed) {
  auto head = std::make_shared<AttentionHeadParams>();
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  const std::vector<int> widths{4, 6};
  HeadConfig cfg;
  cfg.hidden = 5;
  *head = AttentionHeadParams::init_attention(widths, cfg, 3, *rng);
  Parameter& z1 = c.add("z1", uniform_tensor(Shape{2, 4}, -1.0, 1.0, *rng));
  Parameter& z2 = c.add("z2", uniform_tensor(Shape{2, 6}, -1.0, 1.0, *rng));
  std::vector<Parameter*> ps;
  head->collect(ps);
  collect_into(c, ps);
  c.build = weighted(
      [&z1, &z2, head](Tape& t) {
        std::vector<Var> z{t.parameter(z1), t.parameter(z2)};
        std::vector<Var> alphas;
        for (std::size_t k = 0; k < z.size(); ++k) {
          alphas.push_back(attention_weight(z[k],
                                            t.parameter(head->gates[k].w1),
                                            t.parameter(head->gates[k].w2)));
        }
        return joint_decision(z, alphas, *head);
      },
      rng);
  return c;
}

Case plain_decision_case(std::uint64_t seed) {
  auto head = std::make_shared<AttentionHeadParams>();
  Case c;
  auto rng = std::make_shared<Rng>(seed);
  HeadConfig cfg;
  cfg.hidden = 5;
  *head = AttentionHeadParams::init_plain(4, cfg, 3, *rng);
  Parameter& x = c.add("x", uniform_tensor(Shape{2, 4, 2, 2}, -1.0, 1.0, *rng));
  std::vector<Parameter*> ps;
  head->collect(ps);
  collect_into(c, ps);
  c.build = weighted(
      [&x, head](Tape& t) { return plain_decision(t.parameter(x), *head); },
      rng);
  return c;
}

SIUnitConfig exchange_unit() {
  SIUnitConfig u;
  u.groups = 2;
  u.exchange = true;
  u.branch = {2, 2, 3, 1, 2};
  u.funnel = true;
  u.funnel_out_channels = 4;
  return u;
}

SIUnitConfig strided_unit() {
  SIUnitConfig u;
  u.groups = 2;
  u.branch = {2, 3, 3, 2, 2};
  return u;
}

const std::vector<NamedCase>& cases() {
  static const std::vector<NamedCase> all = {
      {"conv2d", [](auto s) { return conv_case(s, {2, 3, 4, 4}, {2, 3, 3, 3}, 1, 1, 1, true); }},
      {"conv2d_strided", [](auto s) { return conv_case(s, {2, 3, 5, 5}, {2, 3, 3, 3}, 2, 1, 1, false); }},
      {"conv2d_grouped", [](auto s) { return conv_case(s, {2, 4, 3, 3}, {4, 2, 1, 1}, 1, 0, 2, false); }},
      {"conv2d_depthwise", [](auto s) { return conv_case(s, {2, 3, 4, 4}, {3, 1, 3, 3}, 1, 1, 3, false); }},
      {"relu6", [](auto s) { return unary_case(s, {2, 3, 2, 2}, -2.0, 8.0, [](const Var& v) { return relu6(v); }); }},
      {"sigmoid", [](auto s) { return unary_case(s, {2, 3, 2, 2}, -3.0, 3.0, [](const Var& v) { return sigmoid(v); }); }},
      {"softmax", [](auto s) { return unary_case(s, {3, 4}, -2.0, 2.0, [](const Var& v) { return softmax(v); }); }},
      {"global_avg_pool", [](auto s) { return unary_case(s, {2, 3, 2, 2}, -1.0, 1.0, [](const Var& v) { return global_avg_pool(v); }); }},
      {"batchnorm_train", [](auto s) { return batchnorm_case(s, Mode::Train); }},
      {"batchnorm_eval", [](auto s) { return batchnorm_case(s, Mode::Eval); }},
      {"fully_connected", [](auto s) { return fc_case(s); }},
      {"concat_channels", [](auto s) { return concat_case(s); }},
      {"split_channels", [](auto s) { return split_case(s); }},
      {"add", [](auto s) { return binary_case(s, {2, 3, 2, 2}, {2, 3, 2, 2}, [](const Var& a, const Var& b) { return add(a, b); }); }},
      {"mul", [](auto s) { return binary_case(s, {2, 3, 2, 2}, {2, 3, 2, 2}, [](const Var& a, const Var& b) { return mul(a, b); }); }},
      {"scale_rows", [](auto s) { return binary_case(s, {2, 3, 2, 2}, {2, 1}, [](const Var& a, const Var& b) { return scale_rows(a, b); }); }},
      {"sum", [](auto s) { return sum_case(s); }},
      {"softmax_cross_entropy", [](auto s) { return cross_entropy_case(s); }},
      {"composite_h", [](auto s) { return composite_case(s); }},
      {"exchange_shortcut", [](auto s) { return exchange_case(s); }},
      {"dense_funnel", [](auto s) { return funnel_case(s); }},
      {"si_unit", [](auto s) { return si_unit_case(s, exchange_unit(), 3); }},
      {"si_unit_strided", [](auto s) { return si_unit_case(s, strided_unit(), 4); }},
      {"attention_weight", [](auto s) { return attention_case(s); }},
      {"joint_decision", [](auto s) { return joint_decision_case(s); }},
      {"plain_decision", [](auto s) { return plain_decision_case(s); }},
  };
  return all;
}

}  // namespace

std::vector<std::string> gradcheck_case_names() {
  std::vector<std::string> names;
  for (const auto& c : cases()) names.emplace_back(c.name);
  return names;
}

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed,
                                                 double tolerance) {
  std::vector<GradCheckResult> out;
  for (const auto& nc : cases()) {
    Case c = nc.make(seed);
    const GradCheckStats st = check_gradients(c.build, c.params, c.options);
    out.push_back({nc.name, st.max_rel_error, st.entries,
                   st.max_rel_error < tolerance});
  }
  return out;
}

}  // namespace sinet
