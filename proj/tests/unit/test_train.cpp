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
#include <vector>

#include "sinet/errors.hpp"
#include "sinet/network.hpp"
#include "sinet/train.hpp"

namespace sinet {
namespace {

TEST(SgdStep, SingleStepWithoutHistory) {
  std::vector<double> p{1.0}, g{2.0}, v{0.0};
  sgd_step(p, g, v, 0.1, 0.9);
  EXPECT_DOUBLE_EQ(p[0], 0.8);
  EXPECT_DOUBLE_EQ(v[0], 2.0);
}

TEST(SgdStep, TwoStepRecurrence) {
  std::vector<double> p{0.0}, v{0.0};
  const std::vector<double> g1{1.0}, g2{-0.5};
  sgd_step(p, g1, v, 0.5, 0.9);
  sgd_step(p, g2, v, 0.5, 0.9);
  // v1 = 1, v2 = 0.9 - 0.5 = 0.4; p = -0.5 - 0.2
  EXPECT_DOUBLE_EQ(v[0], 0.4);
  EXPECT_DOUBLE_EQ(p[0], -0.7);
}

TEST(SgdStep, ConstantGradientVelocityIsGeometric) {
  std::vector<double> p{0.0}, v{0.0};
  const std::vector<double> g{1.0};
  const double mu = 0.5;
  for (int t = 1; t <= 10; ++t) {
    sgd_step(p, g, v, 1.0, mu);
    EXPECT_NEAR(v[0], (1.0 - std::pow(mu, t)) / (1.0 - mu), 1e-15);
  }
}

TEST(SgdStep, LengthMismatch) {
  std::vector<double> p{1.0, 2.0}, g{1.0}, v{0.0, 0.0};
  EXPECT_THROW(sgd_step(p, g, v, 0.1, 0.9), DimensionError);
}

TEST(SgdMomentum, UpdatesParametersFromGrad) {
  Parameter a("a", Tensor(Shape{2}, std::vector<double>{1.0, -1.0}));
  a.grad = Tensor(Shape{2}, std::vector<double>{1.0, 2.0});
  SgdMomentum opt({&a}, 0.9);
  opt.step(0.1);
  EXPECT_DOUBLE_EQ(a.value[0], 0.9);
  EXPECT_DOUBLE_EQ(a.value[1], -1.2);
  opt.zero_grad();
  EXPECT_EQ(a.grad[0], 0.0);
  opt.step(0.1);  // pure momentum now
  EXPECT_DOUBLE_EQ(a.value[0], 0.9 - 0.1 * 0.9);
}

TEST(Schedule, ExponentialValues) {
  TrainConfig c;
  EXPECT_DOUBLE_EQ(lr_at(0, c), 0.045);
  EXPECT_NEAR(lr_at(1, c), 0.0441, 1e-15);
  EXPECT_NEAR(lr_at(10, c), 0.045 * std::pow(0.98, 10), 1e-15);
  for (int e = 0; e < 200; ++e) EXPECT_LT(lr_at(e + 1, c), lr_at(e, c));
}

TEST(Schedule, StepValues) {
  TrainConfig c;
  c.lr0 = 0.01;
  c.schedule.kind = ScheduleKind::Step;
  EXPECT_DOUBLE_EQ(lr_at(0, c), 0.01);
  EXPECT_DOUBLE_EQ(lr_at(79, c), 0.01);
  EXPECT_NEAR(lr_at(80, c), 0.001, 1e-17);
  EXPECT_NEAR(lr_at(159, c), 0.001, 1e-17);
  EXPECT_NEAR(lr_at(160, c), 0.0001, 1e-18);
  for (int e = 0; e < 300; ++e) {
    if ((e + 1) % 80 == 0) {
      EXPECT_LT(lr_at(e + 1, c), lr_at(e, c));
    } else {
      EXPECT_EQ(lr_at(e + 1, c), lr_at(e, c));
    }
  }
  EXPECT_THROW(lr_at(-1, c), SpecError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = [](auto mutate) {
    TrainConfig t;
    mutate(t);
    return t;
  };
  EXPECT_THROW(bad([](TrainConfig& t) { t.lr0 = 0.0; }).validate(), SpecError);
  EXPECT_THROW(bad([](TrainConfig& t) { t.momentum = 1.0; }).validate(), SpecError);
  EXPECT_THROW(bad([](TrainConfig& t) { t.batch_size = 0; }).validate(), SpecError);
  EXPECT_THROW(bad([](TrainConfig& t) { t.epochs = -1; }).validate(), SpecError);
  EXPECT_THROW(bad([](TrainConfig& t) { t.schedule.rate = 0.0; }).validate(), SpecError);
  EXPECT_THROW(bad([](TrainConfig& t) {
                 t.schedule.kind = ScheduleKind::Step;
                 t.schedule.every = 0;
               }).validate(),
               SpecError);
}

TEST(TrainConfigJson, RoundTripsBothSchedules) {
  TrainConfig c;
  c.seed = 42;
  c.epochs = 7;
  EXPECT_EQ(to_json(train_config_from_json(to_json(c))), to_json(c));
  c.schedule.kind = ScheduleKind::Step;
  c.schedule.every = 3;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(back.schedule.kind, ScheduleKind::Step);
  EXPECT_EQ(back.schedule.every, 3);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(to_json(c)["schedule"]["kind"], "step");
}

DatasetDescriptor tiny_data() {
  DatasetDescriptor d;
  d.samples_per_class = 8;
  d.size = 32;
  return d;
}

TEST(Dataset, DeterministicAndBalanced) {
  const Dataset a = make_dataset(tiny_data());
  const Dataset b = make_dataset(tiny_data());
  EXPECT_EQ(a.samples.values(), b.samples.values());
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.samples.shape(), (Shape{24, 3, 32, 32}));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.labels[i], static_cast<int>(i % 3));
  DatasetDescriptor other = tiny_data();
  other.seed = 8;
  EXPECT_NE(make_dataset(other).samples.values(), a.samples.values());
}

TEST(Dataset, ClassMeansAreSeparated) {
  const DatasetDescriptor d = tiny_data();
  const Dataset data = make_dataset(d);
  const std::size_t C = 3, HW = 32 * 32;
  std::vector<double> mean(9, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t p = 0; p < HW; ++p)
        mean[static_cast<std::size_t>(data.labels[i]) * C + c] +=
            data.samples[(i * C + c) * HW + p] / (8.0 * HW);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < C; ++c) d2 += std::pow(mean[a * C + c] - mean[b * C + c], 2);
      // centers are >= 2 apart; per-sample jitter of the class mean is small
      EXPECT_GT(std::sqrt(d2), 1.0);
    }
}

TEST(Dataset, Validation) {
  DatasetDescriptor d = tiny_data();
  d.classes = 1;
  EXPECT_THROW(make_dataset(d), SpecError);
  d = tiny_data();
  d.kind = "spirals";
  EXPECT_THROW(make_dataset(d), SpecError);
  d = tiny_data();
  d.separation = 1e6;
  d.channels = 1;
  d.classes = 50;
  EXPECT_THROW(make_dataset(d), SpecError);
}

TEST(DatasetJson, RoundTrip) {
  DatasetDescriptor d = tiny_data();
  d.pixel_noise = 0.5;
  EXPECT_EQ(dataset_descriptor_from_json(to_json(d)), d);
}

ModelSpec tiny_spec() { return build_desk_sinet(0.25, 3, 32); }

TEST(Train, RejectsClassMismatch) {
  TrainConfig c;
  c.epochs = 1;
  const Dataset data = make_dataset(tiny_data());
  EXPECT_THROW(train(build_desk_sinet(0.25, 4, 32), data, c), SpecError);
}

TEST(Train, FirstEpochLowersLossForSeveralSeeds) {
  const Dataset data = make_dataset(tiny_data());
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TrainConfig c;
    c.epochs = 1;
    c.batch_size = 8;
    c.lr0 = 0.005;
    c.seed = seed;
    const History h = train(tiny_spec(), data, c);
    ASSERT_EQ(h.epochs.size(), 1u);
    EXPECT_LT(h.epochs[0].loss, h.initial_loss) << seed;
    EXPECT_TRUE(std::isfinite(h.epochs[0].train_loss));
    EXPECT_DOUBLE_EQ(h.epochs[0].lr, 0.005);
  }
}

TEST(Train, IsDeterministic) {
  const Dataset data = make_dataset(tiny_data());
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 8;
  const History a = train(tiny_spec(), data, c);
  const History b = train(tiny_spec(), data, c);
  EXPECT_EQ(a, b);
  EXPECT_EQ(history_csv(a), history_csv(b));
  c.seed = 2;
  EXPECT_NE(train(tiny_spec(), data, c), a);
}

TEST(History, JsonAndCsv) {
  History h;
  h.initial_loss = 1.1;
  h.initial_accuracy = 0.3;
  h.epochs.push_back({1, 0.045, 0.9, 0.5, 1.0});
  h.epochs.push_back({2, 0.25, 0.75, 0.5, 0.8});
  EXPECT_EQ(history_from_json(to_json(h)), h);
  const std::string csv = history_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,lr,loss,accuracy");
  EXPECT_NE(csv.find("\n2,0.25,0.75,0.5\n"), std::string::npos);
}

TEST(Ablation, CostsFollowToggles) {
  DatasetDescriptor d = tiny_data();
  d.samples_per_class = 2;
  TrainConfig c;
  c.epochs = 0;
  const auto rows = run_ablation(tiny_spec(), make_dataset(d), c);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].variant, "A");
  EXPECT_EQ(rows[1].cost, rows[2].cost);
  EXPECT_GT(rows[0].cost.madds, rows[1].cost.madds);
  EXPECT_LT(rows[3].cost.params, rows[2].cost.params);
  const std::string t = format_ablation(rows);
  EXPECT_NE(t.find("EX"), std::string::npos);
  EXPECT_NE(t.find("JDA"), std::string::npos);
  EXPECT_EQ(to_json(rows).size(), 4u);
}

}  // namespace
}  // namespace sinet
