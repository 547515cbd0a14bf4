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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sinet/analyzer.hpp"
#include "sinet/arch.hpp"
#include "sinet/autograd.hpp"

namespace sinet {

enum class ScheduleKind { Exponential, Step };

struct Schedule {
  ScheduleKind kind = ScheduleKind::Exponential;
  double rate = 0.98;   // exponential: lr0 * rate^epoch
  double factor = 10.0; // step: lr0 / factor^(epoch / every)
  int every = 80;
};

struct TrainConfig {
  double lr0 = 0.045;
  double momentum = 0.9;
  int batch_size = 16;
  int epochs = 30;
  Schedule schedule;
  std::uint64_t seed = 1;

  void validate() const;
};

double lr_at(int epoch, const TrainConfig& cfg);

/// Classical momentum: v = momentum * v + grad; p -= lr * v.
void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double lr, double momentum);

class SgdMomentum {
 public:
  SgdMomentum(std::vector<Parameter*> params, double momentum);
  void step(double lr);
  void zero_grad();

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> velocity_;
  double momentum_;
};

/// Seeded synthetic classification data. "gaussian_blobs": each class owns
/// a per-channel center drawn from N(0, separation^2), redrawn until all
/// centers are pairwise >= separation apart; a sample shifts all pixels of a
/// channel by center + N(0, cluster_std^2) and adds per-pixel
/// N(0, pixel_noise^2).
struct DatasetDescriptor {
  std::string kind = "gaussian_blobs";
  int classes = 3;
  int samples_per_class = 40;
  int channels = 3;
  int size = 64;
  double separation = 2.0;
  double cluster_std = 0.35;
  double pixel_noise = 1.0;
  std::uint64_t seed = 7;

  friend bool operator==(const DatasetDescriptor&,
                         const DatasetDescriptor&) = default;
};

struct Dataset {
  DatasetDescriptor descriptor;
  Tensor samples;  // N x C x H x W
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

Dataset make_dataset(const DatasetDescriptor& desc);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;        // full-set loss after the epoch (eval mode)
  double accuracy = 0.0;    // full-set accuracy after the epoch (eval mode)
  double train_loss = 0.0;  // mean minibatch loss during the epoch

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct History {
  double initial_loss = 0.0;
  double initial_accuracy = 0.0;
  std::vector<EpochRecord> epochs;

  friend bool operator==(const History&, const History&) = default;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

class Network;
Evaluation evaluate(Network& net, const Dataset& data, int batch_size);

History train(const ModelSpec& spec, const Dataset& data,
              const TrainConfig& cfg);

struct AblationRow {
  std::string variant;
  int groups = 1;
  bool exchange = false;
  bool attention = false;
  Cost cost;
  double accuracy = 0.0;
};

/// A (G=1), B (G=2, no EX), C (G=2, EX) with the attention head, plus C
/// with the general classification layer.
std::vector<AblationRow> run_ablation(const ModelSpec& base,
                                      const Dataset& data,
                                      const TrainConfig& cfg);
std::string format_ablation(const std::vector<AblationRow>& rows);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetDescriptor& d);
DatasetDescriptor dataset_descriptor_from_json(const nlohmann::json& j);
nlohmann::json to_json(const History& h);
History history_from_json(const nlohmann::json& j);
std::string history_csv(const History& h);
nlohmann::json to_json(const std::vector<AblationRow>& rows);

}  // namespace sinet
