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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sinet/arch.hpp"

namespace sinet {

struct Cost {
  std::uint64_t params = 0;
  std::uint64_t madds = 0;

  Cost& operator+=(const Cost& o) {
    params += o.params;
    madds += o.madds;
    return *this;
  }
  friend bool operator==(const Cost&, const Cost&) = default;
};

/// params = k*k*(c/g)*m (+m with bias); madds = h_out*w_out*k*k*(c/g)*m.
Cost conv_cost(std::uint64_t c, std::uint64_t h, std::uint64_t w,
               std::uint64_t k, std::uint64_t m, std::uint64_t g,
               std::uint64_t stride, std::uint64_t pad, bool bias = false);
Cost fc_cost(std::uint64_t d_in, std::uint64_t d_out, bool bias = true);
/// gamma and beta per channel; normalization itself is not a multiply-add.
Cost bn_cost(std::uint64_t channels);
/// add, concat, split and the exchange shortcut.
Cost elementwise_cost();

/// How the counts were produced; recorded in every report.
struct CostConventions {
  bool bn_params_counted = true;
  bool bn_madds_counted = false;
  bool conv_bias = false;
  bool fc_bias = true;
  bool pooling_madds_counted = false;
  bool elementwise_madds_counted = false;

  friend bool operator==(const CostConventions&,
                         const CostConventions&) = default;
};

struct LayerCost {
  std::string name;
  std::string kind;     // conv, bn, fc
  std::string section;  // stem, block1..blockN, head
  std::uint64_t groups = 1;
  Cost cost;

  friend bool operator==(const LayerCost&, const LayerCost&) = default;
};

struct SectionCost {
  std::string name;
  Cost cost;

  friend bool operator==(const SectionCost&, const SectionCost&) = default;
};

struct CostReport {
  CostConventions conventions;
  std::vector<LayerCost> layers;
  std::vector<SectionCost> sections;
  Cost total;

  const LayerCost* find(const std::string& name) const;
  const SectionCost* section(const std::string& name) const;
  friend bool operator==(const CostReport&, const CostReport&) = default;
};

/// Walks the spec's plan layer by layer. Exchange, concat and split add no
/// records since they cost nothing.
CostReport analyze(const ModelSpec& spec);

struct LayerDelta {
  std::string name;
  std::string status;  // changed, only_a, only_b
  std::int64_t params = 0;
  std::int64_t madds = 0;
};

/// b - a, per layer (matched by name) and in total.
struct CostDiff {
  std::vector<LayerDelta> layers;
  std::int64_t params = 0;
  std::int64_t madds = 0;

  bool zero() const { return layers.empty() && params == 0 && madds == 0; }
};

CostDiff diff(const CostReport& a, const CostReport& b);

nlohmann::json to_json(const CostReport& report);
CostReport cost_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CostDiff& d);
std::string format_table(const CostReport& report);

}  // namespace sinet
