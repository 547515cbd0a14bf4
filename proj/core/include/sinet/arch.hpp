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

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sinet/blocks.hpp"
#include "sinet/decision.hpp"

namespace sinet {

struct StemSpec {
  int in_channels = 3;
  int channels = 21;
  int kernel = 3;
  int stride = 2;

  friend bool operator==(const StemSpec&, const StemSpec&) = default;
};

/// One row of the architecture table after width resolution: `repeat`
/// identical SI Units with `channels` outputs; the first unit has `stride`.
struct BlockRow {
  int channels = 0;
  int kernel = 3;
  int stride = 2;
  int repeat = 4;
  int expansion = 6;

  friend bool operator==(const BlockRow&, const BlockRow&) = default;
};

struct ModelSpec {
  double width = 1.0;
  int classes = 1000;
  int input = 224;
  int groups = 2;
  bool exchange = true;
  bool attention = true;
  StemSpec stem;
  std::vector<BlockRow> blocks;
  HeadConfig head;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct Toggles {
  int groups = 2;
  bool exchange = true;
  bool attention = true;
};

/// round(base * w) (half away from zero), then up to a multiple of
/// `multiple`, never below 2.
int resolve_channels(int base, double w, int multiple = 2);

/// Base channels, kernels and expansions of the five SINet blocks.
struct TableRow {
  int base_channels;
  int kernel;
  int stride;
  int repeat;
  int expansion;
};
const std::vector<TableRow>& sinet_table();

/// Full SINet: 3x3/2 stem with 21 filters, five SI Blocks, attention head.
ModelSpec build_sinet(double width, int classes, int input_hw);

/// Desk-scale preset: blocks whose input is already <= min_hw run with
/// stride 1. The resulting strides are stored in the returned spec.
ModelSpec build_desk_sinet(double width, int classes, int input_hw,
                           int min_hw = 4, int head_hidden = 64);

/// Ablation variant: A = {1, no EX}, B = {2, no EX}, C = {2, EX}, with the
/// attention head on or off.
ModelSpec build_variant(const ModelSpec& base, const Toggles& toggles);

void validate(const ModelSpec& spec);

struct BlockPlan {
  std::string name;
  int in_channels = 0;
  int out_channels = 0;
  std::size_t in_hw = 0;
  std::size_t out_hw = 0;
  std::vector<SIUnitConfig> units;
  std::vector<std::size_t> unit_out_hw;
};

/// Concrete unit-by-unit realization shared by the executor and analyzer.
struct NetworkPlan {
  std::size_t stem_out_hw = 0;
  std::vector<BlockPlan> blocks;
  std::vector<int> block_widths;
  int decision_width = 0;  // concat width (attention) or last block width
};

NetworkPlan plan(const ModelSpec& spec);

struct TraceRow {
  std::string name;
  std::string kind;
  std::vector<std::size_t> in;   // C, H, W (H, W omitted for vectors)
  std::vector<std::size_t> out;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

std::vector<TraceRow> trace(const ModelSpec& spec);
std::string trace_table(const std::vector<TraceRow>& rows);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<TraceRow>& rows);
std::vector<TraceRow> trace_from_json(const nlohmann::json& j);

}  // namespace sinet
