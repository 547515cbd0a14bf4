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

#include "sinet/arch.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "sinet/errors.hpp"
#include "sinet/ops.hpp"

namespace sinet {

using nlohmann::json;

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

std::string dims_str(const std::vector<std::size_t>& d) {
  std::ostringstream os;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (i) os << 'x';
    os << d[i];
  }
  return os.str();
}

}  // namespace

int resolve_channels(int base, double w, int multiple) {
  if (!(w > 0.0)) throw SpecError("width multiplier must be > 0");
  if (base < 1) throw SpecError("base channels must be >= 1");
  if (multiple < 1) throw SpecError("channel multiple must be >= 1");
  // std::round rounds half away from zero.
  long v = std::lround(static_cast<double>(base) * w);
  v = std::max(v, 1L);
  v = (v + multiple - 1) / multiple * multiple;
  return static_cast<int>(std::max(v, 2L));
}

const std::vector<TableRow>& sinet_table() {
  // Block 5 keeps the 7x7 resolution that feeds the 7x7 decision pool.
  static const std::vector<TableRow> rows = {
      {24, 3, 2, 4, 3}, {40, 5, 2, 4, 3}, {80, 5, 2, 4, 6},
      {96, 3, 2, 4, 6}, {192, 5, 1, 4, 6},
  };
  return rows;
}

ModelSpec build_sinet(double width, int classes, int input_hw) {
  if (classes < 1) throw SpecError("classes must be >= 1");
  if (input_hw < 32 || input_hw % 32 != 0) {
    throw SpecError("SINet input size must be a positive multiple of 32, got " +
                    std::to_string(input_hw));
  }
  ModelSpec spec;
  spec.width = width;
  spec.classes = classes;
  spec.input = input_hw;
  for (const auto& r : sinet_table()) {
    spec.blocks.push_back({resolve_channels(r.base_channels, width, 2),
                           r.kernel, r.stride, r.repeat, r.expansion});
  }
  validate(spec);
  return spec;
}

ModelSpec build_desk_sinet(double width, int classes, int input_hw, int min_hw,
                           int head_hidden) {
  if (classes < 1) throw SpecError("classes must be >= 1");
  ModelSpec spec;
  spec.width = width;
  spec.classes = classes;
  spec.input = input_hw;
  spec.head.hidden = head_hidden;
  std::size_t hw = conv_out_extent(sz(input_hw), spec.stem.kernel,
                                   spec.stem.stride, (spec.stem.kernel - 1) / 2);
  for (const auto& r : sinet_table()) {
    int stride = r.stride;
    if (hw <= sz(min_hw)) stride = 1;
    spec.blocks.push_back({resolve_channels(r.base_channels, width, 2),
                           r.kernel, stride, r.repeat, r.expansion});
    hw = conv_out_extent(hw, r.kernel, stride, (r.kernel - 1) / 2);
  }
  validate(spec);
  return spec;
}

ModelSpec build_variant(const ModelSpec& base, const Toggles& toggles) {
  if (toggles.groups < 1) throw SpecError("groups must be >= 1");
  if (toggles.exchange && toggles.groups < 2) {
    throw SpecError("exchange shortcut requires groups >= 2");
  }
  ModelSpec v = base;
  v.groups = toggles.groups;
  v.exchange = toggles.exchange;
  v.attention = toggles.attention;
  validate(v);
  return v;
}

void validate(const ModelSpec& spec) {
  if (!(spec.width > 0.0)) throw SpecError("width must be > 0");
  if (spec.classes < 1) throw SpecError("classes must be >= 1");
  if (spec.input < 1) throw SpecError("input size must be >= 1");
  if (spec.groups < 1) throw SpecError("groups must be >= 1");
  if (spec.exchange && spec.groups < 2) {
    throw SpecError("exchange shortcut requires groups >= 2");
  }
  if (spec.blocks.empty()) throw SpecError("model needs at least one block");
  const StemSpec& st = spec.stem;
  if (st.in_channels < 1 || st.channels < 1 || st.kernel < 1 ||
      st.kernel % 2 == 0 || st.stride < 1) {
    throw SpecError("invalid stem (odd kernel, positive widths and stride)");
  }
  long total_stride = st.stride;
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const BlockRow& b = spec.blocks[i];
    const std::string name = "block" + std::to_string(i + 1);
    if (b.channels < 1 || b.channels % spec.groups != 0) {
      throw SpecError(name + " channels " + std::to_string(b.channels) +
                      " not divisible by groups " +
                      std::to_string(spec.groups));
    }
    if (b.kernel < 1 || b.kernel % 2 == 0) {
      throw SpecError(name + " kernel must be odd");
    }
    if (b.stride != 1 && b.stride != 2) {
      throw SpecError(name + " stride must be 1 or 2");
    }
    if (b.repeat < 1) throw SpecError(name + " repeat must be >= 1");
    if (b.expansion < 1) throw SpecError(name + " expansion must be >= 1");
    total_stride *= b.stride;
  }
  if (spec.input % total_stride != 0) {
    throw SpecError("input size " + std::to_string(spec.input) +
                    " not divisible by total stride " +
                    std::to_string(total_stride));
  }
  if (spec.head.hidden < 0) throw SpecError("head hidden width must be >= 0");
  if (spec.head.attention_min_hidden < 1 || spec.head.attention_divisor < 1) {
    throw SpecError("attention hidden sizing must be positive");
  }
}

NetworkPlan plan(const ModelSpec& spec) {
  validate(spec);
  NetworkPlan p;
  std::size_t hw = conv_out_extent(sz(spec.input), spec.stem.kernel,
                                   spec.stem.stride, (spec.stem.kernel - 1) / 2);
  p.stem_out_hw = hw;
  int channels = spec.stem.channels;
  for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
    const BlockRow& row = spec.blocks[i];
    BlockPlan b;
    b.name = "block" + std::to_string(i + 1);
    b.in_channels = channels;
    b.out_channels = row.channels;
    b.in_hw = hw;
    b.units = block_units(channels, row.channels, row.kernel, row.stride,
                          row.repeat, row.expansion, spec.groups,
                          spec.exchange);
    for (const auto& u : b.units) {
      hw = conv_out_extent(hw, u.branch.kernel, u.branch.stride,
                           (u.branch.kernel - 1) / 2);
      b.unit_out_hw.push_back(hw);
    }
    b.out_hw = hw;
    channels = row.channels;
    p.block_widths.push_back(row.channels);
    p.blocks.push_back(std::move(b));
  }
  p.decision_width = 0;
  if (spec.attention) {
    for (int w : p.block_widths) p.decision_width += w;
  } else {
    p.decision_width = p.block_widths.back();
  }
  return p;
}

std::vector<TraceRow> trace(const ModelSpec& spec) {
  const NetworkPlan p = plan(spec);
  std::vector<TraceRow> rows;
  const std::size_t in = sz(spec.input);
  rows.push_back({"stem", "conv", {sz(spec.stem.in_channels), in, in},
                  {sz(spec.stem.channels), p.stem_out_hw, p.stem_out_hw}});
  for (const auto& b : p.blocks) {
    std::size_t hw = b.in_hw;
    for (std::size_t u = 0; u < b.units.size(); ++u) {
      const auto& cfg = b.units[u];
      const std::size_t out_hw = b.unit_out_hw[u];
      rows.push_back({b.name + ".unit" + std::to_string(u + 1), "si_unit",
                      {sz(cfg.in_channels()), hw, hw},
                      {sz(cfg.out_channels()), out_hw, out_hw}});
      hw = out_hw;
    }
  }
  const std::size_t first = spec.attention ? 0 : p.blocks.size() - 1;
  for (std::size_t i = first; i < p.blocks.size(); ++i) {
    const auto& b = p.blocks[i];
    rows.push_back({"head.pool" + std::to_string(i + 1), "avg_pool",
                    {sz(b.out_channels), b.out_hw, b.out_hw},
                    {sz(b.out_channels)}});
  }
  std::size_t width = sz(p.decision_width);
  if (spec.attention) {
    rows.push_back({"head.concat", "concat", {width}, {width}});
  }
  if (spec.head.hidden > 0) {
    rows.push_back({"head.fc", "fc", {width}, {sz(spec.head.hidden)}});
    width = sz(spec.head.hidden);
  }
  rows.push_back({"head.classifier", "fc", {width}, {sz(spec.classes)}});
  return rows;
}

std::string trace_table(const std::vector<TraceRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "layer" << std::setw(10) << "kind"
     << std::setw(16) << "input" << "output\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(18) << r.name << std::setw(10) << r.kind
       << std::setw(16) << dims_str(r.in) << dims_str(r.out) << '\n';
  }
  return os.str();
}

json to_json(const ModelSpec& spec) {
  json blocks = json::array();
  for (const auto& b : spec.blocks) {
    blocks.push_back({{"channels", b.channels},
                      {"k", b.kernel},
                      {"s", b.stride},
                      {"n", b.repeat},
                      {"t", b.expansion}});
  }
  return {
      {"width", spec.width},
      {"classes", spec.classes},
      {"input", spec.input},
      {"groups", spec.groups},
      {"exchange", spec.exchange},
      {"attention", spec.attention},
      {"blocks", blocks},
      {"stem",
       {{"in_channels", spec.stem.in_channels},
        {"channels", spec.stem.channels},
        {"k", spec.stem.kernel},
        {"s", spec.stem.stride}}},
      {"head",
       {{"hidden", spec.head.hidden},
        {"attention_min_hidden", spec.head.attention_min_hidden},
        {"attention_divisor", spec.head.attention_divisor},
        {"classifier_bias", spec.head.classifier_bias}}},
  };
}

ModelSpec model_spec_from_json(const json& j) {
  try {
    ModelSpec s;
    s.width = j.at("width").get<double>();
    s.classes = j.at("classes").get<int>();
    s.input = j.at("input").get<int>();
    s.groups = j.at("groups").get<int>();
    s.exchange = j.at("exchange").get<bool>();
    s.attention = j.at("attention").get<bool>();
    for (const auto& b : j.at("blocks")) {
      s.blocks.push_back({b.at("channels").get<int>(), b.at("k").get<int>(),
                          b.at("s").get<int>(), b.at("n").get<int>(),
                          b.at("t").get<int>()});
    }
    if (j.contains("stem")) {
      const auto& st = j.at("stem");
      s.stem.in_channels = st.value("in_channels", s.stem.in_channels);
      s.stem.channels = st.value("channels", s.stem.channels);
      s.stem.kernel = st.value("k", s.stem.kernel);
      s.stem.stride = st.value("s", s.stem.stride);
    }
    if (j.contains("head")) {
      const auto& h = j.at("head");
      s.head.hidden = h.value("hidden", s.head.hidden);
      s.head.attention_min_hidden =
          h.value("attention_min_hidden", s.head.attention_min_hidden);
      s.head.attention_divisor =
          h.value("attention_divisor", s.head.attention_divisor);
      s.head.classifier_bias = h.value("classifier_bias", s.head.classifier_bias);
    }
    validate(s);
    return s;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed model spec: ") + e.what());
  }
}

json to_json(const std::vector<TraceRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back(
        {{"name", r.name}, {"kind", r.kind}, {"in", r.in}, {"out", r.out}});
  }
  return out;
}

std::vector<TraceRow> trace_from_json(const json& j) {
  try {
    std::vector<TraceRow> rows;
    for (const auto& r : j) {
      rows.push_back({r.at("name").get<std::string>(),
                      r.at("kind").get<std::string>(),
                      r.at("in").get<std::vector<std::size_t>>(),
                      r.at("out").get<std::vector<std::size_t>>()});
    }
    return rows;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed trace: ") + e.what());
  }
}

}  // namespace sinet
