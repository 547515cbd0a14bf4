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

#include "sinet/analyzer.hpp"

#include <iomanip>
#include <map>
#include <sstream>

#include "sinet/errors.hpp"

namespace sinet {

using nlohmann::json;

namespace {

using u64 = std::uint64_t;

u64 out_extent(u64 in, u64 k, u64 stride, u64 pad) {
  if (stride == 0 || in + 2 * pad < k) {
    throw DimensionError("convolution output extent < 1");
  }
  return (in + 2 * pad - k) / stride + 1;
}

class ReportBuilder {
 public:
  void section(std::string name) {
    current_ = std::move(name);
    report_.sections.push_back({current_, {}});
  }

  void add(std::string name, std::string kind, u64 groups, Cost cost) {
    report_.layers.push_back(
        {std::move(name), std::move(kind), current_, groups, cost});
    report_.sections.back().cost += cost;
    report_.total += cost;
  }

  CostReport take() { return std::move(report_); }

 private:
  CostReport report_;
  std::string current_;
};

void add_unit(ReportBuilder& rb, const std::string& prefix,
              const SIUnitConfig& u, u64 hw) {
  const u64 g = static_cast<u64>(u.groups);
  const u64 in = static_cast<u64>(u.in_channels());
  const u64 hid = static_cast<u64>(u.branch.hidden()) * g;
  const u64 cur = static_cast<u64>(u.branch_out_channels());
  const u64 k = static_cast<u64>(u.branch.kernel);
  const u64 s = static_cast<u64>(u.branch.stride);
  const u64 out_hw = out_extent(hw, k, s, (k - 1) / 2);

  rb.add(prefix + ".expand", "conv", g, conv_cost(in, hw, hw, 1, hid, g, 1, 0));
  rb.add(prefix + ".expand_bn", "bn", 1, bn_cost(hid));
  rb.add(prefix + ".depthwise", "conv", hid,
         conv_cost(hid, hw, hw, k, hid, hid, s, (k - 1) / 2));
  rb.add(prefix + ".depthwise_bn", "bn", 1, bn_cost(hid));
  rb.add(prefix + ".project", "conv", g,
         conv_cost(hid, out_hw, out_hw, 1, cur, g, 1, 0));
  rb.add(prefix + ".project_bn", "bn", 1, bn_cost(cur));
  if (u.funnel) {
    const u64 out = static_cast<u64>(u.funnel_out_channels);
    rb.add(prefix + ".funnel", "conv", g,
           conv_cost(in + cur, out_hw, out_hw, 1, out, g, 1, 0));
    rb.add(prefix + ".funnel_bn", "bn", 1, bn_cost(out));
  }
}

std::map<std::string, Cost> by_name(const CostReport& r) {
  std::map<std::string, Cost> m;
  for (const auto& l : r.layers) m[l.name] = l.cost;
  return m;
}

std::int64_t sdiff(u64 b, u64 a) {
  return static_cast<std::int64_t>(b) - static_cast<std::int64_t>(a);
}

}  // namespace

Cost conv_cost(u64 c, u64 h, u64 w, u64 k, u64 m, u64 g, u64 stride, u64 pad,
               bool bias) {
  if (g == 0 || c % g != 0 || m % g != 0) {
    throw GroupError("conv_cost: channels " + std::to_string(c) + " -> " +
                     std::to_string(m) + " not divisible by groups " +
                     std::to_string(g));
  }
  const u64 ho = out_extent(h, k, stride, pad);
  const u64 wo = out_extent(w, k, stride, pad);
  const u64 weights = k * k * (c / g) * m;
  return {weights + (bias ? m : 0), ho * wo * weights};
}

Cost fc_cost(u64 d_in, u64 d_out, bool bias) {
  return {d_in * d_out + (bias ? d_out : 0), d_in * d_out};
}

Cost bn_cost(u64 channels) { return {2 * channels, 0}; }

Cost elementwise_cost() { return {0, 0}; }

const LayerCost* CostReport::find(const std::string& name) const {
  for (const auto& l : layers) {
    if (l.name == name) return &l;
  }
  return nullptr;
}

const SectionCost* CostReport::section(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

CostReport analyze(const ModelSpec& spec) {
  const NetworkPlan p = plan(spec);
  ReportBuilder rb;

  const StemSpec& st = spec.stem;
  const u64 in = static_cast<u64>(spec.input);
  rb.section("stem");
  rb.add("stem.conv", "conv", 1,
         conv_cost(static_cast<u64>(st.in_channels), in, in,
                   static_cast<u64>(st.kernel), static_cast<u64>(st.channels),
                   1, static_cast<u64>(st.stride),
                   static_cast<u64>((st.kernel - 1) / 2)));
  rb.add("stem.bn", "bn", 1, bn_cost(static_cast<u64>(st.channels)));

  for (const auto& b : p.blocks) {
    rb.section(b.name);
    u64 hw = b.in_hw;
    for (std::size_t u = 0; u < b.units.size(); ++u) {
      add_unit(rb, b.name + ".unit" + std::to_string(u + 1), b.units[u], hw);
      hw = b.unit_out_hw[u];
    }
  }

  rb.section("head");
  if (spec.attention) {
    for (std::size_t k = 0; k < p.block_widths.size(); ++k) {
      const u64 c = static_cast<u64>(p.block_widths[k]);
      const u64 d =
          static_cast<u64>(attention_hidden_width(p.block_widths[k], spec.head));
      const std::string name = "head.attention" + std::to_string(k + 1);
      rb.add(name + ".w1", "fc", 1, fc_cost(c, d, false));
      rb.add(name + ".w2", "fc", 1, fc_cost(d, 1, false));
    }
  }
  u64 width = static_cast<u64>(p.decision_width);
  if (spec.head.hidden > 0) {
    const u64 hidden = static_cast<u64>(spec.head.hidden);
    rb.add("head.fc", "fc", 1, fc_cost(width, hidden, true));
    width = hidden;
  }
  rb.add("head.classifier", "fc", 1,
         fc_cost(width, static_cast<u64>(spec.classes),
                 spec.head.classifier_bias));
  return rb.take();
}

CostDiff diff(const CostReport& a, const CostReport& b) {
  CostDiff d;
  const auto bm = by_name(b);
  const auto am = by_name(a);
  for (const auto& l : a.layers) {
    auto it = bm.find(l.name);
    if (it == bm.end()) {
      d.layers.push_back({l.name, "only_a", -static_cast<std::int64_t>(l.cost.params),
                          -static_cast<std::int64_t>(l.cost.madds)});
    } else if (!(it->second == l.cost)) {
      d.layers.push_back({l.name, "changed", sdiff(it->second.params, l.cost.params),
                          sdiff(it->second.madds, l.cost.madds)});
    }
  }
  for (const auto& l : b.layers) {
    if (!am.contains(l.name)) {
      d.layers.push_back({l.name, "only_b", static_cast<std::int64_t>(l.cost.params),
                          static_cast<std::int64_t>(l.cost.madds)});
    }
  }
  d.params = sdiff(b.total.params, a.total.params);
  d.madds = sdiff(b.total.madds, a.total.madds);
  return d;
}

json to_json(const CostReport& r) {
  const auto& c = r.conventions;
  json layers = json::array();
  for (const auto& l : r.layers) {
    layers.push_back({{"name", l.name},
                      {"kind", l.kind},
                      {"section", l.section},
                      {"groups", l.groups},
                      {"params", l.cost.params},
                      {"madds", l.cost.madds}});
  }
  json sections = json::array();
  for (const auto& s : r.sections) {
    sections.push_back(
        {{"name", s.name}, {"params", s.cost.params}, {"madds", s.cost.madds}});
  }
  return {
      {"conventions",
       {{"unit", "multiply-adds"},
        {"bn_params_counted", c.bn_params_counted},
        {"bn_madds_counted", c.bn_madds_counted},
        {"conv_bias", c.conv_bias},
        {"fc_bias", c.fc_bias},
        {"pooling_madds_counted", c.pooling_madds_counted},
        {"elementwise_madds_counted", c.elementwise_madds_counted}}},
      {"layers", layers},
      {"sections", sections},
      {"total", {{"params", r.total.params}, {"madds", r.total.madds}}},
  };
}

CostReport cost_report_from_json(const json& j) {
  try {
    CostReport r;
    const auto& c = j.at("conventions");
    r.conventions.bn_params_counted = c.at("bn_params_counted").get<bool>();
    r.conventions.bn_madds_counted = c.at("bn_madds_counted").get<bool>();
    r.conventions.conv_bias = c.at("conv_bias").get<bool>();
    r.conventions.fc_bias = c.at("fc_bias").get<bool>();
    r.conventions.pooling_madds_counted =
        c.at("pooling_madds_counted").get<bool>();
    r.conventions.elementwise_madds_counted =
        c.at("elementwise_madds_counted").get<bool>();
    for (const auto& l : j.at("layers")) {
      r.layers.push_back({l.at("name").get<std::string>(),
                          l.at("kind").get<std::string>(),
                          l.at("section").get<std::string>(),
                          l.at("groups").get<u64>(),
                          {l.at("params").get<u64>(), l.at("madds").get<u64>()}});
    }
    for (const auto& s : j.at("sections")) {
      r.sections.push_back({s.at("name").get<std::string>(),
                            {s.at("params").get<u64>(), s.at("madds").get<u64>()}});
    }
    r.total = {j.at("total").at("params").get<u64>(),
               j.at("total").at("madds").get<u64>()};
    return r;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed cost report: ") + e.what());
  }
}

json to_json(const CostDiff& d) {
  json layers = json::array();
  for (const auto& l : d.layers) {
    layers.push_back({{"name", l.name},
                      {"status", l.status},
                      {"params", l.params},
                      {"madds", l.madds}});
  }
  return {{"layers", layers}, {"params", d.params}, {"madds", d.madds}};
}

std::string format_table(const CostReport& r) {
  std::ostringstream os;
  auto row = [&os](const std::string& name, const std::string& kind,
                   const std::string& groups, const std::string& params,
                   const std::string& madds) {
    os << std::left << std::setw(30) << name << std::setw(6) << kind
       << std::right << std::setw(8) << groups << std::setw(14) << params
       << std::setw(16) << madds << '\n';
  };
  row("layer", "kind", "groups", "params", "madds");
  for (const auto& l : r.layers) {
    row(l.name, l.kind, std::to_string(l.groups), std::to_string(l.cost.params),
        std::to_string(l.cost.madds));
  }
  os << '\n';
  row("section", "", "", "params", "madds");
  for (const auto& s : r.sections) {
    row(s.name, "", "", std::to_string(s.cost.params),
        std::to_string(s.cost.madds));
  }
  os << '\n';
  row("total", "", "", std::to_string(r.total.params),
      std::to_string(r.total.madds));
  std::ostringstream summary;
  summary << std::fixed << std::setprecision(2)
          << static_cast<double>(r.total.params) / 1e6 << "M params, "
          << static_cast<double>(r.total.madds) / 1e6 << "M multiply-adds";
  os << summary.str() << '\n';
  const auto& c = r.conventions;
  os << "conventions: bn params " << (c.bn_params_counted ? "counted" : "not counted")
     << ", bn madds " << (c.bn_madds_counted ? "counted" : "0")
     << ", conv bias " << (c.conv_bias ? "yes" : "no")
     << ", fc bias " << (c.fc_bias ? "yes" : "no")
     << ", pooling/elementwise madds 0\n";
  return os.str();
}

}  // namespace sinet
