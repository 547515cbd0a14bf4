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

#include "sinet/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sinet/analyzer.hpp"
#include "sinet/arch.hpp"
#include "sinet/gradcheck.hpp"
#include "sinet/train.hpp"

namespace sinet::cli {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << text;
}

// SINET_SEED replaces seeds taken from defaults or config files; an
// explicit --seed flag still wins.
std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("SINET_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw UsageError(std::string("SINET_SEED must be an unsigned integer, got '") +
                     v + "'");
  }
}

std::uint64_t resolve_seed(std::uint64_t from_config,
                           const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (auto e = env_seed()) return *e;
  return from_config;
}

struct SpecSource {
  std::string spec_path;
  double width = 1.0;
  int classes = 1000;
  int input = 224;

  ModelSpec load() const {
    if (!spec_path.empty()) return model_spec_from_json(read_json(spec_path));
    return build_sinet(width, classes, input);
  }
};

void add_spec_flags(CLI::App* cmd, SpecSource& src) {
  auto* spec = cmd->add_option("--spec", src.spec_path, "Model spec JSON file");
  cmd->add_option("--width", src.width, "Width multiplier w")->excludes(spec);
  cmd->add_option("--classes", src.classes, "Number of classes")->excludes(spec);
  cmd->add_option("--input", src.input, "Square input size")->excludes(spec);
}

int cmd_analyze(const SpecSource& src, const std::string& format,
                std::ostream& out) {
  const CostReport report = analyze(src.load());
  if (format == "json") {
    out << to_json(report).dump(2) << '\n';
  } else {
    out << format_table(report);
  }
  return kExitOk;
}

int cmd_trace(const SpecSource& src, const std::string& format,
              std::ostream& out) {
  const auto rows = trace(src.load());
  if (format == "json") {
    out << to_json(rows).dump(2) << '\n';
  } else {
    out << trace_table(rows);
  }
  return kExitOk;
}

int cmd_gradcheck(const std::optional<std::uint64_t>& seed_flag, double tol,
                  std::ostream& out) {
  const std::uint64_t seed = resolve_seed(1, seed_flag);
  const auto results = run_gradcheck_suite(seed, tol);
  bool all = true;
  out << "seed " << seed << ", tolerance " << tol << '\n';
  for (const auto& r : results) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(24)
        << r.name << " max_rel_err=" << std::scientific << std::setprecision(3)
        << r.max_rel_error << std::defaultfloat << " entries=" << r.entries
        << '\n';
  }
  out << (all ? "all checks passed" : "some checks failed") << '\n';
  return all ? kExitOk : kExitCheckFailed;
}

struct TrainInputs {
  std::string spec_path;
  std::string data_path;
  std::string config_path;
  std::optional<std::uint64_t> seed;

  ModelSpec spec() const { return model_spec_from_json(read_json(spec_path)); }
  Dataset data() const {
    DatasetDescriptor d = dataset_descriptor_from_json(read_json(data_path));
    return make_dataset(d);
  }
  TrainConfig config() const {
    TrainConfig c = train_config_from_json(read_json(config_path));
    c.seed = resolve_seed(c.seed, seed);
    return c;
  }
};

void add_train_flags(CLI::App* cmd, TrainInputs& in) {
  cmd->add_option("--spec", in.spec_path, "Model spec JSON file")->required();
  cmd->add_option("--data", in.data_path, "Dataset descriptor JSON file")
      ->required();
  cmd->add_option("--config", in.config_path, "Training config JSON file")
      ->required();
  cmd->add_option("--seed", in.seed, "Training seed (overrides config)");
}

int cmd_train(const TrainInputs& in, const std::string& out_dir,
              std::ostream& out) {
  const ModelSpec spec = in.spec();
  const Dataset data = in.data();
  const TrainConfig cfg = in.config();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UsageError("cannot create '" + out_dir + "': " + ec.message());
  const History h = train(spec, data, cfg);
  const std::filesystem::path dir(out_dir);
  write_file(dir / "history.csv", history_csv(h));
  write_file(dir / "history.json", to_json(h).dump(2) + "\n");
  out << history_csv(h);
  return kExitOk;
}

int cmd_ablate(const TrainInputs& in, const std::string& format,
               std::ostream& out) {
  const auto rows = run_ablation(in.spec(), in.data(), in.config());
  if (format == "json") {
    out << to_json(rows).dump(2) << '\n';
  } else {
    out << format_ablation(rows);
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"SINet cost analysis, gradient checks and desk-scale training",
               "sinet"};
  app.require_subcommand(1, 1);

  SpecSource analyze_src, trace_src;
  std::string analyze_format = "table", trace_format = "table",
              ablate_format = "table";
  auto* analyze_cmd = app.add_subcommand("analyze", "Parameter and multiply-add report");
  add_spec_flags(analyze_cmd, analyze_src);
  analyze_cmd->add_option("--format", analyze_format)
      ->check(CLI::IsMember({"table", "json"}));

  auto* trace_cmd = app.add_subcommand("trace", "Per-layer shape trace");
  add_spec_flags(trace_cmd, trace_src);
  trace_cmd->add_option("--format", trace_format)
      ->check(CLI::IsMember({"table", "json"}));

  std::optional<std::uint64_t> gc_seed;
  double gc_tol = 1e-4;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gc_cmd->add_option("--seed", gc_seed, "Input seed (default 1)");
  gc_cmd->add_option("--tol", gc_tol, "Max relative error")
      ->check(CLI::PositiveNumber);

  TrainInputs train_in, ablate_in;
  std::string out_dir;
  auto* train_cmd = app.add_subcommand("train", "Train and write history.csv/json");
  add_train_flags(train_cmd, train_in);
  train_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "Group/exchange/attention ablation");
  add_train_flags(ablate_cmd, ablate_in);
  ablate_cmd->add_option("--format", ablate_format)
      ->check(CLI::IsMember({"table", "json"}));

  std::vector<std::string> argv_store{"sinet"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (analyze_cmd->parsed()) return cmd_analyze(analyze_src, analyze_format, out);
    if (trace_cmd->parsed()) return cmd_trace(trace_src, trace_format, out);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_seed, gc_tol, out);
    if (train_cmd->parsed()) return cmd_train(train_in, out_dir, out);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_in, ablate_format, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  err << "error: no subcommand\n";
  return kExitUsage;
}

}  // namespace sinet::cli
