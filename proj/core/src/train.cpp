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

#include "sinet/train.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "sinet/errors.hpp"
#include "sinet/network.hpp"
#include "sinet/ops.hpp"
#include "sinet/rng.hpp"

namespace sinet {

using nlohmann::json;

namespace {

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

// Distinct stream for minibatch order so it does not alias weight init.
constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

Tensor gather(const Dataset& data, std::span<const std::size_t> idx) {
  const Shape& s = data.samples.shape();
  const std::size_t per = s[1] * s[2] * s[3];
  Tensor out(Shape{idx.size(), s[1], s[2], s[3]});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(data.samples.data().data() + idx[i] * per, per,
                out.data().data() + i * per);
  }
  return out;
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t k = logits.dim(1);
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (logits[row * k + j] > logits[row * k + best]) best = j;
  }
  return best;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw SpecError("lr0 must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw SpecError("momentum must lie in [0, 1)");
  }
  if (batch_size < 1) throw SpecError("batch size must be >= 1");
  if (epochs < 0) throw SpecError("epochs must be >= 0");
  if (schedule.kind == ScheduleKind::Exponential && !(schedule.rate > 0.0)) {
    throw SpecError("exponential decay rate must be > 0");
  }
  if (schedule.kind == ScheduleKind::Step &&
      (!(schedule.factor > 0.0) || schedule.every < 1)) {
    throw SpecError("step schedule needs factor > 0 and every >= 1");
  }
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw SpecError("epoch must be >= 0");
  if (cfg.schedule.kind == ScheduleKind::Exponential) {
    return cfg.lr0 * std::pow(cfg.schedule.rate, epoch);
  }
  const int drops = epoch / cfg.schedule.every;
  return cfg.lr0 / std::pow(cfg.schedule.factor, drops);
}

void sgd_step(std::span<double> params, std::span<const double> grads,
              std::span<double> velocity, double lr, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw DimensionError("sgd_step: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= lr * velocity[i];
  }
}

SgdMomentum::SgdMomentum(std::vector<Parameter*> params, double momentum)
    : params_(std::move(params)), momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (const Parameter* p : params_) velocity_.emplace_back(p->value.shape());
}

void SgdMomentum::step(double lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.grad.empty()) p.grad = Tensor::zeros(p.value.shape());
    sgd_step(p.value.data(), p.grad.data(), velocity_[i].data(), lr, momentum_);
  }
}

void SgdMomentum::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

Dataset make_dataset(const DatasetDescriptor& d) {
  if (d.kind != "gaussian_blobs") {
    throw SpecError("unknown dataset kind '" + d.kind + "'");
  }
  if (d.classes < 2 || d.samples_per_class < 1 || d.channels < 1 ||
      d.size < 1) {
    throw SpecError("dataset needs >= 2 classes and positive extents");
  }
  if (d.cluster_std < 0.0 || d.pixel_noise < 0.0 || d.separation < 0.0) {
    throw SpecError("dataset spreads must be non-negative");
  }
  Rng rng(d.seed);
  const std::size_t C = sz(d.channels), HW = sz(d.size) * sz(d.size);
  std::vector<double> centers(sz(d.classes) * C);
  // Redraw until every pair of centers is at least `separation` apart.
  bool spread = false;
  for (int attempt = 0; attempt < 10000 && !spread; ++attempt) {
    for (auto& c : centers) c = d.separation * rng.normal();
    spread = true;
    for (std::size_t a = 0; a < sz(d.classes) && spread; ++a) {
      for (std::size_t b = a + 1; b < sz(d.classes) && spread; ++b) {
        double dist2 = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          const double diff = centers[a * C + c] - centers[b * C + c];
          dist2 += diff * diff;
        }
        spread = dist2 >= d.separation * d.separation;
      }
    }
  }
  if (!spread) {
    throw SpecError("could not place class centers at the requested separation");
  }

  const std::size_t n = sz(d.classes) * sz(d.samples_per_class);
  Dataset out;
  out.descriptor = d;
  out.samples = Tensor(Shape{n, C, sz(d.size), sz(d.size)});
  out.labels.resize(n);
  std::size_t i = 0;
  // Interleave classes so any prefix is roughly balanced.
  for (int s = 0; s < d.samples_per_class; ++s) {
    for (int k = 0; k < d.classes; ++k, ++i) {
      out.labels[i] = k;
      for (std::size_t c = 0; c < C; ++c) {
        const double level =
            centers[sz(k) * C + c] + d.cluster_std * rng.normal();
        double* px = out.samples.data().data() + (i * C + c) * HW;
        for (std::size_t p = 0; p < HW; ++p) {
          px[p] = level + d.pixel_noise * rng.normal();
        }
      }
    }
  }
  return out;
}

Evaluation evaluate(Network& net, const Dataset& data, int batch_size) {
  const std::size_t n = data.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < n; start += sz(batch_size)) {
    const std::size_t end = std::min(n, start + sz(batch_size));
    std::span<const std::size_t> batch(idx.data() + start, end - start);
    Tape tape;
    const Tensor x = gather(data, batch);
    std::vector<int> y;
    for (auto j : batch) y.push_back(data.labels[j]);
    ForwardResult r = net.forward(tape, x, Mode::Eval);
    loss += softmax_cross_entropy(r.logits, y).value()[0] *
            static_cast<double>(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (argmax_row(r.logits.value(), b) == static_cast<std::size_t>(y[b])) {
        ++correct;
      }
    }
  }
  return {loss / static_cast<double>(n),
          static_cast<double>(correct) / static_cast<double>(n)};
}

History train(const ModelSpec& spec, const Dataset& data,
              const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw SpecError("training needs a non-empty dataset");
  for (int y : data.labels) {
    if (y < 0 || y >= spec.classes) {
      throw SpecError("label " + std::to_string(y) + " outside model's " +
                      std::to_string(spec.classes) + " classes");
    }
  }
  if (data.descriptor.classes != spec.classes) {
    throw SpecError("dataset has " + std::to_string(data.descriptor.classes) +
                    " classes but model predicts " +
                    std::to_string(spec.classes));
  }

  Network net(spec, cfg.seed);
  SgdMomentum opt(net.parameters(), cfg.momentum);
  Rng order_rng(cfg.seed ^ kShuffleStream);

  History h;
  const Evaluation init = evaluate(net, data, cfg.batch_size);
  h.initial_loss = init.loss;
  h.initial_accuracy = init.accuracy;

  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    order_rng.shuffle(std::span<std::size_t>(idx));
    double batch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < idx.size();
         start += sz(cfg.batch_size)) {
      const std::size_t end = std::min(idx.size(), start + sz(cfg.batch_size));
      std::span<const std::size_t> batch(idx.data() + start, end - start);
      std::vector<int> y;
      for (auto j : batch) y.push_back(data.labels[j]);
      opt.zero_grad();
      Tape tape;
      ForwardResult r = net.forward(tape, gather(data, batch), Mode::Train);
      Var loss = softmax_cross_entropy(r.logits, y);
      tape.backward(loss);
      opt.step(lr);
      batch_loss += loss.value()[0];
      ++batches;
    }
    const Evaluation ev = evaluate(net, data, cfg.batch_size);
    h.epochs.push_back({epoch + 1, lr, ev.loss, ev.accuracy,
                        batch_loss / static_cast<double>(batches)});
  }
  return h;
}

std::vector<AblationRow> run_ablation(const ModelSpec& base,
                                      const Dataset& data,
                                      const TrainConfig& cfg) {
  struct Variant {
    const char* name;
    Toggles toggles;
  };
  const Variant variants[] = {
      {"A", {1, false, true}},
      {"B", {2, false, true}},
      {"C", {2, true, true}},
      {"C-plain", {2, true, false}},
  };
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    const ModelSpec spec = build_variant(base, v.toggles);
    const History h = train(spec, data, cfg);
    AblationRow row;
    row.variant = v.name;
    row.groups = v.toggles.groups;
    row.exchange = v.toggles.exchange;
    row.attention = v.toggles.attention;
    row.cost = analyze(spec).total;
    row.accuracy = h.epochs.empty() ? h.initial_accuracy
                                    : h.epochs.back().accuracy;
    rows.push_back(row);
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "variant" << std::right << std::setw(4)
     << "G" << std::setw(5) << "EX" << std::setw(6) << "JDA" << std::setw(12)
     << "Params(M)" << std::setw(12) << "MAdds(M)" << std::setw(10)
     << "Acc(%)" << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << r.variant << std::right << std::setw(4)
       << r.groups << std::setw(5)
       << (r.groups == 1 ? "-" : (r.exchange ? "Yes" : "No")) << std::setw(6)
       << (r.attention ? "Yes" : "No") << std::fixed << std::setprecision(4)
       << std::setw(12) << static_cast<double>(r.cost.params) / 1e6
       << std::setw(12) << static_cast<double>(r.cost.madds) / 1e6
       << std::setprecision(2) << std::setw(10) << 100.0 * r.accuracy << '\n';
  }
  return os.str();
}

json to_json(const TrainConfig& c) {
  json sched;
  if (c.schedule.kind == ScheduleKind::Exponential) {
    sched = {{"kind", "exponential"}, {"rate", c.schedule.rate}};
  } else {
    sched = {{"kind", "step"},
             {"factor", c.schedule.factor},
             {"every", c.schedule.every}};
  }
  return {{"lr0", c.lr0},         {"momentum", c.momentum},
          {"batch_size", c.batch_size}, {"epochs", c.epochs},
          {"schedule", sched},    {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  try {
    TrainConfig c;
    c.lr0 = j.value("lr0", c.lr0);
    c.momentum = j.value("momentum", c.momentum);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      const std::string kind = s.at("kind").get<std::string>();
      if (kind == "exponential") {
        c.schedule.kind = ScheduleKind::Exponential;
        c.schedule.rate = s.value("rate", c.schedule.rate);
      } else if (kind == "step") {
        c.schedule.kind = ScheduleKind::Step;
        c.schedule.factor = s.value("factor", c.schedule.factor);
        c.schedule.every = s.value("every", c.schedule.every);
      } else {
        throw SpecError("unknown schedule kind '" + kind + "'");
      }
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed train config: ") + e.what());
  }
}

json to_json(const DatasetDescriptor& d) {
  return {{"kind", d.kind},
          {"classes", d.classes},
          {"samples_per_class", d.samples_per_class},
          {"channels", d.channels},
          {"size", d.size},
          {"separation", d.separation},
          {"cluster_std", d.cluster_std},
          {"pixel_noise", d.pixel_noise},
          {"seed", d.seed}};
}

DatasetDescriptor dataset_descriptor_from_json(const json& j) {
  try {
    DatasetDescriptor d;
    d.kind = j.value("kind", d.kind);
    d.classes = j.value("classes", d.classes);
    d.samples_per_class = j.value("samples_per_class", d.samples_per_class);
    d.channels = j.value("channels", d.channels);
    d.size = j.value("size", d.size);
    d.separation = j.value("separation", d.separation);
    d.cluster_std = j.value("cluster_std", d.cluster_std);
    d.pixel_noise = j.value("pixel_noise", d.pixel_noise);
    d.seed = j.value("seed", d.seed);
    return d;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed dataset descriptor: ") + e.what());
  }
}

json to_json(const History& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"loss", e.loss},
                      {"accuracy", e.accuracy},
                      {"train_loss", e.train_loss}});
  }
  return {{"initial_loss", h.initial_loss},
          {"initial_accuracy", h.initial_accuracy},
          {"epochs", epochs}};
}

History history_from_json(const json& j) {
  try {
    History h;
    h.initial_loss = j.at("initial_loss").get<double>();
    h.initial_accuracy = j.at("initial_accuracy").get<double>();
    for (const auto& e : j.at("epochs")) {
      h.epochs.push_back({e.at("epoch").get<int>(), e.at("lr").get<double>(),
                          e.at("loss").get<double>(),
                          e.at("accuracy").get<double>(),
                          e.at("train_loss").get<double>()});
    }
    return h;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed history: ") + e.what());
  }
}

std::string history_csv(const History& h) {
  std::ostringstream os;
  os << "epoch,lr,loss,accuracy\n";
  os << std::setprecision(17);
  for (const auto& e : h.epochs) {
    os << e.epoch << ',' << e.lr << ',' << e.loss << ',' << e.accuracy << '\n';
  }
  return os.str();
}

json to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"variant", r.variant},
                   {"groups", r.groups},
                   {"exchange", r.exchange},
                   {"attention", r.attention},
                   {"params", r.cost.params},
                   {"madds", r.cost.madds},
                   {"accuracy", r.accuracy}});
  }
  return out;
}

}  // namespace sinet
