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
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "sinet/tensor.hpp"

namespace sinet {

class Tape;

/// A trainable tensor that outlives individual tapes. Gradients from each
/// backward pass accumulate into `grad` until zeroed.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

/// Handle to a value recorded on a Tape. A default-constructed Var is
/// detached and cannot take part in any operation.
class Var {
 public:
  Var() = default;

  bool attached() const { return tape_ != nullptr; }
  Tape& tape() const;
  std::size_t id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  // Gradient after Tape::backward; zeros if nothing flowed here.
  Tensor grad() const;
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of primitive applications. Entries are appended in
/// evaluation order, so the record is topologically sorted by construction
/// and a reverse sweep visits each entry once.
class Tape {
 public:
  // Receives the output gradient and pushes contributions to inputs via
  // Tape::accumulate.
  using BackwardFn = std::function<void(const Tensor& out_grad, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  // Leaf bound to a Parameter; backward adds this leaf's gradient to p.grad.
  Var parameter(Parameter& p);

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  void accumulate(const Var& target, const Tensor& grad);

  // Reverse sweep from a scalar loss. Calling twice without reset() throws.
  void backward(const Var& loss);
  void reset();

  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  const Tensor& value_of(std::size_t id) const { return nodes_.at(id).value; }
  Tensor grad_of(std::size_t id) const;
  bool requires_grad_of(std::size_t id) const {
    return nodes_.at(id).requires_grad;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter* sink = nullptr;
    BackwardFn backward;
  };

  Var push(Node node);
  void check_owned(const Var& v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Tape of the first attached input; throws TapeError if none is attached or
// inputs live on different tapes.
Tape& common_tape(std::initializer_list<Var> vars);

}  // namespace sinet
