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

#include "sinet/autograd.hpp"

#include "sinet/errors.hpp"

namespace sinet {

Tape& Var::tape() const {
  if (!tape_) throw TapeError("tensor is detached from any tape");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value_of(id_); }

Tensor Var::grad() const { return tape().grad_of(id_); }

bool Var::requires_grad() const { return tape().requires_grad_of(id_); }

Var Tape::push(Node node) {
  if (backward_done_) {
    throw TapeError("cannot record on a tape after backward; call reset()");
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(const Var& v) const {
  if (!v.attached()) throw TapeError("tensor is detached from any tape");
  if (v.tape_ != this) throw TapeError("tensor belongs to a different tape");
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.sink = &p;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool needs = false;
  for (const auto& in : inputs) {
    check_owned(in);
    needs = needs || nodes_[in.id_].requires_grad;
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(fn);
  return push(std::move(n));
}

void Tape::accumulate(const Var& target, const Tensor& grad) {
  check_owned(target);
  Node& n = nodes_[target.id_];
  if (!n.requires_grad) return;
  if (grad.shape() != n.value.shape()) {
    throw DimensionError("gradient shape " + grad.shape().str() +
                         " does not match value shape " +
                         n.value.shape().str());
  }
  if (!n.has_grad) {
    n.grad = grad;
    n.has_grad = true;
  } else {
    n.grad += grad;
  }
}

void Tape::backward(const Var& loss) {
  check_owned(loss);
  if (backward_done_) {
    throw TapeError("backward already ran on this tape; call reset() first");
  }
  const Node& root = nodes_[loss.id_];
  if (root.value.size() != 1) {
    throw TapeError("backward requires a scalar loss, got shape " +
                    root.value.shape().str());
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  accumulate(loss, Tensor(root.value.shape(), 1.0));
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backward) {
      // Entries only feed later entries, so n.grad is final here.
      const Tensor g = n.grad;
      n.backward(g, *this);
    }
    if (n.sink) {
      if (n.sink->grad.empty()) n.sink->grad = Tensor::zeros(n.grad.shape());
      n.sink->grad += n.grad;
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

Tensor Tape::grad_of(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.has_grad) return n.grad;
  return Tensor::zeros(n.value.shape());
}

Tape& common_tape(std::initializer_list<Var> vars) {
  Tape* tape = nullptr;
  for (const auto& v : vars) {
    if (!v.attached()) throw TapeError("tensor is detached from any tape");
    if (tape && &v.tape() != tape) {
      throw TapeError("operands belong to different tapes");
    }
    tape = &v.tape();
  }
  if (!tape) throw TapeError("operation needs at least one tensor");
  return *tape;
}

}  // namespace sinet
