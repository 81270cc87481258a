// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "abslab/numkit/tape.hpp"

#include <string>
#include <utility>

namespace abslab::nk {

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Tensor& p) { return param(p, &p.grad()); }

Var Tape::param(const Tensor& p, std::vector<double>* sink) {
  if (sink != nullptr && sink->size() != p.size()) {
    throw DimensionError("gradient sink size does not match parameter");
  }
  Node node;
  node.ref = &p;
  node.sink = record_ ? sink : nullptr;
  node.needs_grad = record_ && sink != nullptr;
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

std::vector<double>& Tape::grad(int id) {
  Node& node = nodes_[id];
  const std::size_t n = value(id).size();
  if (node.grad.size() != n) node.grad.assign(n, 0.0);
  return node.grad;
}

Var Tape::push(std::string_view op, Tensor value, std::vector<int> inputs,
               BackwardFn backward) {
  if (!value.all_finite()) {
    throw NonFiniteError("non-finite value produced by " + std::string(op));
  }
  Node node;
  node.value = std::move(value);
  if (record_) {
    for (int in : inputs) {
      if (nodes_[in].needs_grad) node.needs_grad = true;
    }
    if (node.needs_grad) {
      node.inputs = std::move(inputs);
      node.backward = std::move(backward);
    }
  }
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var loss) {
  if (!record_) throw std::logic_error("backward() on a value-only tape");
  if (loss.tape != this) throw std::invalid_argument("loss from another tape");
  if (value(loss.id).size() != 1) {
    throw DimensionError("backward() needs a scalar loss, got " +
                         ShapeString(value(loss.id).shape()));
  }
  visits_ = 0;
  grad(loss.id)[0] += 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.needs_grad || node.grad.empty()) continue;
    ++visits_;
    if (node.sink != nullptr) {
      std::vector<double>& sink = *node.sink;
      for (std::size_t i = 0; i < sink.size(); ++i) sink[i] += node.grad[i];
    } else if (node.backward) {
      node.backward(*this, id);
    }
  }
}

}  // namespace abslab::nk
