// Copyright 2026 The abslab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Computation tape for reverse-mode differentiation. Every op appends one
// record holding its output value, the ids of its inputs and a local
// backward rule. Records are appended in execution order, so the tape is
// topologically sorted by construction and backward() is a single reverse
// sweep.

#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "abslab/numkit/tensor.hpp"

namespace abslab::nk {

class Tape;

// Handle to one tape record. Cheap to copy; only valid while its tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  // A tape built with record_grads=false evaluates values only; no backward
  // closures are kept.
  explicit Tape(bool record_grads = true) : record_(record_grads) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor value);
  // Leaf bound to a parameter; backward() accumulates into p.grad(). The
  // parameter must outlive the tape and stay unmodified while it is in use.
  Var param(Tensor& p);
  // Leaf whose gradient is accumulated into an external buffer of p's size
  // (or no gradient at all when sink is null).
  Var param(const Tensor& p, std::vector<double>* sink);

  const Tensor& value(int id) const {
    const Node& node = nodes_[id];
    return node.ref != nullptr ? *node.ref : node.value;
  }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  // Gradient buffer of a record, zero-initialised on first access.
  std::vector<double>& grad(int id);
  const std::vector<double>& grad_if_any(int id) const {
    return nodes_[id].grad;
  }

  // Appends an op record. `op` names the op in non-finite diagnostics.
  Var push(std::string_view op, Tensor value, std::vector<int> inputs,
           BackwardFn backward);

  // Reverse sweep from a scalar loss seeded with d(loss)/d(loss) = 1.
  void backward(Var loss);
  // Number of records whose backward rule ran in the last sweep.
  std::size_t last_backward_visits() const { return visits_; }

 private:
  struct Node {
    Tensor value;
    // Parameter leaves reference the caller's tensor instead of copying it.
    const Tensor* ref = nullptr;
    std::vector<double> grad;
    std::vector<int> inputs;
    BackwardFn backward;
    std::vector<double>* sink = nullptr;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  bool record_ = true;
  std::size_t visits_ = 0;
};

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace abslab::nk
