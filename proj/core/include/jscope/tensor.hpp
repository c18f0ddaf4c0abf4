// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace jscope {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

class Tape;

/// Dense row-major float64 array. The value is immutable and shared between
/// copies; a tensor produced on a Tape additionally carries its node id.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_->size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return *data_; }
  const std::vector<double>& values() const { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t r, std::size_t c) const { return (*data_)[r * cols() + c]; }
  /// Value of a single-element tensor.
  double item() const;

  bool on_tape() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t node() const { return node_; }

  /// Same value, no tape membership.
  Tensor detached() const;

  std::shared_ptr<const std::vector<double>> shared_data() const { return data_; }

 private:
  friend class Tape;
  Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data, Tape* tape,
         std::size_t node);

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
};

enum class OpKind : std::uint8_t {
  leaf,
  matmul,
  matmul_nt,
  matvec,
  transpose,
  add,
  sub,
  mul,
  scale,
  softmax,
  rms_norm,
  silu,
  gather,
  dot,
  l2_norm,
  select_row,
  slice_cols,
  concat_cols,
  sum,
  rotary,
  cross_entropy,
  scale_rows,
};

const char* op_name(OpKind kind);

/// Gradient buffers for the parents of a node, in parent order. An entry is
/// null when that parent does not need a gradient.
using ParentGrads = std::span<std::vector<double>* const>;
using AdjointFn = std::function<void(std::span<const double> out_grad, ParentGrads parent_grads)>;

/// Gradients of one reverse sweep, keyed by leaf.
class Gradients {
 public:
  /// Gradient of `leaf`; zeros of the leaf's shape if the sweep never reached it.
  Tensor of(const Tensor& leaf) const;
  bool reached(const Tensor& leaf) const;

 private:
  friend class Tape;
  std::unordered_map<std::size_t, Tensor> by_node_;
  std::unordered_map<std::size_t, Shape> shapes_;
};

/// Reverse-mode differentiation tape. Nodes are appended in evaluation order,
/// so parents always precede children and a reverse sweep is a topological
/// traversal. Single-threaded; use one tape per sequence.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Register `value` as a differentiation leaf.
  Tensor leaf(const Tensor& value);

  /// Append an op node. Returns an untaped tensor if no parent needs a gradient.
  Tensor record(OpKind kind, Shape shape, std::vector<double> value,
                std::vector<const Tensor*> parents, AdjointFn adjoint);

  /// Vector-Jacobian product: sweeps backward from `output` seeded with
  /// `cotangent` (same shape as output). The tape stays usable, so several
  /// VJPs may share one forward. Counts as one backward pass.
  Gradients vjp(const Tensor& output, std::span<const double> cotangent);

  /// d(loss)/d(leaf) for a scalar loss; the tape is consumed afterwards.
  Gradients backward(const Tensor& loss);

  std::size_t backward_passes() const { return backward_passes_; }
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  /// Ops recorded per kind, for tests and diagnostics.
  std::size_t count(OpKind kind) const;

 private:
  struct Node {
    OpKind kind;
    Shape shape;
    std::vector<std::ptrdiff_t> parents;  // -1 for untaped inputs
    AdjointFn adjoint;
  };

  void check_usable() const;

  std::vector<Node> nodes_;
  std::size_t backward_passes_ = 0;
  bool consumed_ = false;
};

}  // namespace jscope
