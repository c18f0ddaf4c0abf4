// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/tensor.hpp"

#include <sstream>

#include "jscope/error.hpp"

namespace jscope {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

Tensor::Tensor() : data_(std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  for (auto e : shape_) {
    if (e == 0) throw ValidationError("tensor: zero extent in shape " + shape_string(shape_));
  }
  if (shape_size(shape_) != data.size()) {
    throw ValidationError("tensor: shape " + shape_string(shape_) + " needs " +
                          std::to_string(shape_size(shape_)) + " values, got " +
                          std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor::Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data, Tape* tape,
               std::size_t node)
    : shape_(std::move(shape)), data_(std::move(data)), tape_(tape), node_(node) {}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

std::size_t Tensor::rows() const {
  if (rank() == 2) return shape_[0];
  if (rank() == 1) return 1;
  throw ValidationError("rows: expected rank 1 or 2, got " + shape_string(shape_));
}

std::size_t Tensor::cols() const {
  if (rank() == 2) return shape_[1];
  if (rank() == 1) return shape_[0];
  throw ValidationError("cols: expected rank 1 or 2, got " + shape_string(shape_));
}

double Tensor::item() const {
  if (size() != 1) throw ValidationError("item: tensor " + shape_string(shape_) + " is not scalar");
  return (*data_)[0];
}

Tensor Tensor::detached() const { return Tensor(shape_, data_, nullptr, 0); }

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::matmul_nt: return "matmul_nt";
    case OpKind::matvec: return "matvec";
    case OpKind::transpose: return "transpose";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::scale: return "scale";
    case OpKind::softmax: return "softmax";
    case OpKind::rms_norm: return "rms_norm";
    case OpKind::silu: return "silu";
    case OpKind::gather: return "gather";
    case OpKind::dot: return "dot";
    case OpKind::l2_norm: return "l2_norm";
    case OpKind::select_row: return "select_row";
    case OpKind::slice_cols: return "slice_cols";
    case OpKind::concat_cols: return "concat_cols";
    case OpKind::sum: return "sum";
    case OpKind::rotary: return "rotary";
    case OpKind::cross_entropy: return "cross_entropy";
    case OpKind::scale_rows: return "scale_rows";
  }
  return "unknown";
}

Tensor Gradients::of(const Tensor& leaf) const {
  if (auto it = by_node_.find(leaf.node()); leaf.on_tape() && it != by_node_.end()) {
    return it->second;
  }
  return Tensor::zeros(leaf.shape());
}

bool Gradients::reached(const Tensor& leaf) const {
  return leaf.on_tape() && by_node_.contains(leaf.node());
}

void Tape::check_usable() const {
  if (consumed_) throw ValidationError("tape: already consumed by backward()");
}

Tensor Tape::leaf(const Tensor& value) {
  check_usable();
  nodes_.push_back(Node{OpKind::leaf, value.shape(), {}, {}});
  return Tensor(value.shape(), value.shared_data(), this, nodes_.size() - 1);
}

Tensor Tape::record(OpKind kind, Shape shape, std::vector<double> value,
                    std::vector<const Tensor*> parents, AdjointFn adjoint) {
  bool any = false;
  for (const Tensor* p : parents) {
    if (p->tape() == nullptr) continue;
    if (p->tape() != this) throw ValidationError(std::string(op_name(kind)) + ": inputs live on different tapes");
    any = true;
  }
  if (!any) return Tensor(std::move(shape), std::move(value));
  check_usable();
  Node node{kind, shape, {}, std::move(adjoint)};
  node.parents.reserve(parents.size());
  for (const Tensor* p : parents) {
    node.parents.push_back(p->on_tape() ? static_cast<std::ptrdiff_t>(p->node()) : -1);
  }
  nodes_.push_back(std::move(node));
  auto data = std::make_shared<const std::vector<double>>(std::move(value));
  return Tensor(std::move(shape), std::move(data), this, nodes_.size() - 1);
}

Gradients Tape::vjp(const Tensor& output, std::span<const double> cotangent) {
  check_usable();
  if (output.tape() != this) throw ValidationError("vjp: output is not on this tape");
  if (cotangent.size() != output.size()) {
    throw ValidationError("vjp: cotangent has " + std::to_string(cotangent.size()) +
                          " entries, output is " + shape_string(output.shape()));
  }
  ++backward_passes_;

  const std::size_t top = output.node();
  std::vector<std::vector<double>> grads(top + 1);
  grads[top].assign(cotangent.begin(), cotangent.end());

  std::vector<std::vector<double>*> buffers;
  Gradients result;
  for (std::size_t i = top + 1; i-- > 0;) {
    if (grads[i].empty()) continue;
    Node& node = nodes_[i];
    if (node.kind == OpKind::leaf) {
      result.shapes_.emplace(i, node.shape);
      result.by_node_.emplace(i, Tensor(node.shape, std::move(grads[i])));
      continue;
    }
    buffers.assign(node.parents.size(), nullptr);
    for (std::size_t k = 0; k < node.parents.size(); ++k) {
      const auto p = node.parents[k];
      if (p < 0) continue;
      auto& g = grads[static_cast<std::size_t>(p)];
      if (g.empty()) g.assign(shape_size(nodes_[static_cast<std::size_t>(p)].shape), 0.0);
      buffers[k] = &g;
    }
    node.adjoint(grads[i], buffers);
    std::vector<double>().swap(grads[i]);
  }
  return result;
}

Gradients Tape::backward(const Tensor& loss) {
  if (loss.size() != 1 || loss.rank() != 0) {
    throw ValidationError("backward: loss must be a scalar, got " + shape_string(loss.shape()));
  }
  if (loss.tape() != this) throw ValidationError("backward: loss was not produced on this tape");
  const double seed = 1.0;
  Gradients g = vjp(loss, std::span<const double>(&seed, 1));
  consumed_ = true;
  nodes_.clear();
  nodes_.shrink_to_fit();
  return g;
}

std::size_t Tape::count(OpKind kind) const {
  std::size_t n = 0;
  for (const auto& node : nodes_) n += node.kind == kind ? 1 : 0;
  return n;
}

}  // namespace jscope
