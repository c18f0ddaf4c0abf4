// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "jscope/tensor.hpp"

/// Differentiable tensor operations. Each op computes its exact value and,
/// when any input lives on a Tape, records a node with a closed-form adjoint.
/// Rank-1 tensors are treated as single rows where a matrix is expected.
/// Shape mismatches throw ValidationError naming both shapes.
namespace jscope::ops {

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T: [m,k] x [n,k] -> [m,n]. The natural layout for x * W^T with W[out,in].
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// [m,n] x [n] -> [m]
Tensor matvec(const Tensor& a, const Tensor& x);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise (Hadamard) product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
/// Multiply row r of `a` by the fixed factor factors[r].
Tensor scale_rows(const Tensor& a, std::span<const double> factors);

/// Row-wise softmax with max subtraction. With `causal`, entry (i, j) for
/// j > i is exactly zero and excluded from the normalizer.
Tensor softmax(const Tensor& a, bool causal = false);
/// Row-wise x / sqrt(mean(x^2) + eps) * gain.
Tensor rms_norm(const Tensor& a, const Tensor& gain, double eps);
Tensor silu(const Tensor& a);

/// Rows of `table` at `ids`: [V,d] -> [ids.size(), d].
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);

/// Inner product of two equal-length tensors -> scalar.
Tensor dot(const Tensor& a, const Tensor& b);
/// Euclidean norm of all entries -> scalar.
Tensor l2_norm(const Tensor& a);
/// Sum of all entries -> scalar.
Tensor sum(const Tensor& a);

/// Row r of a matrix as a rank-1 tensor.
Tensor select_row(const Tensor& a, std::size_t r);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
Tensor concat_cols(const std::vector<Tensor>& parts);

/// Rotary position encoding. Columns are split into `n_heads` blocks; inside
/// each block, the pair (2i, 2i+1) at row (position) p is rotated by angle
/// p * base^(-2i / head_dim).
Tensor rotary(const Tensor& a, std::size_t n_heads, double base);

/// Mean over rows with target >= 0 of -log softmax(logits[r])[target[r]].
/// Rows with a negative target are ignored. -> scalar.
Tensor cross_entropy(const Tensor& logits, std::span<const long> targets);

}  // namespace jscope::ops
