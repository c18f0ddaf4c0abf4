// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "jscope/model.hpp"

namespace jscope {

/// Weight file layout (all integers little-endian):
///
///   magic    8 bytes  "JSCOPEW\0"
///   version  u32
///   n_keys   u32, then n_keys x (u32 len, key bytes, u32 len, value bytes)   UTF-8 config
///   n_tensor u32, then n_tensor x (u32 len, name, u32 rank, rank x u64 dim, f64 data)
///
/// Tensors appear in Weights::for_each order.
inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct Checkpoint {
  ModelConfig config;
  Weights weights;
};

std::string serialize_weights(const ModelConfig& config, const Weights& weights);
/// Throws ValidationError on bad magic, version mismatch, truncation, trailing
/// bytes, or tensors inconsistent with the stored config.
Checkpoint deserialize_weights(std::string_view bytes);

void save_weights(const ModelConfig& config, const Weights& weights, const std::filesystem::path& path);
Checkpoint load_weights(const std::filesystem::path& path);
/// As above, and reject a stored config that differs from `expected`; the
/// diagnostic names the field and both values.
Checkpoint load_weights(const std::filesystem::path& path, const ModelConfig& expected);

/// FNV-1a 64-bit digest as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);
/// Digest of the serialized weight file.
std::string model_fingerprint(const ModelConfig& config, const Weights& weights);

}  // namespace jscope
