// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "jscope/dynamics.hpp"
#include "jscope/model.hpp"
#include "jscope/scopes.hpp"
#include "jscope/verify.hpp"

/// JSON views of results. Key order is fixed (nlohmann::ordered_json) so the
/// same inputs always produce byte-identical files.
namespace jscope {

using Json = nlohmann::ordered_json;

Json to_json(const ModelConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const Json& j);

/// `seed` is the model seed the attributed weights were initialized from.
Json to_json(const AttributionResult& result, const std::string& model_fingerprint, std::uint64_t seed,
             std::size_t top_k = 5);
Json to_json(const verify::OracleReport& report);
Json to_json(const dynamics::TrajectorySpec& spec);
dynamics::TrajectorySpec trajectory_spec_from_json(const Json& j);
Json to_json(const dynamics::TrajectorySpec& spec, const dynamics::QuantizedPrompt& prompt);

/// Two-space indented dump with a trailing newline; doubles round-trip.
std::string dump(const Json& j);

}  // namespace jscope
