// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <CLI11.hpp>

namespace jscope::cli {

/// JSON config files for CLI11. Accepts either {"<subcommand>": {...}} objects
/// or a run manifest ({"subcommand": ..., "config": {...}}), so a manifest can
/// be fed straight back with --config. Flags given on the command line win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace jscope::cli
