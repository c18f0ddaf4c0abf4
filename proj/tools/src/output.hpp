// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "jscope/serialize.hpp"

namespace jscope::cli {

inline constexpr const char* kOutDirEnv = "JSCOPE_OUT_DIR";
inline constexpr const char* kManifestName = "manifest.json";

/// --out if given, else $JSCOPE_OUT_DIR, else ./jscope-out.
std::filesystem::path resolve_out_dir(const std::string& flag);

std::string read_file(const std::filesystem::path& path);

/// Writes files into one run directory. Files are created exclusively unless
/// `overwrite` is set, so concurrent runs never clobber each other.
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, bool overwrite);

  void write(const std::string& name, const std::string& content);
  const std::filesystem::path& dir() const { return dir_; }
  /// [{"path", "fnv1a"}] for every file written so far.
  Json listing() const;

 private:
  std::filesystem::path dir_;
  bool overwrite_;
  std::vector<std::pair<std::string, std::string>> written_;
};

/// {"path", "fnv1a"} of an input file.
Json input_entry(const std::filesystem::path& path);

}  // namespace jscope::cli
