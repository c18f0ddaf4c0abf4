// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "output.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jscope/error.hpp"
#include "jscope/weights_io.hpp"

namespace jscope::cli {

std::filesystem::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "jscope-out";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

OutputDir::OutputDir(std::filesystem::path dir, bool overwrite) : dir_(std::move(dir)), overwrite_(overwrite) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir_.string() + ": " + ec.message());
}

void OutputDir::write(const std::string& name, const std::string& content) {
  const auto path = dir_ / name;
  std::FILE* f = nullptr;
  std::filesystem::path staging = path;
  if (overwrite_) {
    staging += ".partial";
    f = std::fopen(staging.c_str(), "wb");
  } else {
    f = std::fopen(path.c_str(), "wbx");
    if (f == nullptr && std::filesystem::exists(path)) {
      throw ValidationError(path.string() + " already exists (pass --overwrite to replace it)");
    }
  }
  if (f == nullptr) throw ValidationError("cannot create " + path.string());
  const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
  if (std::fclose(f) != 0 || !ok) throw ValidationError("failed writing " + path.string());
  if (overwrite_) std::filesystem::rename(staging, path);
  written_.emplace_back(name, fnv1a_hex(content));
}

Json OutputDir::listing() const {
  Json out = Json::array();
  for (const auto& [name, hash] : written_) out.push_back(Json{{"path", name}, {"fnv1a", hash}});
  return out;
}

Json input_entry(const std::filesystem::path& path) {
  return Json{{"path", path.string()}, {"fnv1a", fnv1a_hex(read_file(path))}};
}

}  // namespace jscope::cli
