// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "jscope/vocab.hpp"

#include <cctype>
#include <charconv>

#include "jscope/error.hpp"

namespace jscope::vocab {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_integer(std::string_view field, std::string_view what, std::size_t line) {
  field = trim(field);
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw ValidationError(std::string(what) + ": line " + std::to_string(line) + ": bad integer '" +
                          std::string(field) + "'");
  }
  return value;
}

}  // namespace

bool is_number(TokenId id) { return id < kComma; }

TokenId number_token(int value) {
  if (value < kMinNumber || value > kMaxNumber) {
    throw ValidationError("number_token: " + std::to_string(value) + " outside [10, 99]");
  }
  return static_cast<TokenId>(value - kMinNumber);
}

int token_number(TokenId id) {
  if (!is_number(id)) throw ValidationError("token_number: id " + std::to_string(id) + " is not a number token");
  return static_cast<int>(id) + kMinNumber;
}

std::string token_text(TokenId id) {
  if (is_number(id)) return std::to_string(token_number(id));
  switch (id) {
    case kComma: return ",";
    case kPad: return "<pad>";
    case kBos: return "<bos>";
    case kUnknown: return "<unk>";
    default: return "<r" + std::to_string(id) + ">";
  }
}

std::vector<TokenId> encode_series(const std::vector<int>& values, bool bos) {
  std::vector<TokenId> ids;
  ids.reserve(2 * values.size() + 1);
  if (bos) ids.push_back(kBos);
  for (int v : values) {
    ids.push_back(number_token(v));
    ids.push_back(kComma);
  }
  return ids;
}

std::vector<int> parse_prompt(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.back() == ',') text.remove_suffix(1);  // one trailing comma is fine
  if (text.empty()) throw ValidationError("prompt: empty");
  std::vector<int> values;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    values.push_back(parse_integer<int>(text.substr(start, comma == std::string_view::npos ? comma : comma - start),
                                        "prompt", 1));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return values;
}

std::string format_prompt(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<std::vector<TokenId>> parse_dataset(std::string_view text) {
  std::vector<std::vector<TokenId>> sequences;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    std::vector<TokenId> seq;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      seq.push_back(parse_integer<TokenId>(line.substr(start, comma == std::string_view::npos ? comma : comma - start),
                                           "dataset", line_no));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    sequences.push_back(std::move(seq));
  }
  return sequences;
}

std::string format_dataset(const std::vector<std::vector<TokenId>>& sequences) {
  std::string out;
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i != 0) out += ',';
      out += std::to_string(seq[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace jscope::vocab
