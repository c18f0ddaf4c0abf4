// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace jscope {

using TokenId = std::size_t;

/// Fixed numeric vocabulary: one token per two-digit number 10..99, then a
/// comma delimiter, pad, BOS and unknown. Ids 94 and 95 are reserved.
namespace vocab {

inline constexpr int kMinNumber = 10;
inline constexpr int kMaxNumber = 99;
inline constexpr TokenId kComma = 90;
inline constexpr TokenId kPad = 91;
inline constexpr TokenId kBos = 92;
inline constexpr TokenId kUnknown = 93;
inline constexpr std::size_t kSize = 96;

bool is_number(TokenId id);
/// Token for a two-digit number; throws ValidationError outside 10..99.
TokenId number_token(int value);
/// Inverse of number_token; throws ValidationError for non-number ids.
int token_number(TokenId id);
/// Human-readable form: "37", ",", "<pad>", "<bos>", "<unk>", "<r94>".
std::string token_text(TokenId id);

/// Alternating number/comma ids for `values`, ending with a comma so the next
/// prediction is a number. Optional leading BOS.
std::vector<TokenId> encode_series(const std::vector<int>& values, bool bos);

/// Parse prompt text "29,30,31" into integers. Whitespace around numbers is
/// tolerated; anything else throws ValidationError.
std::vector<int> parse_prompt(std::string_view text);
/// "29,30,31" (no whitespace, no trailing comma).
std::string format_prompt(const std::vector<int>& values);

/// One sequence per line, comma-separated decimal ids. Blank lines are skipped.
std::vector<std::vector<TokenId>> parse_dataset(std::string_view text);
std::string format_dataset(const std::vector<std::vector<TokenId>>& sequences);

}  // namespace vocab
}  // namespace jscope
