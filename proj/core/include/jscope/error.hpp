// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace jscope {

/// Bad input: wrong shape, out-of-range id, malformed file, invalid flag.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The numbers themselves went wrong: non-finite state, degenerate norm,
/// failed oracle.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jscope
