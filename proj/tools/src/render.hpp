// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "jscope/serialize.hpp"

namespace jscope::render {

/// Attribution figure from an attribution JSON record: the input tokens
/// shaded and barred by influence (delimiters greyed), and a top-k
/// probability panel for the leading position.
std::string attribution_svg(const Json& record);

/// One HTML page with a section and inline SVG per record.
std::string report_html(const std::vector<Json>& records, const std::vector<std::string>& sources);

/// "step,loss" lines with a header.
std::string loss_csv(const std::vector<double>& losses);

std::string escape_xml(const std::string& text);

}  // namespace jscope::render
