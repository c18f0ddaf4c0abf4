// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "render.hpp"

#include <algorithm>
#include <cstdio>

#include "jscope/error.hpp"

namespace jscope::render {
namespace {

constexpr int kCell = 22;
constexpr int kMargin = 20;
constexpr int kBarHeight = 80;
constexpr int kTopRow = 18;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

/// White to dark orange.
std::string shade(double w) {
  w = std::clamp(w, 0.0, 1.0);
  char buf[16];
  const auto r = static_cast<int>(255 - 38 * w);
  const auto g = static_cast<int>(255 - 160 * w);
  const auto b = static_cast<int>(255 - 235 * w);
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

template <typename T>
std::vector<T> field(const Json& record, const char* key) {
  if (!record.contains(key)) throw ValidationError(std::string("attribution record: missing '") + key + "'");
  return record.at(key).get<std::vector<T>>();
}

}  // namespace

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string attribution_svg(const Json& record) {
  const auto text = field<std::string>(record, "token_text");
  const auto scores = field<double>(record, "scores");
  const auto mask = field<bool>(record, "delimiter_mask");
  if (text.size() != scores.size() || mask.size() != scores.size()) {
    throw ValidationError("attribution record: token_text, scores and delimiter_mask lengths differ");
  }
  const std::size_t leading = record.value("leading", scores.empty() ? 0 : scores.size() - 1);
  const std::string scope = record.value("scope", std::string("scope"));

  double peak = 0.0;
  for (std::size_t t = 0; t < scores.size(); ++t)
    if (!mask[t]) peak = std::max(peak, scores[t]);

  const int n = static_cast<int>(scores.size());
  const int strip_w = std::max(n * kCell, 200);
  const int panel_x = kMargin + strip_w + 40;
  const int panel_w = 260;
  const int width = panel_x + panel_w + kMargin;
  const int bars_top = kMargin + kTopRow + 10;
  const int cells_top = bars_top + kBarHeight + 4;
  const int height = std::max(cells_top + kCell + 40, kMargin + kTopRow + 10 + 20 * 6 + 20);

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" font-family=\"monospace\" font-size=\"11\">\n";
  if (record.contains("manifest")) s += "<!-- manifest: " + escape_xml(record.at("manifest").get<std::string>()) + " -->\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  std::string title = scope + " influence";
  if (record.contains("target")) title += ", target " + escape_xml(vocab::token_text(record.at("target").get<TokenId>()));
  if (record.contains("beta_eff")) title += ", beta_eff " + sci(record.at("beta_eff").get<double>());
  s += "<text x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(kMargin + 4) + "\" font-size=\"13\">" +
       escape_xml(title) + "</text>\n";

  s += "<g class=\"influence\">\n";
  for (int t = 0; t < n; ++t) {
    const auto i = static_cast<std::size_t>(t);
    const double w = peak > 0.0 && !mask[i] ? scores[i] / peak : 0.0;
    const int x = kMargin + t * kCell;
    const double h = w * kBarHeight;
    if (!mask[i]) {
      s += "<rect x=\"" + std::to_string(x + 3) + "\" y=\"" + num(bars_top + kBarHeight - h) + "\" width=\"" +
           std::to_string(kCell - 6) + "\" height=\"" + num(h) + "\" fill=\"#d9601a\"><title>" +
           escape_xml(text[i]) + " @" + std::to_string(t) + ": " + sci(scores[i]) + "</title></rect>\n";
    }
    const std::string fill = mask[i] ? "#f2f2f2" : shade(w);
    const std::string stroke = i == leading ? "#1f4e9c" : "#cccccc";
    s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(cells_top) + "\" width=\"" +
         std::to_string(kCell) + "\" height=\"" + std::to_string(kCell) + "\" fill=\"" + fill + "\" stroke=\"" +
         stroke + "\"/>\n";
    s += "<text x=\"" + std::to_string(x + kCell / 2) + "\" y=\"" + std::to_string(cells_top + 15) +
         "\" text-anchor=\"middle\" fill=\"" + (mask[i] ? "#aaaaaa" : "#000000") + "\">" + escape_xml(text[i]) +
         "</text>\n";
  }
  s += "</g>\n";
  s += "<text x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(cells_top + kCell + 16) +
       "\" fill=\"#555555\">max " + sci(peak) + " (delimiters masked), leading position " + std::to_string(leading) +
       "</text>\n";

  s += "<g class=\"topk\">\n";
  s += "<text x=\"" + std::to_string(panel_x) + "\" y=\"" + std::to_string(kMargin + kTopRow + 4) +
       "\">next-token probabilities</text>\n";
  if (record.contains("top_k")) {
    int row = 0;
    for (const auto& entry : record.at("top_k")) {
      const double p = entry.at("prob").get<double>();
      const int y = kMargin + kTopRow + 14 + row * 20;
      const std::string label = escape_xml(entry.at("text").get<std::string>());
      s += "<text x=\"" + std::to_string(panel_x) + "\" y=\"" + std::to_string(y + 12) + "\">" + label + "</text>\n";
      s += "<rect x=\"" + std::to_string(panel_x + 50) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
           num(p * (panel_w - 110)) + "\" height=\"14\" fill=\"#1f4e9c\"/>\n";
      s += "<text x=\"" + std::to_string(panel_x + panel_w - 55) + "\" y=\"" + std::to_string(y + 12) + "\">" +
           num(p) + "</text>\n";
      ++row;
    }
  }
  s += "</g>\n</svg>\n";
  return s;
}

std::string report_html(const std::vector<Json>& records, const std::vector<std::string>& sources) {
  std::string h = "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>jscope report</title>\n"
                  "<style>body{font-family:sans-serif;margin:24px}section{margin-bottom:32px}"
                  "code{color:#555}</style>\n</head>\n<body>\n<h1>Attribution report</h1>\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    h += "<section>\n<h2>" + escape_xml(r.value("scope", std::string("scope")));
    if (r.contains("target")) h += ", target " + escape_xml(vocab::token_text(r.at("target").get<TokenId>()));
    h += "</h2>\n";
    if (i < sources.size()) h += "<p><code>" + escape_xml(sources[i]) + "</code></p>\n";
    h += "<p>backward passes: " + std::to_string(r.value("backward_passes", std::size_t{0}));
    if (r.contains("model_fingerprint")) h += ", model " + escape_xml(r.at("model_fingerprint").get<std::string>());
    h += "</p>\n" + attribution_svg(r) + "</section>\n";
  }
  h += "</body>\n</html>\n";
  return h;
}

std::string loss_csv(const std::vector<double>& losses) {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, losses[i]);
    out += buf;
  }
  return out;
}

}  // namespace jscope::render
