// SPDX-License-Identifier: Apache-2.0
#include "partrans/code_extractor.hpp"

#include <algorithm>

#include "partrans/errors.hpp"

namespace partrans {

namespace {

constexpr double kFallbackThreshold = 0.6;

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool is_fence(std::string_view line) {
  const auto t = trim(line);
  return t.substr(0, 3) == "```";
}

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r\f\v\n") == std::string_view::npos; }

}  // namespace

std::vector<FencedBlock> find_fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  const auto lines = split_lines(text);
  bool inside = false;
  FencedBlock current;
  std::vector<std::string_view> body;

  auto flush = [&] {
    std::string code;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (i) code += '\n';
      code += body[i];
    }
    current.code = std::move(code);
    blocks.push_back(std::move(current));
    current = {};
    body.clear();
  };

  for (const auto line : lines) {
    if (!is_fence(line)) {
      if (inside) body.push_back(line);
      continue;
    }
    if (inside) {
      flush();
      inside = false;
    } else {
      inside = true;
      const auto tag = trim(trim(line).substr(3));
      if (!tag.empty()) current.tag = std::string(tag);
    }
  }
  if (inside) flush();
  return blocks;
}

double code_line_fraction(std::string_view text) {
  std::size_t nonempty = 0;
  std::size_t codey = 0;
  for (const auto line : split_lines(text)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    ++nonempty;
    const char last = t.back();
    if (last == ';' || last == '{' || last == '}' || t.front() == '#') ++codey;
  }
  return nonempty == 0 ? 0.0 : static_cast<double>(codey) / static_cast<double>(nonempty);
}

ExtractedCode extract_code(std::string_view response_text) {
  const auto blocks = find_fenced_blocks(response_text);
  int best = -1;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (is_blank(blocks[i].code)) continue;
    if (best < 0 || blocks[i].code.size() > blocks[static_cast<std::size_t>(best)].code.size()) {
      best = static_cast<int>(i);
    }
  }
  if (best >= 0) {
    const auto& b = blocks[static_cast<std::size_t>(best)];
    return {b.code, b.tag, best, static_cast<int>(blocks.size())};
  }
  if (blocks.empty() && code_line_fraction(response_text) >= kFallbackThreshold) {
    return {std::string(response_text), std::nullopt, 0, 1};
  }
  throw ExtractionFailed(blocks.empty() ? "response contains no fenced code block"
                                        : "response contains only empty code blocks");
}

}  // namespace partrans
