// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace partrans {

struct ExtractedCode {
  std::string code;
  std::optional<std::string> fence_language_tag;
  int block_index = 0;
  int total_blocks = 1;
};

struct FencedBlock {
  std::string code;
  std::optional<std::string> tag;
};

/// Triple-backtick blocks whose fence starts a line (leading whitespace
/// allowed). An unterminated final block runs to the end of the text.
std::vector<FencedBlock> find_fenced_blocks(std::string_view text);

/// Fraction of nonempty lines that look like C-family code (end in ';', '{'
/// or '}', or start with '#').
double code_line_fraction(std::string_view text);

/// Picks the longest nonblank fenced block (first on ties). Without fences,
/// falls back to the whole response when at least 60% of its nonempty lines
/// look like code. Throws ExtractionFailed otherwise.
ExtractedCode extract_code(std::string_view response_text);

}  // namespace partrans
