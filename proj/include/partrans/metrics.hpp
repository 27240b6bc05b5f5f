// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "partrans/domain.hpp"

namespace partrans {

/// Whitespace separates tokens; punctuation and operator characters are single
/// tokens; identifiers and numeric literals (digits followed by letters,
/// digits, '_' or '.') stay whole. Comments are kept.
std::vector<std::string> tokenize_code(std::string_view code);

/// Ratcliff/Obershelp ratio 2M/(|a|+|b|) over token sequences. M sums the
/// longest contiguous match and, recursively, the matches left and right of
/// it. Ties pick the leftmost block in `a`, then the leftmost in `b`. Two
/// empty sequences score 1.
double gestalt_ratio(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Matched token count M used by gestalt_ratio.
std::size_t gestalt_matches(const std::vector<std::string>& a, const std::vector<std::string>& b);

double sim_t(std::string_view code_a, std::string_view code_b);

/// Identical trimmed nonblank lines regardless of order (multiset
/// intersection) over the line count of the longer code. Both empty scores 1.
double sim_l(std::string_view code_a, std::string_view code_b);

/// source / generated. Throws PreconditionError unless generated > 0.
double runtime_ratio(double source_runtime_s, double generated_runtime_s);

enum class CompareMode { Exact, Filtered };

struct OutputCompareOptions {
  CompareMode mode = CompareMode::Filtered;
  /// ECMAScript regexes; matching lines are dropped in filtered mode.
  std::vector<std::string> timing_patterns = {R"([Tt]ime\D*\d)"};
  double rel_tol = 1e-6;
};

/// Exact: byte equality. Filtered: drop timing lines, then compare the rest
/// line by line with numbers equal within the relative tolerance and all
/// other text equal up to whitespace runs.
OutputVerdict compare_output(std::string_view reference_stdout, std::string_view generated_stdout,
                             const OutputCompareOptions& options = {});

CompareMode parse_compare_mode(std::string_view text);

}  // namespace partrans
