// SPDX-License-Identifier: Apache-2.0
#include "partrans/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <tuple>
#include <unordered_map>

#include "partrans/errors.hpp"

namespace partrans {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

struct Block {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t len = 0;
};

// Longest common contiguous run in a[alo,ahi) x b[blo,bhi). Scanning a, then b,
// in increasing order and only replacing on a strictly longer run yields the
// leftmost-in-a, then leftmost-in-b block.
Block longest_match(const std::vector<int>& a, const std::vector<int>& b, std::size_t alo,
                    std::size_t ahi, std::size_t blo, std::size_t bhi,
                    std::vector<std::size_t>& prev, std::vector<std::size_t>& cur) {
  Block best{alo, blo, 0};
  const std::size_t width = bhi - blo;
  std::fill(prev.begin(), prev.begin() + static_cast<std::ptrdiff_t>(width + 1), 0);
  for (std::size_t i = alo; i < ahi; ++i) {
    cur[0] = 0;
    for (std::size_t j = blo; j < bhi; ++j) {
      const std::size_t k = j - blo + 1;
      if (a[i] == b[j]) {
        cur[k] = prev[k - 1] + 1;
        if (cur[k] > best.len) best = {i + 1 - cur[k], j + 1 - cur[k], cur[k]};
      } else {
        cur[k] = 0;
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

}  // namespace

std::vector<std::string> tokenize_code(std::string_view code) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = code.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(code[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (std::isdigit(c)) {
      std::size_t j = i + 1;
      while (j < n && (is_word_char(static_cast<unsigned char>(code[j])) || code[j] == '.')) ++j;
      tokens.emplace_back(code.substr(i, j - i));
      i = j;
    } else if (is_word_char(c)) {
      std::size_t j = i + 1;
      while (j < n && is_word_char(static_cast<unsigned char>(code[j]))) ++j;
      tokens.emplace_back(code.substr(i, j - i));
      i = j;
    } else {
      tokens.emplace_back(1, code[i]);
      ++i;
    }
  }
  return tokens;
}

std::size_t gestalt_matches(const std::vector<std::string>& a_tokens,
                            const std::vector<std::string>& b_tokens) {
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](const std::vector<std::string>& toks) {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(ids.emplace(t, static_cast<int>(ids.size())).first->second);
    return out;
  };
  const auto a = intern(a_tokens);
  const auto b = intern(b_tokens);

  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::size_t matched = 0;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> stack;
  stack.emplace_back(0, a.size(), 0, b.size());
  while (!stack.empty()) {
    const auto [alo, ahi, blo, bhi] = stack.back();
    stack.pop_back();
    if (alo >= ahi || blo >= bhi) continue;
    const auto m = longest_match(a, b, alo, ahi, blo, bhi, prev, cur);
    if (m.len == 0) continue;
    matched += m.len;
    stack.emplace_back(alo, m.a, blo, m.b);
    stack.emplace_back(m.a + m.len, ahi, m.b + m.len, bhi);
  }
  return matched;
}

double gestalt_ratio(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(gestalt_matches(a, b)) / static_cast<double>(total);
}

double sim_t(std::string_view code_a, std::string_view code_b) {
  return gestalt_ratio(tokenize_code(code_a), tokenize_code(code_b));
}

double sim_l(std::string_view code_a, std::string_view code_b) {
  std::unordered_map<std::string_view, long> counts;
  std::size_t na = 0;
  std::size_t nb = 0;
  for (const auto line : lines_of(code_a)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    ++counts[t];
    ++na;
  }
  std::size_t shared = 0;
  for (const auto line : lines_of(code_b)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    ++nb;
    if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
      --it->second;
      ++shared;
    }
  }
  const std::size_t longer = std::max(na, nb);
  if (longer == 0) return 1.0;
  return static_cast<double>(shared) / static_cast<double>(longer);
}

double runtime_ratio(double source_runtime_s, double generated_runtime_s) {
  if (!(generated_runtime_s > 0.0)) throw PreconditionError("generated runtime must be positive");
  return source_runtime_s / generated_runtime_s;
}

CompareMode parse_compare_mode(std::string_view text) {
  if (text == "exact") return CompareMode::Exact;
  if (text == "filtered") return CompareMode::Filtered;
  throw ConfigError("compare mode must be 'exact' or 'filtered', got '" + std::string(text) + "'");
}

namespace {

struct Segment {
  bool numeric = false;
  std::string text;
  double value = 0.0;
};

const std::regex& number_regex() {
  static const std::regex re(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
  return re;
}

std::string squash_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::vector<Segment> segments_of(const std::string& line) {
  std::vector<Segment> segs;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(line.begin(), line.end(), number_regex());
       it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position());
    if (auto text = squash_spaces(std::string_view(line).substr(last, pos - last)); !text.empty()) {
      segs.push_back({false, std::move(text), 0.0});
    }
    segs.push_back({true, it->str(), std::strtod(it->str().c_str(), nullptr)});
    last = pos + static_cast<std::size_t>(it->length());
  }
  if (auto tail = squash_spaces(std::string_view(line).substr(last)); !tail.empty()) {
    segs.push_back({false, std::move(tail), 0.0});
  }
  return segs;
}

std::vector<std::string> payload_lines(std::string_view text, const std::vector<std::regex>& drop) {
  std::vector<std::string> out;
  for (const auto line : lines_of(text)) {
    if (trim(line).empty()) continue;
    const std::string s(line);
    bool timing = false;
    for (const auto& re : drop) {
      if (std::regex_search(s, re)) {
        timing = true;
        break;
      }
    }
    if (!timing) out.push_back(s);
  }
  return out;
}

bool close_enough(double x, double y, double rel_tol) {
  if (x == y) return true;
  return std::abs(x - y) <= rel_tol * std::max(std::abs(x), std::abs(y));
}

}  // namespace

OutputVerdict compare_output(std::string_view reference_stdout, std::string_view generated_stdout,
                             const OutputCompareOptions& options) {
  if (options.mode == CompareMode::Exact) {
    return reference_stdout == generated_stdout ? OutputVerdict::Match : OutputVerdict::Mismatch;
  }
  std::vector<std::regex> drop;
  for (const auto& p : options.timing_patterns) drop.emplace_back(p);
  const auto ref = payload_lines(reference_stdout, drop);
  const auto gen = payload_lines(generated_stdout, drop);
  if (ref.size() != gen.size()) return OutputVerdict::Mismatch;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto rs = segments_of(ref[i]);
    const auto gs = segments_of(gen[i]);
    if (rs.size() != gs.size()) return OutputVerdict::Mismatch;
    for (std::size_t k = 0; k < rs.size(); ++k) {
      if (rs[k].numeric != gs[k].numeric) return OutputVerdict::Mismatch;
      if (rs[k].numeric ? !close_enough(rs[k].value, gs[k].value, options.rel_tol)
                        : rs[k].text != gs[k].text) {
        return OutputVerdict::Mismatch;
      }
    }
  }
  return OutputVerdict::Match;
}

}  // namespace partrans
