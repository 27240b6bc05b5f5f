// SPDX-License-Identifier: Apache-2.0
#include "partrans/tokens.hpp"

namespace partrans {

std::size_t estimate_tokens(std::string_view text) {
  return (text.size() + 3) / 4;
}

TokenEstimator default_token_estimator() {
  return [](std::string_view text) { return estimate_tokens(text); };
}

std::string truncate_keep_tail(std::string_view text, std::size_t budget_tokens,
                               const TokenEstimator& estimator,
                               std::string_view marker) {
  if (estimator(text) <= budget_tokens) return std::string(text);

  auto candidate = [&](std::size_t keep) {
    std::string out(marker);
    out.append(text.substr(text.size() - keep));
    return out;
  };

  // Binary search the longest suffix that fits; relies on monotonicity.
  std::size_t lo = 0;
  std::size_t hi = text.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (estimator(candidate(mid)) <= budget_tokens) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return candidate(lo);
}

}  // namespace partrans
