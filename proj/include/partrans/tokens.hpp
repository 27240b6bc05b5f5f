// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace partrans {

/// Maps text to an approximate model token count. Must be monotone under
/// concatenation; the budget guards depend on it.
using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// ceil(bytes / 4).
std::size_t estimate_tokens(std::string_view text);

TokenEstimator default_token_estimator();

/// Keeps the longest tail of `text` that, together with `marker` prepended,
/// fits in `budget_tokens`. Returns `text` unchanged when it already fits.
std::string truncate_keep_tail(std::string_view text, std::size_t budget_tokens,
                               const TokenEstimator& estimator,
                               std::string_view marker = "[...truncated]");

}  // namespace partrans
