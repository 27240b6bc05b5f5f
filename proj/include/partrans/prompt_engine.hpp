// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "partrans/domain.hpp"
#include "partrans/llm_backend.hpp"

namespace partrans {

struct DirectionPrompts {
  std::string system;
  std::string translate;

  bool operator==(const DirectionPrompts&) const = default;
};

/**
 * System, translation and correction prompts.
 *
 * Templates use `{name}` placeholders. Allowed names per template:
 *   generation           knowledge, knowledge_summary, description,
 *                        translation_prompt, source_code (all required, in
 *                        that order)
 *   compile_error,
 *   exec_error           code, compiler_cmd, stderr (all required)
 *   summarize_knowledge  language, knowledge
 *   describe_source      language, source_code
 * System and translation prompts are used verbatim.
 */
struct PromptDictionary {
  std::string general_system;
  std::map<std::string, DirectionPrompts> directions;  // keyed by Direction::key()
  std::string generation;
  std::string compile_error;
  std::string exec_error;
  std::string summarize_knowledge;
  std::string describe_source;

  /// Built-in prompts for the CUDA <-> OpenMP offload pair.
  static PromptDictionary defaults();

  /// JSON document:
  ///   { "general_system": "...", "compile_error": "...", "exec_error": "...",
  ///     "generation": "...", "summarize_knowledge": "...", "describe_source": "...",
  ///     "directions": { "openmp:cuda": {"system": "...", "translate": "..."} } }
  /// Missing global keys fall back to defaults(); directions come only from the
  /// file when it has a "directions" object.
  static PromptDictionary load(const std::filesystem::path& path);
  static PromptDictionary from_json(const json& doc);
  json to_json() const;

  /// Throws ConfigError when a template uses an unknown placeholder or lacks a
  /// required one.
  void validate() const;

  bool operator==(const PromptDictionary&) const = default;
};

/// Substitutes `{name}` occurrences present in `values`; the substituted text
/// is never rescanned. Unknown `{name}` placeholders throw ConfigError.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values);

std::string system_prompt(const PromptDictionary& dict, const Direction& direction);
std::string translation_prompt(const PromptDictionary& dict, const Direction& direction);

struct PromptBundle {
  std::string knowledge_text;
  std::string knowledge_summary;
  std::string source_description;
  std::string translation_prompt;
  std::string assembled;
  std::size_t token_estimate = 0;
};

struct PromptParts {
  std::string knowledge_text;
  std::string knowledge_summary;
  std::string source_description;
};

/// Throws PreconditionError for empty parts and ContextOverflow when the
/// assembled prompt plus the response budget exceeds the profile's window.
PromptBundle assemble_translation_prompt(const PromptDictionary& dict, const PromptParts& parts,
                                         std::string_view source_code, const Direction& direction,
                                         const LlmProfile& profile,
                                         const TokenEstimator& estimator = default_token_estimator());

inline constexpr std::string_view kEmptyExecStderr =
    "process exited with nonzero status and empty stderr";
inline constexpr std::string_view kEmptyCompileStderr =
    "compiler exited with nonzero status and empty stderr";
inline constexpr std::string_view kTruncationMarker = "[...truncated]";

/// `stderr_budget` bounds the error text in tokens; longer text keeps its tail.
std::string compile_error_prompt(const PromptDictionary& dict, std::string_view code,
                                 std::string_view compiler_cmd, std::string_view stderr_text,
                                 std::optional<std::size_t> stderr_budget = std::nullopt,
                                 const TokenEstimator& estimator = default_token_estimator());

/// Empty `stderr_text` is replaced by kEmptyExecStderr.
std::string exec_error_prompt(const PromptDictionary& dict, std::string_view code,
                              std::string_view compiler_cmd, std::string_view stderr_text,
                              std::optional<std::size_t> stderr_budget = std::nullopt,
                              const TokenEstimator& estimator = default_token_estimator());

/// Error text to report for a failed execution: the timeout notice, the
/// captured stderr, or kEmptyExecStderr.
std::string execution_error_text(const ToolResult& result, double timeout_s);

/// 25% of what remains of the context window once the response budget and
/// `fixed_tokens` are spent.
std::size_t error_text_budget(const LlmProfile& profile, std::size_t fixed_tokens);

/// One model exchange, recorded for the transcript.
struct Exchange {
  std::string system_prompt;
  std::string prompt;
  std::string response;
  bool cached = false;
};

/// Self-prompting stages. Knowledge summaries are cached per (model id,
/// knowledge digest) for the lifetime of the engine; source descriptions are
/// not cached.
class PromptEngine {
 public:
  explicit PromptEngine(PromptDictionary dict,
                        TokenEstimator estimator = default_token_estimator());

  const PromptDictionary& dictionary() const noexcept { return dict_; }
  const TokenEstimator& estimator() const noexcept { return estimator_; }

  Exchange summarize_knowledge(Backend& backend, const LlmProfile& profile,
                               const KnowledgeAsset& asset);

  Exchange describe_source(Backend& backend, const LlmProfile& profile,
                           std::string_view source_code, std::string_view language);

  bool has_cached_summary(const LlmProfile& profile, const KnowledgeAsset& asset) const;

 private:
  PromptDictionary dict_;
  TokenEstimator estimator_;
  mutable std::shared_mutex cache_mutex_;
  std::map<std::string, std::string> summary_cache_;
};

}  // namespace partrans
