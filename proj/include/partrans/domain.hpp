// SPDX-License-Identifier: Apache-2.0
//
// Core value types shared by every stage of the translation pipeline.
// Everything here is plain data plus construction-time validation.
#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "partrans/tokens.hpp"

namespace partrans {

using json = nlohmann::json;

struct KnowledgeAsset {
  std::string language;
  std::string text;
  std::size_t token_count = 0;

  static KnowledgeAsset from_text(std::string language, std::string text,
                                  const TokenEstimator& estimator = default_token_estimator());
  static KnowledgeAsset load(std::string language, const std::filesystem::path& path,
                             const TokenEstimator& estimator = default_token_estimator());

  /// Stable 64-bit FNV-1a digest of `text`, hex encoded.
  std::string digest() const;

  bool operator==(const KnowledgeAsset&) const = default;
};

/// How to build and run one language. Command templates are split on
/// whitespace into argv; `{src}`/`{out}`/`{bin}` substitute inside a word and
/// a bare `{args}` word expands to the runtime arguments.
struct LanguageSpec {
  std::string name;
  std::string file_extension;
  std::string compile_cmd;
  std::string run_cmd = "{bin} {args}";
  std::map<std::string, std::string> env;
  std::shared_ptr<const KnowledgeAsset> knowledge;
};

/// Empty result means the spec is valid; otherwise one message per violated
/// invariant.
std::vector<std::string> validate_language_spec(const LanguageSpec& spec);

/// Throws ConfigError listing every violation.
void require_valid(const LanguageSpec& spec);

struct Direction {
  std::string source;
  std::string target;

  /// "source:target"
  std::string key() const { return source + ":" + target; }
  /// "source-to-target", safe for file names.
  std::string slug() const { return source + "-to-" + target; }
  static Direction parse(std::string_view key);

  auto operator<=>(const Direction&) const = default;
};

struct BackendDescriptor {
  std::string kind = "http";  // "http" | "scripted"

  // http
  std::string url;
  std::string api_key_env;
  int max_retries = 3;
  double retry_backoff_s = 1.0;
  double request_timeout_s = 600.0;

  // scripted
  std::vector<std::string> replies;
  std::filesystem::path script_file;
  std::filesystem::path script_dir;
};

struct LlmProfile {
  std::string name;
  BackendDescriptor backend;
  std::string model_id;
  std::size_t context_length = 16384;
  std::size_t max_response_tokens = 4096;
  double temperature = 0.2;
};

std::vector<std::string> validate_llm_profile(const LlmProfile& profile);

struct TranslationTask {
  std::string app_name;
  LanguageSpec source;
  LanguageSpec target;
  std::string source_code;
  std::vector<std::string> runtime_args;
  std::optional<std::string> reference_target_code;
  LlmProfile llm;

  Direction direction() const { return {source.name, target.name}; }
};

std::vector<std::string> validate_task(const TranslationTask& task);

enum class ToolKind { Compile, Execute };

struct ToolResult {
  ToolKind kind = ToolKind::Compile;
  bool exit_ok = false;
  int exit_code = -1;
  std::string std_out;
  std::string std_err;
  double wall_time_s = 0.0;
  bool timed_out = false;
  std::string command;

  bool operator==(const ToolResult&) const = default;
};

enum class SessionStatus {
  Success,
  CompileBudgetExceeded,
  ExecBudgetExceeded,
  ExtractionFailed,
  BaselineFailed,
  ContextOverflow,
};

enum class PromptKind {
  KnowledgeSummary,
  SourceDescription,
  Translation,
  CompileCorrection,
  ExecCorrection,
};

enum class OutputVerdict { Match, Mismatch, Unchecked };

std::string_view to_string(ToolKind kind);
std::string_view to_string(SessionStatus status);
std::string_view to_string(PromptKind kind);
std::string_view to_string(OutputVerdict verdict);
SessionStatus parse_session_status(std::string_view text);
OutputVerdict parse_output_verdict(std::string_view text);

struct TranscriptEntry {
  PromptKind kind = PromptKind::Translation;
  std::string system_prompt;
  std::string prompt;
  std::string response;
  std::string timestamp;  // ISO-8601 UTC
  bool cached = false;    // served from the summary cache, no model call

  bool operator==(const TranscriptEntry&) const = default;
};

struct Attempt {
  int index = 0;  // 1-based
  std::string code_path;
  std::string code;
  ToolResult compile;
  std::optional<ToolResult> execute;

  bool operator==(const Attempt&) const = default;
};

struct MetricsRecord {
  double runtime_generated_s = 0.0;
  double runtime_source_s = 0.0;
  double ratio = 0.0;
  double sim_t = 0.0;
  double sim_l = 0.0;
  int self_corr = 0;
  OutputVerdict output_verdict = OutputVerdict::Unchecked;

  bool operator==(const MetricsRecord&) const = default;
};

/// Ratio is derived from the runtimes.
MetricsRecord make_metrics(double runtime_source_s, double runtime_generated_s,
                           double sim_t, double sim_l, int self_corr,
                           OutputVerdict verdict);

std::vector<std::string> validate_metrics(const MetricsRecord& metrics);

struct BaselineRecord {
  std::vector<ToolResult> steps;
  std::optional<std::string> target_stdout;
  std::optional<double> target_runtime_s;
  std::string failed_stage;  // empty when the baseline passed

  bool operator==(const BaselineRecord&) const = default;
};

struct SessionRecord {
  std::string app_name;
  Direction direction;
  std::string llm_name;
  std::string model_id;
  std::vector<std::string> runtime_args;
  std::vector<TranscriptEntry> transcript;
  std::vector<Attempt> attempts;
  SessionStatus status = SessionStatus::BaselineFailed;
  int self_corr = 0;
  std::optional<std::string> final_code;
  std::optional<std::string> final_stdout;
  std::optional<double> final_runtime_s;
  BaselineRecord baseline;
  std::optional<MetricsRecord> metrics;
  std::string detail;

  bool operator==(const SessionRecord&) const = default;
};

std::vector<std::string> validate_session_record(const SessionRecord& record);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string iso8601_now();

void to_json(json& j, const ToolResult& r);
void from_json(const json& j, ToolResult& r);
void to_json(json& j, const TranscriptEntry& e);
void from_json(const json& j, TranscriptEntry& e);
void to_json(json& j, const Attempt& a);
void from_json(const json& j, Attempt& a);
void to_json(json& j, const MetricsRecord& m);
void from_json(const json& j, MetricsRecord& m);
void to_json(json& j, const BaselineRecord& b);
void from_json(const json& j, BaselineRecord& b);
void to_json(json& j, const SessionRecord& s);
void from_json(const json& j, SessionRecord& s);

/// Serialises without throwing on invalid UTF-8: tool output and model
/// replies are arbitrary bytes, so bad sequences become U+FFFD.
std::string dump_json(const json& j, int indent = -1);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view data);

}  // namespace partrans
