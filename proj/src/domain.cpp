// SPDX-License-Identifier: Apache-2.0
#include "partrans/domain.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <sstream>

#include "partrans/errors.hpp"

namespace partrans {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

void check_placeholder(std::vector<std::string>& errors, std::string_view field,
                       std::string_view text, std::string_view placeholder) {
  const auto n = count_occurrences(text, placeholder);
  if (n == 0) {
    errors.push_back(std::string(field) + ": missing " + std::string(placeholder));
  } else if (n > 1) {
    errors.push_back(std::string(field) + ": " + std::string(placeholder) + " appears " +
                     std::to_string(n) + " times, expected once");
  }
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& value) {
  if (value) {
    j[key] = *value;
  } else {
    j[key] = nullptr;
  }
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& value) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    value.reset();
  } else {
    value = it->get<T>();
  }
}

}  // namespace

KnowledgeAsset KnowledgeAsset::from_text(std::string language, std::string text,
                                         const TokenEstimator& estimator) {
  KnowledgeAsset asset;
  asset.language = std::move(language);
  asset.token_count = estimator(text);
  asset.text = std::move(text);
  return asset;
}

KnowledgeAsset KnowledgeAsset::load(std::string language, const std::filesystem::path& path,
                                    const TokenEstimator& estimator) {
  return from_text(std::move(language), read_text_file(path), estimator);
}

std::string KnowledgeAsset::digest() const { return fnv1a_hex(text); }

std::vector<std::string> validate_language_spec(const LanguageSpec& spec) {
  std::vector<std::string> errors;
  if (spec.name.empty()) errors.emplace_back("name: must be nonempty");
  if (spec.name.find(':') != std::string::npos) errors.emplace_back("name: must not contain ':'");
  check_placeholder(errors, "compile_cmd", spec.compile_cmd, "{src}");
  check_placeholder(errors, "compile_cmd", spec.compile_cmd, "{out}");
  check_placeholder(errors, "run_cmd", spec.run_cmd, "{bin}");
  return errors;
}

void require_valid(const LanguageSpec& spec) {
  const auto errors = validate_language_spec(spec);
  if (errors.empty()) return;
  std::string message = "invalid language spec '" + spec.name + "':";
  for (const auto& e : errors) message += "\n  " + e;
  throw ConfigError(message);
}

Direction Direction::parse(std::string_view key) {
  const auto colon = key.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == key.size() ||
      key.find(':', colon + 1) != std::string_view::npos) {
    throw ConfigError("direction must look like 'source:target', got '" + std::string(key) + "'");
  }
  return {std::string(key.substr(0, colon)), std::string(key.substr(colon + 1))};
}

std::vector<std::string> validate_llm_profile(const LlmProfile& profile) {
  std::vector<std::string> errors;
  if (profile.name.empty()) errors.emplace_back("name: must be nonempty");
  if (profile.context_length == 0) errors.emplace_back("context_length: must be positive");
  if (profile.max_response_tokens == 0) errors.emplace_back("max_response_tokens: must be positive");
  if (profile.max_response_tokens >= profile.context_length) {
    errors.emplace_back("max_response_tokens: must be smaller than context_length");
  }
  if (profile.temperature < 0.0) errors.emplace_back("temperature: must be >= 0");
  if (profile.backend.kind != "http" && profile.backend.kind != "scripted") {
    errors.push_back("backend.kind: unknown backend '" + profile.backend.kind + "'");
  }
  if (profile.backend.kind == "http" && profile.backend.url.empty()) {
    errors.emplace_back("backend.url: required for http backends");
  }
  return errors;
}

std::vector<std::string> validate_task(const TranslationTask& task) {
  std::vector<std::string> errors;
  if (task.app_name.empty()) errors.emplace_back("app_name: must be nonempty");
  if (task.source_code.empty()) errors.emplace_back("source_code: must be nonempty");
  if (task.source.name == task.target.name) {
    errors.emplace_back("direction: source and target languages must differ");
  }
  for (const auto& e : validate_language_spec(task.source)) errors.push_back("source." + e);
  for (const auto& e : validate_language_spec(task.target)) errors.push_back("target." + e);
  for (const auto& e : validate_llm_profile(task.llm)) errors.push_back("llm." + e);
  return errors;
}

std::string_view to_string(ToolKind kind) {
  return kind == ToolKind::Compile ? "compile" : "execute";
}

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Success: return "Success";
    case SessionStatus::CompileBudgetExceeded: return "CompileBudgetExceeded";
    case SessionStatus::ExecBudgetExceeded: return "ExecBudgetExceeded";
    case SessionStatus::ExtractionFailed: return "ExtractionFailed";
    case SessionStatus::BaselineFailed: return "BaselineFailed";
    case SessionStatus::ContextOverflow: return "ContextOverflow";
  }
  return "?";
}

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::KnowledgeSummary: return "knowledge_summary";
    case PromptKind::SourceDescription: return "source_description";
    case PromptKind::Translation: return "translation";
    case PromptKind::CompileCorrection: return "compile_correction";
    case PromptKind::ExecCorrection: return "exec_correction";
  }
  return "?";
}

std::string_view to_string(OutputVerdict verdict) {
  switch (verdict) {
    case OutputVerdict::Match: return "Match";
    case OutputVerdict::Mismatch: return "Mismatch";
    case OutputVerdict::Unchecked: return "Unchecked";
  }
  return "?";
}

SessionStatus parse_session_status(std::string_view text) {
  for (auto s : {SessionStatus::Success, SessionStatus::CompileBudgetExceeded,
                 SessionStatus::ExecBudgetExceeded, SessionStatus::ExtractionFailed,
                 SessionStatus::BaselineFailed, SessionStatus::ContextOverflow}) {
    if (to_string(s) == text) return s;
  }
  throw Error("unknown session status '" + std::string(text) + "'");
}

OutputVerdict parse_output_verdict(std::string_view text) {
  for (auto v : {OutputVerdict::Match, OutputVerdict::Mismatch, OutputVerdict::Unchecked}) {
    if (to_string(v) == text) return v;
  }
  throw Error("unknown output verdict '" + std::string(text) + "'");
}

namespace {

PromptKind parse_prompt_kind(std::string_view text) {
  for (auto k : {PromptKind::KnowledgeSummary, PromptKind::SourceDescription,
                 PromptKind::Translation, PromptKind::CompileCorrection,
                 PromptKind::ExecCorrection}) {
    if (to_string(k) == text) return k;
  }
  throw Error("unknown prompt kind '" + std::string(text) + "'");
}

}  // namespace

MetricsRecord make_metrics(double runtime_source_s, double runtime_generated_s, double sim_t,
                           double sim_l, int self_corr, OutputVerdict verdict) {
  if (!(runtime_generated_s > 0.0)) {
    throw PreconditionError("generated runtime must be positive");
  }
  MetricsRecord m;
  m.runtime_source_s = runtime_source_s;
  m.runtime_generated_s = runtime_generated_s;
  m.ratio = runtime_source_s / runtime_generated_s;
  m.sim_t = sim_t;
  m.sim_l = sim_l;
  m.self_corr = self_corr;
  m.output_verdict = verdict;
  return m;
}

std::vector<std::string> validate_metrics(const MetricsRecord& m) {
  std::vector<std::string> errors;
  if (m.runtime_generated_s < 0 || m.runtime_source_s < 0) errors.emplace_back("runtimes must be >= 0");
  if (m.ratio < 0) errors.emplace_back("ratio must be >= 0");
  if (m.runtime_generated_s > 0) {
    const double expect = m.runtime_source_s / m.runtime_generated_s;
    if (std::abs(m.ratio - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
      errors.emplace_back("ratio inconsistent with runtimes");
    }
  }
  if (m.sim_t < 0 || m.sim_t > 1) errors.emplace_back("sim_t outside [0,1]");
  if (m.sim_l < 0 || m.sim_l > 1) errors.emplace_back("sim_l outside [0,1]");
  if (m.self_corr < 0) errors.emplace_back("self_corr must be >= 0");
  return errors;
}

std::vector<std::string> validate_session_record(const SessionRecord& r) {
  std::vector<std::string> errors;
  int corrections = 0;
  for (const auto& e : r.transcript) {
    if (e.kind == PromptKind::CompileCorrection || e.kind == PromptKind::ExecCorrection) {
      ++corrections;
    }
  }
  if (corrections != r.self_corr) {
    errors.push_back("self_corr " + std::to_string(r.self_corr) + " != correction prompts " +
                     std::to_string(corrections));
  }
  if (r.status == SessionStatus::Success && (!r.final_code || !r.final_stdout)) {
    errors.emplace_back("Success requires final_code and final_stdout");
  }
  const bool may_be_empty = r.status == SessionStatus::BaselineFailed ||
                            r.status == SessionStatus::ContextOverflow ||
                            r.status == SessionStatus::ExtractionFailed;
  if (r.attempts.empty() && !may_be_empty) {
    errors.push_back("attempts empty for status " + std::string(to_string(r.status)));
  }
  for (const auto& a : r.attempts) {
    if (a.execute && !a.compile.exit_ok) {
      errors.push_back("attempt " + std::to_string(a.index) + " executed after a failed compile");
    }
  }
  if (r.metrics) {
    for (const auto& e : validate_metrics(*r.metrics)) errors.push_back("metrics." + e);
  }
  return errors;
}

std::string iso8601_now() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

// JSON ------------------------------------------------------------------------

void to_json(json& j, const ToolResult& r) {
  j = json{{"kind", to_string(r.kind)},  {"exit_ok", r.exit_ok},
           {"exit_code", r.exit_code},   {"stdout", r.std_out},
           {"stderr", r.std_err},        {"wall_time_s", r.wall_time_s},
           {"timed_out", r.timed_out},   {"command", r.command}};
}

void from_json(const json& j, ToolResult& r) {
  r.kind = j.at("kind").get<std::string>() == "compile" ? ToolKind::Compile : ToolKind::Execute;
  j.at("exit_ok").get_to(r.exit_ok);
  r.exit_code = j.value("exit_code", -1);
  j.at("stdout").get_to(r.std_out);
  j.at("stderr").get_to(r.std_err);
  j.at("wall_time_s").get_to(r.wall_time_s);
  j.at("timed_out").get_to(r.timed_out);
  r.command = j.value("command", std::string{});
}

void to_json(json& j, const TranscriptEntry& e) {
  j = json{{"kind", to_string(e.kind)},     {"system_prompt", e.system_prompt},
           {"prompt", e.prompt},            {"response", e.response},
           {"timestamp", e.timestamp},      {"cached", e.cached}};
}

void from_json(const json& j, TranscriptEntry& e) {
  e.kind = parse_prompt_kind(j.at("kind").get<std::string>());
  j.at("system_prompt").get_to(e.system_prompt);
  j.at("prompt").get_to(e.prompt);
  j.at("response").get_to(e.response);
  j.at("timestamp").get_to(e.timestamp);
  e.cached = j.value("cached", false);
}

void to_json(json& j, const Attempt& a) {
  j = json{{"index", a.index}, {"code_path", a.code_path}, {"code", a.code}, {"compile", a.compile}};
  put_optional(j, "execute", a.execute);
}

void from_json(const json& j, Attempt& a) {
  j.at("index").get_to(a.index);
  j.at("code_path").get_to(a.code_path);
  j.at("code").get_to(a.code);
  j.at("compile").get_to(a.compile);
  get_optional(j, "execute", a.execute);
}

void to_json(json& j, const MetricsRecord& m) {
  j = json{{"runtime_generated_s", m.runtime_generated_s},
           {"runtime_source_s", m.runtime_source_s},
           {"ratio", m.ratio},
           {"sim_t", m.sim_t},
           {"sim_l", m.sim_l},
           {"self_corr", m.self_corr},
           {"output_verdict", to_string(m.output_verdict)}};
}

void from_json(const json& j, MetricsRecord& m) {
  j.at("runtime_generated_s").get_to(m.runtime_generated_s);
  j.at("runtime_source_s").get_to(m.runtime_source_s);
  j.at("ratio").get_to(m.ratio);
  j.at("sim_t").get_to(m.sim_t);
  j.at("sim_l").get_to(m.sim_l);
  j.at("self_corr").get_to(m.self_corr);
  m.output_verdict = parse_output_verdict(j.at("output_verdict").get<std::string>());
}

void to_json(json& j, const BaselineRecord& b) {
  j = json{{"steps", b.steps}, {"failed_stage", b.failed_stage}};
  put_optional(j, "target_stdout", b.target_stdout);
  put_optional(j, "target_runtime_s", b.target_runtime_s);
}

void from_json(const json& j, BaselineRecord& b) {
  j.at("steps").get_to(b.steps);
  j.at("failed_stage").get_to(b.failed_stage);
  get_optional(j, "target_stdout", b.target_stdout);
  get_optional(j, "target_runtime_s", b.target_runtime_s);
}

void to_json(json& j, const SessionRecord& s) {
  j = json{{"app_name", s.app_name},
           {"direction", s.direction.key()},
           {"llm_name", s.llm_name},
           {"model_id", s.model_id},
           {"runtime_args", s.runtime_args},
           {"transcript", s.transcript},
           {"attempts", s.attempts},
           {"status", to_string(s.status)},
           {"self_corr", s.self_corr},
           {"baseline", s.baseline},
           {"detail", s.detail}};
  put_optional(j, "final_code", s.final_code);
  put_optional(j, "final_stdout", s.final_stdout);
  put_optional(j, "final_runtime_s", s.final_runtime_s);
  put_optional(j, "metrics", s.metrics);
}

void from_json(const json& j, SessionRecord& s) {
  j.at("app_name").get_to(s.app_name);
  s.direction = Direction::parse(j.at("direction").get<std::string>());
  j.at("llm_name").get_to(s.llm_name);
  j.at("model_id").get_to(s.model_id);
  j.at("runtime_args").get_to(s.runtime_args);
  j.at("transcript").get_to(s.transcript);
  j.at("attempts").get_to(s.attempts);
  s.status = parse_session_status(j.at("status").get<std::string>());
  j.at("self_corr").get_to(s.self_corr);
  j.at("baseline").get_to(s.baseline);
  s.detail = j.value("detail", std::string{});
  get_optional(j, "final_code", s.final_code);
  get_optional(j, "final_stdout", s.final_stdout);
  get_optional(j, "final_runtime_s", s.final_runtime_s);
  get_optional(j, "metrics", s.metrics);
}

// Files -----------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const json& j, int indent) {
  return j.dump(indent, ' ', false, json::error_handler_t::replace);
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("short write to " + path.string());
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace partrans
