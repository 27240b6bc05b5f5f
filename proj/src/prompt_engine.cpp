// SPDX-License-Identifier: Apache-2.0
#include "partrans/prompt_engine.hpp"

#include <cctype>
#include <cstdio>
#include <mutex>
#include <set>
#include <vector>

#include "partrans/errors.hpp"

namespace partrans {

namespace {

constexpr const char* kGeneralSystem =
    "You are a professional coding AI assistant that specializes in translating parallelized "
    "code between coding frameworks.";

constexpr const char* kSystemCudaToOpenmp =
    "You are a professional coding AI assistant that specializes in translating parallelized "
    "CUDA code to C++ code using OpenMP directives. Always provide the complete and fully "
    "functional translated code without placeholders, comments, or references suggesting that "
    "parts of the original code should be included. Ensure every part of the translated code is "
    "explicitly written out. Surround your new generated code with the three characters```.";

constexpr const char* kSystemOpenmpToCuda =
    "You are a professional coding AI assistant that specializes in translating parallelized "
    "C++ code using OpenMP directives to the CUDA framework. Always provide the complete and "
    "fully functional translated code without placeholders, comments, or references suggesting "
    "that parts of the original code should be included. Ensure every part of the translated "
    "code is explicitly written out. Surround your new generated code with the three characters "
    "```.";

constexpr const char* kTranslateOpenmpToCuda =
    "Generate new code to refactor the following parallelized C++ program written with OpenMP to "
    "instead use the CUDA framework. Provide the complete translated CUDA code without any "
    "placeholders, comments, or references suggesting that parts of the original code should be "
    "included. Every part of the translated code should be explicitly written out. Avoid "
    "explanation of the code.";

constexpr const char* kTranslateCudaToOpenmp =
    "Generate new code to refactor the following parallelized CUDA program to instead use C++ "
    "code written with OpenMP directives. To enable GPU offloading, use the 'omp pragma' "
    "directive 'target teams' for distributing 'for' loop computations. Use static scheduling "
    "when needed and avoid dynamic scheduling. Provide the complete translated C++ code without "
    "any placeholders, comments, or references suggesting that parts of the original code should "
    "be included. Every part of the translated code should be explicitly written out. Avoid "
    "explanation of the code.";

constexpr const char* kGeneration =
    "{knowledge}\n\n{knowledge_summary}\n\nThink carefully before developing the following code "
    "that you describe as: {description}. Now, {translation_prompt}: {source_code}";

constexpr const char* kCompileError =
    "{code}\n-- The above code was compiled with {compiler_cmd} and produced the following "
    "compile error: {stderr}. Re-factor the above code with a fix to eliminate the stated error.";

constexpr const char* kExecError =
    "{code}\n-- The above code was executed after a successful compile with {compiler_cmd} and "
    "produced the following execution error: {stderr}. Re-factor the above code with a fix to "
    "eliminate the stated error.";

constexpr const char* kSummarizeKnowledge =
    "Summarize the following {language} programming knowledge. Keep the details you will need "
    "to write correct, efficient {language} code.\n\n{knowledge}";

constexpr const char* kDescribeSource =
    "Describe what the following {language} code does, including how its computation is "
    "parallelized. Be concise and do not rewrite the code.\n\n{source_code}";

bool is_name_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) || c == '_';
}

// Placeholder names in order of appearance.
std::vector<std::string> placeholders(std::string_view tmpl) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < tmpl.size() && is_name_char(tmpl[j])) ++j;
    if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
      names.emplace_back(tmpl.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return names;
}

void check_template(std::vector<std::string>& errors, std::string_view field,
                    std::string_view tmpl, const std::vector<std::string>& allowed,
                    const std::vector<std::string>& required_in_order) {
  const auto found = placeholders(tmpl);
  const std::set<std::string> allowed_set(allowed.begin(), allowed.end());
  for (const auto& name : found) {
    if (!allowed_set.count(name)) {
      errors.push_back(std::string(field) + ": unknown placeholder {" + name + "}");
    }
  }
  std::size_t next = 0;
  for (const auto& name : found) {
    if (next < required_in_order.size() && name == required_in_order[next]) ++next;
  }
  if (next < required_in_order.size()) {
    std::string want;
    for (const auto& r : required_in_order) want += "{" + r + "} ";
    errors.push_back(std::string(field) + ": must contain " + want + "in this order");
  }
}

std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

std::string correction_prompt(std::string_view tmpl, std::string_view code,
                              std::string_view compiler_cmd, std::string stderr_text,
                              std::optional<std::size_t> budget, const TokenEstimator& estimator) {
  if (budget) stderr_text = truncate_keep_tail(stderr_text, *budget, estimator, kTruncationMarker);
  return render_template(tmpl, {{"code", std::string(code)},
                                {"compiler_cmd", std::string(compiler_cmd)},
                                {"stderr", std::move(stderr_text)}});
}

}  // namespace

PromptDictionary PromptDictionary::defaults() {
  PromptDictionary d;
  d.general_system = kGeneralSystem;
  d.directions["cuda:openmp"] = {kSystemCudaToOpenmp, kTranslateCudaToOpenmp};
  d.directions["openmp:cuda"] = {kSystemOpenmpToCuda, kTranslateOpenmpToCuda};
  d.generation = kGeneration;
  d.compile_error = kCompileError;
  d.exec_error = kExecError;
  d.summarize_knowledge = kSummarizeKnowledge;
  d.describe_source = kDescribeSource;
  return d;
}

PromptDictionary PromptDictionary::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("prompt dictionary must be a JSON object");
  PromptDictionary d = defaults();
  auto take = [&](const char* key, std::string& field) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_string()) throw ConfigError(std::string("prompt key '") + key + "' must be a string");
      field = it->get<std::string>();
    }
  };
  take("general_system", d.general_system);
  take("generation", d.generation);
  take("compile_error", d.compile_error);
  take("exec_error", d.exec_error);
  take("summarize_knowledge", d.summarize_knowledge);
  take("describe_source", d.describe_source);
  if (auto it = doc.find("directions"); it != doc.end()) {
    if (!it->is_object()) throw ConfigError("'directions' must be an object");
    d.directions.clear();
    for (const auto& [key, entry] : it->items()) {
      Direction::parse(key);
      if (!entry.is_object() || !entry.contains("system") || !entry.contains("translate")) {
        throw ConfigError("direction '" + key + "' needs 'system' and 'translate' strings");
      }
      d.directions[key] = {entry.at("system").get<std::string>(),
                           entry.at("translate").get<std::string>()};
    }
  }
  d.validate();
  return d;
}

PromptDictionary PromptDictionary::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse prompt dictionary " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return from_json(doc);
}

json PromptDictionary::to_json() const {
  json dirs = json::object();
  for (const auto& [key, p] : directions) dirs[key] = {{"system", p.system}, {"translate", p.translate}};
  return json{{"general_system", general_system},
              {"generation", generation},
              {"compile_error", compile_error},
              {"exec_error", exec_error},
              {"summarize_knowledge", summarize_knowledge},
              {"describe_source", describe_source},
              {"directions", dirs}};
}

void PromptDictionary::validate() const {
  std::vector<std::string> errors;
  const std::vector<std::string> gen = {"knowledge", "knowledge_summary", "description",
                                        "translation_prompt", "source_code"};
  const std::vector<std::string> corr = {"code", "compiler_cmd", "stderr"};
  check_template(errors, "generation", generation, gen, gen);
  check_template(errors, "compile_error", compile_error, corr, corr);
  check_template(errors, "exec_error", exec_error, corr, corr);
  check_template(errors, "summarize_knowledge", summarize_knowledge, {"language", "knowledge"},
                 {"knowledge"});
  check_template(errors, "describe_source", describe_source, {"language", "source_code"},
                 {"source_code"});
  if (directions.empty()) errors.emplace_back("directions: at least one direction required");
  if (errors.empty()) return;
  std::string message = "invalid prompt dictionary:";
  for (const auto& e : errors) message += "\n  " + e;
  throw ConfigError(message);
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && is_name_char(tmpl[j])) ++j;
      if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
        const auto name = tmpl.substr(i + 1, j - i - 1);
        auto it = values.find(name);
        if (it == values.end()) {
          throw ConfigError("template placeholder {" + std::string(name) + "} has no value");
        }
        out += it->second;
        i = j;
        continue;
      }
    }
    out += tmpl[i];
  }
  return out;
}

std::string system_prompt(const PromptDictionary& dict, const Direction& direction) {
  auto it = dict.directions.find(direction.key());
  if (it == dict.directions.end()) throw UnknownDirection(direction.key());
  return it->second.system;
}

std::string translation_prompt(const PromptDictionary& dict, const Direction& direction) {
  auto it = dict.directions.find(direction.key());
  if (it == dict.directions.end()) throw UnknownDirection(direction.key());
  return it->second.translate;
}

PromptBundle assemble_translation_prompt(const PromptDictionary& dict, const PromptParts& parts,
                                         std::string_view source_code, const Direction& direction,
                                         const LlmProfile& profile,
                                         const TokenEstimator& estimator) {
  if (parts.knowledge_text.empty() || parts.knowledge_summary.empty() ||
      parts.source_description.empty() || source_code.empty()) {
    throw PreconditionError("translation prompt parts must all be nonempty");
  }
  PromptBundle bundle;
  bundle.knowledge_text = parts.knowledge_text;
  bundle.knowledge_summary = parts.knowledge_summary;
  bundle.source_description = parts.source_description;
  bundle.translation_prompt = translation_prompt(dict, direction);
  bundle.assembled = render_template(dict.generation,
                                     {{"knowledge", parts.knowledge_text},
                                      {"knowledge_summary", parts.knowledge_summary},
                                      {"description", parts.source_description},
                                      {"translation_prompt", bundle.translation_prompt},
                                      {"source_code", std::string(source_code)}});
  bundle.token_estimate = estimator(bundle.assembled);
  const std::size_t needed = bundle.token_estimate + profile.max_response_tokens;
  if (needed > profile.context_length) throw ContextOverflow(needed, profile.context_length);
  return bundle;
}

std::string compile_error_prompt(const PromptDictionary& dict, std::string_view code,
                                 std::string_view compiler_cmd, std::string_view stderr_text,
                                 std::optional<std::size_t> stderr_budget,
                                 const TokenEstimator& estimator) {
  if (stderr_text.empty()) throw PreconditionError("compile error prompt needs stderr text");
  return correction_prompt(dict.compile_error, code, compiler_cmd, std::string(stderr_text),
                           stderr_budget, estimator);
}

std::string exec_error_prompt(const PromptDictionary& dict, std::string_view code,
                              std::string_view compiler_cmd, std::string_view stderr_text,
                              std::optional<std::size_t> stderr_budget,
                              const TokenEstimator& estimator) {
  std::string text = stderr_text.empty() ? std::string(kEmptyExecStderr) : std::string(stderr_text);
  return correction_prompt(dict.exec_error, code, compiler_cmd, std::move(text), stderr_budget,
                           estimator);
}

std::string execution_error_text(const ToolResult& result, double timeout_s) {
  if (result.timed_out) return "execution timed out after " + format_seconds(timeout_s) + "s";
  if (result.std_err.empty()) return std::string(kEmptyExecStderr);
  return result.std_err;
}

std::size_t error_text_budget(const LlmProfile& profile, std::size_t fixed_tokens) {
  const std::size_t spent = profile.max_response_tokens + fixed_tokens;
  if (spent >= profile.context_length) return 0;
  return (profile.context_length - spent) / 4;
}

PromptEngine::PromptEngine(PromptDictionary dict, TokenEstimator estimator)
    : dict_(std::move(dict)), estimator_(std::move(estimator)) {
  dict_.validate();
}

namespace {

std::string cache_key(const LlmProfile& profile, const KnowledgeAsset& asset) {
  return profile.model_id + "|" + asset.digest();
}

}  // namespace

bool PromptEngine::has_cached_summary(const LlmProfile& profile,
                                      const KnowledgeAsset& asset) const {
  std::shared_lock lock(cache_mutex_);
  return summary_cache_.count(cache_key(profile, asset)) > 0;
}

Exchange PromptEngine::summarize_knowledge(Backend& backend, const LlmProfile& profile,
                                           const KnowledgeAsset& asset) {
  Exchange ex;
  ex.system_prompt = dict_.general_system;
  ex.prompt = render_template(dict_.summarize_knowledge,
                              {{"language", asset.language}, {"knowledge", asset.text}});
  const auto key = cache_key(profile, asset);
  {
    std::shared_lock lock(cache_mutex_);
    if (auto it = summary_cache_.find(key); it != summary_cache_.end()) {
      ex.response = it->second;
      ex.cached = true;
      return ex;
    }
  }
  ex.response = backend.complete(make_request(profile, ex.system_prompt, ex.prompt), profile).text;
  std::unique_lock lock(cache_mutex_);
  // first writer wins so every later reader sees one value
  auto [it, inserted] = summary_cache_.emplace(key, ex.response);
  if (!inserted) ex.response = it->second;
  return ex;
}

Exchange PromptEngine::describe_source(Backend& backend, const LlmProfile& profile,
                                       std::string_view source_code, std::string_view language) {
  if (source_code.empty()) throw PreconditionError("cannot describe empty source code");
  Exchange ex;
  ex.system_prompt = dict_.general_system;
  ex.prompt = render_template(dict_.describe_source, {{"language", std::string(language)},
                                                      {"source_code", std::string(source_code)}});
  ex.response = backend.complete(make_request(profile, ex.system_prompt, ex.prompt), profile).text;
  return ex;
}

}  // namespace partrans
