// SPDX-License-Identifier: Apache-2.0
#include "partrans/config.hpp"

#include <regex>
#include <set>

#include "partrans/errors.hpp"
#include "partrans/toolchain.hpp"

namespace fs = std::filesystem;

namespace partrans {

const LlmProfile& AppConfig::llm(std::string_view name) const {
  for (const auto& p : llms) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : llms) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown llm '" + std::string(name) + "' (configured: " + known + ")");
}

const LanguageSpec& AppConfig::language(std::string_view name) const {
  if (const auto it = languages.find(std::string(name)); it != languages.end()) return it->second;
  throw ConfigError("unknown language '" + std::string(name) + "'");
}

namespace {

// Collects problems instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(fs::path base) : base_(std::move(base)) {}

  std::vector<std::string> errors;

  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    return (path.is_absolute() ? path : base_ / path).lexically_normal();
  }

  void allow_only(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.count(k)) errors.push_back(where + ": unknown key '" + k + "'");
    }
  }

  template <typename T>
  void take(const json& obj, const char* key, T& field, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return;
    try {
      field = it->get<T>();
    } catch (const json::exception&) {
      errors.push_back(where + "." + key + ": wrong type");
    }
  }

 private:
  fs::path base_;
};

LanguageSpec read_language(Reader& r, const std::string& name, const json& j) {
  const std::string where = "languages." + name;
  LanguageSpec spec;
  spec.name = name;
  if (!j.is_object()) {
    r.errors.push_back(where + ": must be an object");
    return spec;
  }
  r.allow_only(j, where, {"file_extension", "compile_cmd", "run_cmd", "knowledge", "env"});
  r.take(j, "file_extension", spec.file_extension, where);
  r.take(j, "compile_cmd", spec.compile_cmd, where);
  r.take(j, "run_cmd", spec.run_cmd, where);
  r.take(j, "env", spec.env, where);
  std::string knowledge;
  r.take(j, "knowledge", knowledge, where);
  if (knowledge.empty()) {
    r.errors.push_back(where + ".knowledge: path to a knowledge text file is required");
  } else {
    try {
      spec.knowledge = std::make_shared<const KnowledgeAsset>(KnowledgeAsset::load(name, r.resolve(knowledge)));
    } catch (const std::exception& e) {
      r.errors.push_back(where + ".knowledge: " + e.what());
    }
  }
  for (const auto& e : validate_language_spec(spec)) r.errors.push_back(where + ": " + e);
  return spec;
}

LlmProfile read_llm(Reader& r, std::size_t index, const json& j) {
  std::string where = "llms[" + std::to_string(index) + "]";
  LlmProfile p;
  if (!j.is_object()) {
    r.errors.push_back(where + ": must be an object");
    return p;
  }
  r.allow_only(j, where, {"name", "model_id", "context_length", "max_response_tokens", "temperature", "backend"});
  r.take(j, "name", p.name, where);
  if (!p.name.empty()) where += " (" + p.name + ")";
  r.take(j, "model_id", p.model_id, where);
  if (p.model_id.empty()) p.model_id = p.name;
  r.take(j, "context_length", p.context_length, where);
  r.take(j, "max_response_tokens", p.max_response_tokens, where);
  r.take(j, "temperature", p.temperature, where);

  const auto b = j.find("backend");
  if (b == j.end() || !b->is_object()) {
    r.errors.push_back(where + ".backend: required object");
  } else {
    const auto bw = where + ".backend";
    r.allow_only(*b, bw, {"kind", "url", "api_key_env", "max_retries", "retry_backoff_s", "request_timeout_s",
                          "replies", "script", "script_dir"});
    auto& d = p.backend;
    r.take(*b, "kind", d.kind, bw);
    r.take(*b, "url", d.url, bw);
    r.take(*b, "api_key_env", d.api_key_env, bw);
    r.take(*b, "max_retries", d.max_retries, bw);
    r.take(*b, "retry_backoff_s", d.retry_backoff_s, bw);
    r.take(*b, "request_timeout_s", d.request_timeout_s, bw);
    r.take(*b, "replies", d.replies, bw);
    std::string script, script_dir;
    r.take(*b, "script", script, bw);
    r.take(*b, "script_dir", script_dir, bw);
    if (!script.empty()) d.script_file = r.resolve(script);
    if (!script_dir.empty()) d.script_dir = r.resolve(script_dir);
    if (d.max_retries < 0) r.errors.push_back(bw + ".max_retries: must be >= 0");
  }
  for (const auto& e : validate_llm_profile(p)) r.errors.push_back(where + ": " + e);
  return p;
}

void read_loop(Reader& r, const json& j, LoopConfig& loop) {
  if (!j.is_object()) {
    r.errors.emplace_back("loop: must be an object");
    return;
  }
  r.allow_only(j, "loop",
               {"max_self_corr", "compile_timeout_s", "exec_timeout_s", "n_runtime_runs",
                "max_consecutive_extraction_failures"});
  r.take(j, "max_self_corr", loop.max_self_corr, "loop");
  r.take(j, "compile_timeout_s", loop.compile_timeout_s, "loop");
  r.take(j, "exec_timeout_s", loop.exec_timeout_s, "loop");
  r.take(j, "n_runtime_runs", loop.n_runtime_runs, "loop");
  r.take(j, "max_consecutive_extraction_failures", loop.max_consecutive_extraction_failures, "loop");
}

void read_compare(Reader& r, const json& j, OutputCompareOptions& c) {
  if (!j.is_object()) {
    r.errors.emplace_back("compare: must be an object");
    return;
  }
  r.allow_only(j, "compare", {"mode", "timing_patterns", "rel_tol"});
  std::string mode;
  r.take(j, "mode", mode, "compare");
  if (!mode.empty()) {
    try {
      c.mode = parse_compare_mode(mode);
    } catch (const Error& e) {
      r.errors.push_back(std::string("compare.mode: ") + e.what());
    }
  }
  r.take(j, "timing_patterns", c.timing_patterns, "compare");
  r.take(j, "rel_tol", c.rel_tol, "compare");
  for (const auto& p : c.timing_patterns) {
    try {
      std::regex re(p);
    } catch (const std::regex_error&) {
      r.errors.push_back("compare.timing_patterns: invalid regex '" + p + "'");
    }
  }
  if (c.rel_tol < 0) r.errors.emplace_back("compare.rel_tol: must be >= 0");
}

}  // namespace

AppConfig parse_config(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  Reader r(base_dir);
  AppConfig cfg;
  r.allow_only(doc, "config",
               {"languages", "llms", "prompts", "loop", "compare", "manifest", "directions", "resources",
                "workers"});

  if (const auto it = doc.find("languages"); it != doc.end() && it->is_object() && !it->empty()) {
    for (const auto& [name, j] : it->items()) cfg.languages[name] = read_language(r, name, j);
  } else {
    r.errors.emplace_back("languages: need a nonempty object");
  }

  if (const auto it = doc.find("llms"); it != doc.end() && it->is_array() && !it->empty()) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < it->size(); ++i) {
      cfg.llms.push_back(read_llm(r, i, (*it)[i]));
      if (!cfg.llms.back().name.empty() && !names.insert(cfg.llms.back().name).second) {
        r.errors.push_back("llms: duplicate name '" + cfg.llms.back().name + "'");
      }
    }
  } else {
    r.errors.emplace_back("llms: need a nonempty array");
  }

  std::string prompts;
  r.take(doc, "prompts", prompts, "config");
  if (!prompts.empty()) {
    try {
      cfg.prompts = PromptDictionary::load(r.resolve(prompts));
    } catch (const std::exception& e) {
      r.errors.push_back(std::string("prompts: ") + e.what());
    }
  }

  if (const auto it = doc.find("loop"); it != doc.end()) read_loop(r, *it, cfg.loop);
  if (const auto it = doc.find("compare"); it != doc.end()) read_compare(r, *it, cfg.loop.compare);
  try {
    cfg.loop.validate();
  } catch (const ConfigError& e) {
    r.errors.emplace_back(e.what());
  }

  std::string manifest;
  r.take(doc, "manifest", manifest, "config");
  if (!manifest.empty()) cfg.manifest = r.resolve(manifest);

  std::vector<std::string> directions;
  r.take(doc, "directions", directions, "config");
  for (const auto& key : directions) {
    try {
      const auto d = Direction::parse(key);
      for (const auto& lang : {d.source, d.target}) {
        if (!cfg.languages.count(lang)) r.errors.push_back("directions: " + key + " uses unknown language " + lang);
      }
      if (!cfg.prompts.directions.count(d.key())) {
        r.errors.push_back("directions: no prompts for " + key + " in the prompt dictionary");
      }
      cfg.directions.push_back(d);
    } catch (const Error& e) {
      r.errors.push_back(std::string("directions: ") + e.what());
    }
  }

  r.take(doc, "resources", cfg.resources, "config");
  r.take(doc, "workers", cfg.workers, "config");
  if (cfg.workers < 1) r.errors.emplace_back("workers: must be >= 1");

  if (!r.errors.empty()) {
    std::string message = "invalid config:";
    for (const auto& e : r.errors) message += "\n  " + e;
    throw ConfigError(message);
  }
  return cfg;
}

AppConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config not found: " + path.string());
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " does not parse: " + e.what());
  }
  auto cfg = parse_config(doc, fs::absolute(path).parent_path());
  cfg.path = fs::absolute(path);
  return cfg;
}

std::string config_hash(const AppConfig& cfg) {
  json langs = json::object();
  for (const auto& [name, s] : cfg.languages) {
    langs[name] = {{"file_extension", s.file_extension},
                   {"compile_cmd", s.compile_cmd},
                   {"run_cmd", s.run_cmd},
                   {"env", s.env},
                   {"knowledge", s.knowledge ? s.knowledge->digest() : ""}};
  }
  json llms = json::array();
  for (const auto& p : cfg.llms) {
    llms.push_back({{"name", p.name},
                    {"model_id", p.model_id},
                    {"context_length", p.context_length},
                    {"max_response_tokens", p.max_response_tokens},
                    {"temperature", p.temperature},
                    {"kind", p.backend.kind},
                    {"url", p.backend.url}});
  }
  const json doc{{"languages", langs}, {"llms", llms}, {"prompts", cfg.prompts.to_json()},
                 {"loop", cfg.loop.to_json()}};
  return fnv1a_hex(doc.dump());
}

}  // namespace partrans
