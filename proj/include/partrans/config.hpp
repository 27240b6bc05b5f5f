// SPDX-License-Identifier: Apache-2.0
//
// One JSON document declares languages, LLM profiles, prompts, loop limits
// and the benchmark manifest. Relative paths resolve against the directory
// holding the config file.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "partrans/correction_loop.hpp"
#include "partrans/domain.hpp"
#include "partrans/prompt_engine.hpp"

namespace partrans {

struct AppConfig {
  std::filesystem::path path;
  std::map<std::string, LanguageSpec> languages;
  std::vector<LlmProfile> llms;  // file order
  PromptDictionary prompts = PromptDictionary::defaults();
  LoopConfig loop;
  std::optional<std::filesystem::path> manifest;
  std::vector<Direction> directions;
  std::map<std::string, int> resources;
  int workers = 1;

  /// Throws ConfigError for an unknown name.
  const LlmProfile& llm(std::string_view name) const;
  const LanguageSpec& language(std::string_view name) const;
};

/// Throws ConfigError listing every problem found.
AppConfig parse_config(const json& doc, const std::filesystem::path& base_dir);
AppConfig load_config(const std::filesystem::path& path);

/// FNV-1a digest of everything that influences a session's outcome:
/// languages (with knowledge digests), profiles, prompts and loop limits.
/// API keys are not part of the config, so they cannot leak into it.
std::string config_hash(const AppConfig& cfg);

}  // namespace partrans
