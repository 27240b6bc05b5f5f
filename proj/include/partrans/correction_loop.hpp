// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "partrans/domain.hpp"
#include "partrans/llm_backend.hpp"
#include "partrans/metrics.hpp"
#include "partrans/prompt_engine.hpp"
#include "partrans/toolchain.hpp"

namespace partrans {

struct LoopConfig {
  int max_self_corr = 50;
  double compile_timeout_s = kDefaultCompileTimeoutS;
  double exec_timeout_s = kDefaultExecTimeoutS;
  int n_runtime_runs = 3;
  int max_consecutive_extraction_failures = 2;
  OutputCompareOptions compare;

  /// Throws ConfigError.
  void validate() const;
  json to_json() const;
};

struct PipelineContext {
  Backend& backend;
  PromptEngine& prompts;
  std::filesystem::path workdir;
  ResourcePool* resources = nullptr;
  std::function<void(const std::string&)> log;
};

/**
 * Runs one translation session:
 *
 *   baseline -> knowledge summary + source description -> generate ->
 *   compile (on error: correct, regenerate, compile again) ->
 *   execute (on error: correct, regenerate, back to compile) ->
 *   store stdout, time the binary, score it.
 *
 * Every correction prompt counts toward self_corr; a correction that would
 * push it past max_self_corr ends the session with CompileBudgetExceeded or
 * ExecBudgetExceeded. Terminal outcomes are encoded in the record; only
 * configuration problems, backend transport failures and a missing toolchain
 * propagate as exceptions.
 *
 * Attempts are written as `<app>__attempt<N>.<ext>` under the workdir; on
 * success the final stdout goes to `<app>__metadata.json`.
 */
SessionRecord run_pipeline(const TranslationTask& task, const LoopConfig& cfg, PipelineContext& ctx);

/// Path of the metadata file written on success.
std::filesystem::path metadata_path(const std::filesystem::path& workdir, const std::string& app);

/// session.json plus a readable transcript.log.
void write_session_files(const SessionRecord& record, const std::filesystem::path& dir);

}  // namespace partrans
