// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the `partrans` executable. They take their
// streams, backend factory and stop flag from CliEnv so tests can drive them
// in-process.
#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "partrans/bench.hpp"
#include "partrans/llm_backend.hpp"

namespace partrans {

namespace exit_code {
inline constexpr int kOk = 0;
// validate / translate
inline constexpr int kBaselineFailed = 1;
inline constexpr int kConfig = 2;
inline constexpr int kCompileBudget = 3;
inline constexpr int kExecBudget = 4;
inline constexpr int kExtraction = 5;
inline constexpr int kContextOverflow = 6;
inline constexpr int kBackend = 7;
// bench
inline constexpr int kInfra = 1;
inline constexpr int kManifest = 4;
// report
inline constexpr int kRows = 5;
// any command
inline constexpr int kInterrupted = 130;
}  // namespace exit_code

int exit_code_for(SessionStatus status);

/// Text for --help.
std::string exit_code_table();

struct CliEnv {
  std::ostream& out;
  std::ostream& err;
  BackendFactory factory = make_backend;
  std::atomic<bool>* stop = nullptr;
};

struct ValidateArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::string> app;
  std::optional<std::string> direction;
  std::optional<std::filesystem::path> out_dir;  // default: a temporary directory
};

struct TranslateArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> manifest;
  std::string app;
  std::string direction;
  std::string llm;
  std::filesystem::path out_dir;
  std::optional<int> max_self_corr;
};

struct BenchArgs {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> manifest;
  std::filesystem::path out_dir;
  std::optional<int> workers;
  std::optional<std::string> llm;        // restrict to one profile
  std::optional<std::string> direction;  // restrict to one direction
  std::optional<std::string> app;        // restrict to one app
  std::optional<int> max_self_corr;
  std::optional<std::filesystem::path> replay;  // directory of published tables
  SummaryOptions summary;
};

struct ReportArgs {
  std::filesystem::path results_dir;
  std::optional<ReportFormat> format;  // set: print that report to stdout
  SummaryOptions summary;
};

int cmd_validate(const ValidateArgs& args, CliEnv& env);
int cmd_translate(const TranslateArgs& args, CliEnv& env);
int cmd_bench(const BenchArgs& args, CliEnv& env);
int cmd_report(const ReportArgs& args, CliEnv& env);

/// Rows for a directory of published tables: `index.json` names the
/// runtimes file and the result tables in order.
std::vector<ResultRow> replay_rows(const std::filesystem::path& dir);

}  // namespace partrans
