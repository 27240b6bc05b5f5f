// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "partrans/domain.hpp"
#include "partrans/errors.hpp"

namespace partrans {

inline constexpr double kDefaultCompileTimeoutS = 120.0;
inline constexpr double kDefaultExecTimeoutS = 300.0;

class RunFailed : public Error {
 public:
  RunFailed(const std::string& what, ToolResult result) : Error(what), result_(std::move(result)) {}
  const ToolResult& result() const noexcept { return result_; }

 private:
  ToolResult result_;
};

class BaselineFailed : public Error {
 public:
  BaselineFailed(std::string stage, ToolResult result, BaselineRecord record)
      : Error("baseline failed at " + stage),
        stage_(std::move(stage)),
        result_(std::move(result)),
        record_(std::move(record)) {}

  const std::string& stage() const noexcept { return stage_; }
  const ToolResult& result() const noexcept { return result_; }
  const BaselineRecord& record() const noexcept { return record_; }

 private:
  std::string stage_;
  ToolResult result_;
  BaselineRecord record_;
};

/// Named counting locks, e.g. one token per accelerator, so timed runs are not
/// perturbed by co-running jobs. Unknown names get capacity 1.
class ResourcePool {
 public:
  class Lease {
   public:
    Lease(ResourcePool* pool, std::string name) : pool_(pool), name_(std::move(name)) {}
    Lease(Lease&& other) noexcept : pool_(other.pool_), name_(std::move(other.name_)) {
      other.pool_ = nullptr;
    }
    Lease& operator=(Lease&&) = delete;
    ~Lease() {
      if (pool_) pool_->release(name_);
    }

   private:
    ResourcePool* pool_;
    std::string name_;
  };

  void set_capacity(const std::string& name, int tokens);
  [[nodiscard]] Lease acquire(const std::string& name);

 private:
  void release(const std::string& name);

  std::mutex mutex_;
  std::condition_variable cv_;
  std::map<std::string, int> capacity_;
  std::map<std::string, int> in_use_;
};

inline constexpr const char* kTimingResource = "accelerator";

/// Expands a command template into argv. `{args}` as a whole word expands to
/// `args`; other placeholders are substituted inside words.
std::vector<std::string> render_command(std::string_view tmpl,
                                        const std::map<std::string, std::string>& values,
                                        std::span<const std::string> args = {});

/// `<workdir>/<stem of code_path>`
std::filesystem::path binary_path_for(const std::filesystem::path& code_path,
                                      const std::filesystem::path& workdir);

/// The compile command as it would be run for `code_path`, paths relative to
/// the working directory. This is what correction prompts quote.
std::string compile_command_text(const LanguageSpec& spec, const std::filesystem::path& code_path,
                                 const std::filesystem::path& workdir);

/// Compiles inside `workdir`. Compile errors come back as data; a missing
/// compiler binary throws ToolchainMissing.
ToolResult compile(const std::filesystem::path& code_path, const LanguageSpec& spec,
                   const std::filesystem::path& workdir,
                   double timeout_s = kDefaultCompileTimeoutS);

/// Marks the binary executable and runs it from its own directory.
ToolResult execute(const std::filesystem::path& binary_path, std::span<const std::string> args,
                   double timeout_s = kDefaultExecTimeoutS);

/// As above, launching through the spec's run command and environment.
ToolResult execute(const LanguageSpec& spec, const std::filesystem::path& binary_path,
                   std::span<const std::string> args, double timeout_s = kDefaultExecTimeoutS);

struct RuntimeOptions {
  int n_runs = 3;
  double timeout_s = kDefaultExecTimeoutS;
  const LanguageSpec* spec = nullptr;
  ResourcePool* resources = nullptr;
};

/// Mean wall time over sequential runs. Throws RunFailed on the first failing
/// run.
double measure_runtime(const std::filesystem::path& binary_path, std::span<const std::string> args,
                       const RuntimeOptions& options = {});

struct BaselineOptions {
  double compile_timeout_s = kDefaultCompileTimeoutS;
  double exec_timeout_s = kDefaultExecTimeoutS;
  int n_runtime_runs = 3;
  ResourcePool* resources = nullptr;
};

/// Compiles and runs the source code and, when present, the reference target
/// code. Captures the target stdout and mean runtime. Any failure throws
/// BaselineFailed naming the stage ("source compile", "source execute",
/// "target compile", "target execute", "target timing").
BaselineRecord validate_baseline(const TranslationTask& task, const std::filesystem::path& workdir,
                                 const BaselineOptions& options = {});

}  // namespace partrans
