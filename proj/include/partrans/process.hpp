// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace partrans {

struct ProcessOptions {
  std::vector<std::string> argv;
  std::filesystem::path cwd;
  std::map<std::string, std::string> extra_env;
  double timeout_s = 0.0;  // <= 0 disables the timeout
};

struct ProcessOutcome {
  bool launched = false;  // false when exec itself failed
  int launch_errno = 0;
  int exit_code = -1;     // -1 unless the child exited normally
  int term_signal = 0;
  bool timed_out = false;
  std::string std_out;
  std::string std_err;
  double wall_time_s = 0.0;
};

/// Runs argv[0] (PATH lookup, no shell) with both streams captured. On
/// timeout the whole process group is killed.
ProcessOutcome run_process(const ProcessOptions& options);

/// Whitespace split honouring single and double quotes.
std::vector<std::string> split_command(std::string_view command);

/// Joins argv for display, quoting words that contain whitespace.
std::string join_command(const std::vector<std::string>& argv);

}  // namespace partrans
