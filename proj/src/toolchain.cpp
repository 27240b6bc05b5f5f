// SPDX-License-Identifier: Apache-2.0
#include "partrans/toolchain.hpp"

#include <cerrno>
#include <cstring>

#include "partrans/process.hpp"

namespace fs = std::filesystem;

namespace partrans {

void ResourcePool::set_capacity(const std::string& name, int tokens) {
  std::lock_guard lock(mutex_);
  capacity_[name] = std::max(1, tokens);
  cv_.notify_all();
}

ResourcePool::Lease ResourcePool::acquire(const std::string& name) {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] {
    const auto cap = capacity_.count(name) ? capacity_[name] : 1;
    return in_use_[name] < cap;
  });
  ++in_use_[name];
  return Lease(this, name);
}

void ResourcePool::release(const std::string& name) {
  {
    std::lock_guard lock(mutex_);
    --in_use_[name];
  }
  cv_.notify_all();
}

std::vector<std::string> render_command(std::string_view tmpl,
                                        const std::map<std::string, std::string>& values,
                                        std::span<const std::string> args) {
  std::vector<std::string> argv;
  for (auto& word : split_command(tmpl)) {
    if (word == "{args}") {
      argv.insert(argv.end(), args.begin(), args.end());
      continue;
    }
    for (const auto& [name, value] : values) {
      const std::string ph = "{" + name + "}";
      for (auto pos = word.find(ph); pos != std::string::npos; pos = word.find(ph, pos + value.size())) {
        word.replace(pos, ph.size(), value);
      }
    }
    argv.push_back(std::move(word));
  }
  return argv;
}

fs::path binary_path_for(const fs::path& code_path, const fs::path& workdir) {
  return workdir / code_path.stem();
}

namespace {

std::string relative_to(const fs::path& p, const fs::path& dir) {
  std::error_code ec;
  auto rel = fs::relative(p, dir, ec);
  if (ec || rel.empty() || *rel.begin() == "..") return fs::absolute(p).string();
  return rel.string();
}

ToolResult to_tool_result(ToolKind kind, ProcessOutcome&& o, std::string command) {
  ToolResult r;
  r.kind = kind;
  r.exit_code = o.exit_code;
  r.timed_out = o.timed_out;
  r.exit_ok = !o.timed_out && o.exit_code == 0;
  r.std_out = std::move(o.std_out);
  r.std_err = std::move(o.std_err);
  r.wall_time_s = o.wall_time_s;
  r.command = std::move(command);
  if (o.term_signal != 0 && !o.timed_out) {
    if (!r.std_err.empty() && r.std_err.back() != '\n') r.std_err += '\n';
    r.std_err += "terminated by signal " + std::to_string(o.term_signal) + " (" +
                 strsignal(o.term_signal) + ")";
  }
  return r;
}

}  // namespace

std::string compile_command_text(const LanguageSpec& spec, const fs::path& code_path,
                                 const fs::path& workdir) {
  const auto bin = binary_path_for(code_path, workdir);
  return join_command(render_command(
      spec.compile_cmd, {{"src", relative_to(code_path, workdir)}, {"out", relative_to(bin, workdir)}}));
}

ToolResult compile(const fs::path& code_path, const LanguageSpec& spec, const fs::path& workdir,
                   double timeout_s) {
  if (!fs::exists(code_path)) throw PreconditionError("no such source file: " + code_path.string());
  if (!fs::is_directory(workdir)) throw PreconditionError("no such workdir: " + workdir.string());

  const auto bin = binary_path_for(code_path, workdir);
  std::error_code ec;
  fs::remove(bin, ec);
  ProcessOptions opts;
  opts.argv = render_command(spec.compile_cmd, {{"src", relative_to(code_path, workdir)},
                                                {"out", relative_to(bin, workdir)}});
  opts.cwd = workdir;
  opts.extra_env = spec.env;
  opts.timeout_s = timeout_s;
  auto outcome = run_process(opts);
  if (!outcome.launched) {
    throw ToolchainMissing("cannot launch compiler '" + opts.argv.front() + "' for " + spec.name +
                           ": " + std::strerror(outcome.launch_errno));
  }
  return to_tool_result(ToolKind::Compile, std::move(outcome), join_command(opts.argv));
}

namespace {

ToolResult run_binary(const std::string& run_cmd, const std::map<std::string, std::string>& env,
                      const fs::path& binary_path, std::span<const std::string> args,
                      double timeout_s) {
  ToolResult missing;
  missing.kind = ToolKind::Execute;
  if (!fs::exists(binary_path)) {
    missing.std_err = "binary not found: " + binary_path.string();
    return missing;
  }
  std::error_code ec;
  fs::permissions(binary_path,
                  fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                  fs::perm_options::add, ec);

  const auto abs = fs::absolute(binary_path);
  ProcessOptions opts;
  opts.argv = render_command(run_cmd, {{"bin", abs.string()}}, args);
  opts.cwd = abs.parent_path();
  opts.extra_env = env;
  opts.timeout_s = timeout_s;
  auto outcome = run_process(opts);
  if (!outcome.launched) {
    missing.std_err = "cannot launch '" + opts.argv.front() + "': " + std::strerror(outcome.launch_errno);
    missing.command = join_command(opts.argv);
    return missing;
  }
  return to_tool_result(ToolKind::Execute, std::move(outcome), join_command(opts.argv));
}

}  // namespace

ToolResult execute(const fs::path& binary_path, std::span<const std::string> args, double timeout_s) {
  return run_binary("{bin} {args}", {}, binary_path, args, timeout_s);
}

ToolResult execute(const LanguageSpec& spec, const fs::path& binary_path,
                   std::span<const std::string> args, double timeout_s) {
  return run_binary(spec.run_cmd, spec.env, binary_path, args, timeout_s);
}

double measure_runtime(const fs::path& binary_path, std::span<const std::string> args,
                       const RuntimeOptions& options) {
  if (options.n_runs < 1) throw PreconditionError("measure_runtime needs n_runs >= 1");
  std::optional<ResourcePool::Lease> lease;
  if (options.resources) lease.emplace(options.resources->acquire(kTimingResource));
  double total = 0.0;
  for (int i = 0; i < options.n_runs; ++i) {
    auto r = options.spec ? execute(*options.spec, binary_path, args, options.timeout_s)
                          : execute(binary_path, args, options.timeout_s);
    if (!r.exit_ok) {
      throw RunFailed("timing run " + std::to_string(i + 1) + " of " + binary_path.string() +
                          " failed",
                      std::move(r));
    }
    total += r.wall_time_s;
  }
  return total / options.n_runs;
}

BaselineRecord validate_baseline(const TranslationTask& task, const fs::path& workdir,
                                 const BaselineOptions& options) {
  fs::create_directories(workdir);
  BaselineRecord record;

  auto fail = [&](const std::string& stage, const ToolResult& r) {
    record.failed_stage = stage;
    throw BaselineFailed(stage, r, record);
  };

  auto build_and_run = [&](const std::string& role, const LanguageSpec& spec,
                           const std::string& code) -> std::pair<fs::path, ToolResult> {
    const auto path = workdir / ("baseline_" + role + spec.file_extension);
    write_text_file(path, code);
    auto c = compile(path, spec, workdir, options.compile_timeout_s);
    record.steps.push_back(c);
    if (!c.exit_ok) fail(role + " compile", c);
    const auto bin = binary_path_for(path, workdir);
    auto e = execute(spec, bin, task.runtime_args, options.exec_timeout_s);
    record.steps.push_back(e);
    if (!e.exit_ok) fail(role + " execute", e);
    return {bin, e};
  };

  build_and_run("source", task.source, task.source_code);

  if (task.reference_target_code) {
    auto [bin, run] = build_and_run("target", task.target, *task.reference_target_code);
    record.target_stdout = run.std_out;
    try {
      RuntimeOptions ro;
      ro.n_runs = options.n_runtime_runs;
      ro.timeout_s = options.exec_timeout_s;
      ro.spec = &task.target;
      ro.resources = options.resources;
      record.target_runtime_s = measure_runtime(bin, task.runtime_args, ro);
    } catch (const RunFailed& e) {
      fail("target timing", e.result());
    }
  }
  return record;
}

}  // namespace partrans
