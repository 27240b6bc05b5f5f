// SPDX-License-Identifier: Apache-2.0
#include "partrans/cli.hpp"

#include <unistd.h>

#include <mutex>
#include <ostream>
#include <sstream>

#include "partrans/config.hpp"
#include "partrans/correction_loop.hpp"
#include "partrans/errors.hpp"
#include "partrans/toolchain.hpp"

namespace fs = std::filesystem;

namespace partrans {

int exit_code_for(SessionStatus status) {
  switch (status) {
    case SessionStatus::Success: return exit_code::kOk;
    case SessionStatus::BaselineFailed: return exit_code::kBaselineFailed;
    case SessionStatus::CompileBudgetExceeded: return exit_code::kCompileBudget;
    case SessionStatus::ExecBudgetExceeded: return exit_code::kExecBudget;
    case SessionStatus::ExtractionFailed: return exit_code::kExtraction;
    case SessionStatus::ContextOverflow: return exit_code::kContextOverflow;
  }
  return exit_code::kBackend;
}

std::string exit_code_table() {
  return "Exit codes:\n"
         "  validate   0 all baselines pass, 1 a baseline failed, 2 config error\n"
         "  translate  0 Success, 1 BaselineFailed, 2 config error,\n"
         "             3 CompileBudgetExceeded, 4 ExecBudgetExceeded, 5 ExtractionFailed,\n"
         "             6 ContextOverflow, 7 backend or transport failure\n"
         "  bench      0 matrix finished (failed cells are data), 1 infrastructure error,\n"
         "             2 config error, 4 manifest error\n"
         "  report     0 ok, 2 bad option, 5 missing or corrupt rows\n"
         "  any        130 interrupted\n";
}

namespace {

// Serialises log lines coming from worker threads.
std::function<void(const std::string&)> locked_log(std::ostream& os) {
  auto mutex = std::make_shared<std::mutex>();
  return [&os, mutex](const std::string& line) {
    std::lock_guard lock(*mutex);
    os << line << '\n';
  };
}

SuiteManifest manifest_for(const AppConfig& cfg, const std::optional<fs::path>& override_path) {
  const auto path = override_path ? override_path : cfg.manifest;
  if (!path) throw ConfigError("no manifest: pass --manifest or set 'manifest' in the config");
  return load_suite(*path);
}

const SuiteEntry& entry_for(const SuiteManifest& m, const std::string& app) {
  for (const auto& e : m.entries) {
    if (e.app_name == app) return e;
  }
  throw ConfigError("app '" + app + "' is not in the manifest");
}

// Explicit direction, else the config's list, else every ordered pair of
// manifest languages the config knows.
std::vector<Direction> directions_for(const AppConfig& cfg, const SuiteManifest& m,
                                      const std::optional<std::string>& only) {
  std::vector<Direction> out;
  if (only) {
    out.push_back(Direction::parse(*only));
  } else if (!cfg.directions.empty()) {
    out = cfg.directions;
  } else {
    for (const auto& a : m.languages) {
      for (const auto& b : m.languages) {
        if (a != b && cfg.languages.count(a) && cfg.languages.count(b)) out.push_back({a, b});
      }
    }
  }
  for (const auto& d : out) {
    cfg.language(d.source);
    cfg.language(d.target);
    for (const auto& lang : {d.source, d.target}) {
      if (std::find(m.languages.begin(), m.languages.end(), lang) == m.languages.end()) {
        throw ConfigError("direction " + d.key() + ": manifest has no " + lang + " sources");
      }
    }
    system_prompt(cfg.prompts, d);  // throws UnknownDirection
  }
  if (out.empty()) throw ConfigError("no translation directions configured");
  return out;
}

void apply_resources(ResourcePool& pool, const AppConfig& cfg) {
  for (const auto& [name, n] : cfg.resources) pool.set_capacity(name, n);
}

bool interrupted(const CliEnv& env) { return env.stop && env.stop->load(); }

// Scripted configs with a script directory keep the knowledge summary in a
// separate script, shared with bench runs.
void prewarm_from_script_dir(PromptEngine& engine, const BackendFactory& factory, const LlmProfile& llm,
                             const LanguageSpec& target) {
  const auto& d = llm.backend;
  if (d.kind != "scripted" || d.script_dir.empty() || !target.knowledge) return;
  if (!fs::exists(d.script_dir / (knowledge_script_key(target.name) + ".json"))) return;
  auto backend = factory(llm, knowledge_script_key(target.name));
  engine.summarize_knowledge(*backend, llm, *target.knowledge);
}

}  // namespace

int cmd_validate(const ValidateArgs& args, CliEnv& env) {
  AppConfig cfg;
  SuiteManifest manifest;
  std::vector<Direction> directions;
  try {
    cfg = load_config(args.config);
    manifest = manifest_for(cfg, args.manifest);
    directions = directions_for(cfg, manifest, args.direction);
    if (args.app) entry_for(manifest, *args.app);
  } catch (const Error& e) {
    env.err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  }

  const bool temporary = !args.out_dir;
  const fs::path root = args.out_dir ? *args.out_dir
                                     : fs::temp_directory_path() /
                                           ("partrans-validate-" + std::to_string(::getpid()));
  ResourcePool pool;
  apply_resources(pool, cfg);
  BaselineOptions opts;
  opts.compile_timeout_s = cfg.loop.compile_timeout_s;
  opts.exec_timeout_s = cfg.loop.exec_timeout_s;
  opts.n_runtime_runs = cfg.loop.n_runtime_runs;
  opts.resources = &pool;

  int failures = 0;
  for (const auto& entry : manifest.entries) {
    if (args.app && entry.app_name != *args.app) continue;
    for (const auto& d : directions) {
      if (interrupted(env)) return exit_code::kInterrupted;
      TranslationTask task;
      task.app_name = entry.app_name;
      task.source = cfg.language(d.source);
      task.target = cfg.language(d.target);
      task.runtime_args = entry.runtime_args;
      const std::string label = entry.app_name + " [" + d.key() + "]";
      try {
        task.source_code = read_text_file(entry.sources.at(d.source));
        task.reference_target_code = read_text_file(entry.sources.at(d.target));
        const auto rec = validate_baseline(task, root / (entry.app_name + "__" + d.slug()), opts);
        env.out << "PASS " << label;
        if (rec.target_runtime_s) env.out << " target runtime " << *rec.target_runtime_s << "s";
        env.out << '\n';
      } catch (const BaselineFailed& e) {
        ++failures;
        env.out << "FAIL " << label << ": " << e.stage() << (e.result().timed_out ? " (timed out)" : "") << '\n';
        if (!e.result().command.empty()) env.out << "  $ " << e.result().command << '\n';
        env.out << e.result().std_err;
        if (!e.result().std_err.empty() && e.result().std_err.back() != '\n') env.out << '\n';
      } catch (const Error& e) {
        ++failures;
        env.out << "FAIL " << label << ": " << e.what() << '\n';
      }
    }
  }
  if (temporary) {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  return failures == 0 ? exit_code::kOk : exit_code::kBaselineFailed;
}

int cmd_translate(const TranslateArgs& args, CliEnv& env) {
  AppConfig cfg;
  TranslationTask task;
  try {
    cfg = load_config(args.config);
    if (args.max_self_corr) cfg.loop.max_self_corr = *args.max_self_corr;
    cfg.loop.validate();
    const auto manifest = manifest_for(cfg, args.manifest);
    const auto& entry = entry_for(manifest, args.app);
    const auto direction = directions_for(cfg, manifest, args.direction).front();
    task.app_name = entry.app_name;
    task.source = cfg.language(direction.source);
    task.target = cfg.language(direction.target);
    task.source_code = read_text_file(entry.sources.at(direction.source));
    task.reference_target_code = read_text_file(entry.sources.at(direction.target));
    task.runtime_args = entry.runtime_args;
    task.llm = cfg.llm(args.llm);
    if (const auto errors = validate_task(task); !errors.empty()) {
      std::string message = "invalid task:";
      for (const auto& e : errors) message += "\n  " + e;
      throw ConfigError(message);
    }
  } catch (const Error& e) {
    env.err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  }

  fs::create_directories(args.out_dir);
  ResourcePool pool;
  apply_resources(pool, cfg);
  PromptEngine engine(cfg.prompts);
  SessionRecord record;
  try {
    prewarm_from_script_dir(engine, env.factory, task.llm, task.target);
    auto backend = env.factory(task.llm, cell_script_key(task.app_name, task.direction()));
    PipelineContext ctx{*backend, engine, args.out_dir, &pool, locked_log(env.err)};
    record = run_pipeline(task, cfg.loop, ctx);
  } catch (const ConfigError& e) {
    env.err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const ToolchainMissing& e) {
    env.err << "toolchain error: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const Error& e) {
    env.err << "backend error: " << e.what() << '\n';
    return exit_code::kBackend;
  }

  write_session_files(record, args.out_dir);
  if (record.final_code) {
    write_text_file(args.out_dir / (task.app_name + "__final" + task.target.file_extension), *record.final_code);
  }
  env.out << "status: " << to_string(record.status) << "\nself_corr: " << record.self_corr << '\n';
  if (record.metrics) {
    env.out << "output: " << to_string(record.metrics->output_verdict) << "\nratio: " << record.metrics->ratio
            << "\nsim_t: " << record.metrics->sim_t << "\nsim_l: " << record.metrics->sim_l << '\n';
  }
  if (!record.detail.empty()) env.out << "detail: " << record.detail << '\n';
  env.out << "session: " << (args.out_dir / "session.json").string() << '\n';
  return exit_code_for(record.status);
}

std::vector<ResultRow> replay_rows(const fs::path& dir) {
  json index;
  try {
    index = json::parse(read_text_file(dir / "index.json"));
  } catch (const std::exception& e) {
    throw ConfigError("cannot read " + (dir / "index.json").string() + ": " + e.what());
  }
  const auto runtimes = load_published_runtimes(dir / index.at("runtimes").get<std::string>());
  std::vector<ResultRow> rows;
  for (const auto& t : index.at("tables")) {
    auto part = published_rows(load_published_table(dir / t.get<std::string>()), runtimes, rows.size());
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

namespace {

int bench_replay(const BenchArgs& args, CliEnv& env) {
  std::vector<ResultRow> rows;
  try {
    rows = replay_rows(*args.replay);
  } catch (const std::exception& e) {
    env.err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  }
  try {
    fs::create_directories(args.out_dir);
    const auto rows_path = args.out_dir / kRowsFile;
    fs::remove(rows_path);
    RowStore store(rows_path);
    for (const auto& r : rows) store.append(r);
    write_reports(rows, args.out_dir, args.summary);
  } catch (const std::exception& e) {
    env.err << "error: " << e.what() << '\n';
    return exit_code::kInfra;
  }
  env.out << render_summary(rows, args.summary);
  return exit_code::kOk;
}

}  // namespace

int cmd_bench(const BenchArgs& args, CliEnv& env) {
  if (args.replay) return bench_replay(args, env);

  AppConfig cfg;
  if (!args.config) {
    env.err << "config error: --config is required unless --replay is given\n";
    return exit_code::kConfig;
  }
  try {
    cfg = load_config(*args.config);
    if (args.max_self_corr) cfg.loop.max_self_corr = *args.max_self_corr;
    cfg.loop.validate();
  } catch (const Error& e) {
    env.err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  }

  SuiteManifest manifest;
  try {
    const auto path = args.manifest ? args.manifest : cfg.manifest;
    if (!path) throw ManifestError("no manifest: pass --manifest or set 'manifest' in the config");
    manifest = load_suite(*path);
    if (const auto missing = missing_sources(manifest); !missing.empty()) {
      std::string message = "manifest sources not found:";
      for (const auto& m : missing) message += "\n  " + m;
      throw ManifestError(message);
    }
    if (args.app) {
      std::erase_if(manifest.entries, [&](const SuiteEntry& e) { return e.app_name != *args.app; });
      if (manifest.entries.empty()) throw ManifestError("app '" + *args.app + "' is not in the manifest");
    }
  } catch (const Error& e) {
    env.err << "manifest error: " << e.what() << '\n';
    return exit_code::kManifest;
  }

  MatrixConfig mc;
  ResourcePool pool;
  try {
    mc.directions = directions_for(cfg, manifest, args.direction);
    mc.llms = args.llm ? std::vector<LlmProfile>{cfg.llm(*args.llm)} : cfg.llms;
  } catch (const Error& e) {
    env.err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  }
  apply_resources(pool, cfg);
  mc.languages = cfg.languages;
  mc.loop = cfg.loop;
  mc.prompts = cfg.prompts;
  mc.factory = env.factory;
  mc.workers = args.workers.value_or(cfg.workers);
  mc.out_dir = args.out_dir;
  mc.config_hash = config_hash(cfg);
  mc.resources = &pool;
  mc.stop = env.stop;
  mc.log = locked_log(env.err);

  std::vector<ResultRow> rows;
  try {
    rows = run_matrix(manifest, mc);
    write_reports(rows, args.out_dir, args.summary);
  } catch (const ConfigError& e) {
    env.err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const std::exception& e) {
    env.err << "error: " << e.what() << '\n';
    return exit_code::kInfra;
  }
  if (!rows.empty()) env.out << render_summary(rows, args.summary);
  if (interrupted(env)) {
    env.err << "interrupted: " << rows.size() << " completed rows persisted\n";
    return exit_code::kInterrupted;
  }
  return exit_code::kOk;
}

int cmd_report(const ReportArgs& args, CliEnv& env) {
  std::vector<ResultRow> rows;
  try {
    rows = latest_rows(load_rows(args.results_dir / kRowsFile));
  } catch (const Error& e) {
    env.err << "rows error: " << e.what() << '\n';
    return exit_code::kRows;
  }
  write_reports(rows, args.results_dir, args.summary);
  if (args.format) {
    env.out << render_report(rows, *args.format);
  } else {
    env.out << render_summary(rows, args.summary);
  }
  return exit_code::kOk;
}

}  // namespace partrans
