// SPDX-License-Identifier: Apache-2.0
#include "partrans/correction_loop.hpp"

#include <cstdio>
#include <sstream>

#include "partrans/code_extractor.hpp"
#include "partrans/errors.hpp"

namespace fs = std::filesystem;

namespace partrans {

void LoopConfig::validate() const {
  std::vector<std::string> errors;
  if (max_self_corr < 1) errors.emplace_back("max_self_corr must be >= 1");
  if (!(compile_timeout_s > 0)) errors.emplace_back("compile_timeout_s must be positive");
  if (!(exec_timeout_s > 0)) errors.emplace_back("exec_timeout_s must be positive");
  if (n_runtime_runs < 1) errors.emplace_back("n_runtime_runs must be >= 1");
  if (max_consecutive_extraction_failures < 1) {
    errors.emplace_back("max_consecutive_extraction_failures must be >= 1");
  }
  if (errors.empty()) return;
  std::string message = "invalid loop config:";
  for (const auto& e : errors) message += "\n  " + e;
  throw ConfigError(message);
}

json LoopConfig::to_json() const {
  return json{{"max_self_corr", max_self_corr},
              {"compile_timeout_s", compile_timeout_s},
              {"exec_timeout_s", exec_timeout_s},
              {"n_runtime_runs", n_runtime_runs},
              {"max_consecutive_extraction_failures", max_consecutive_extraction_failures},
              {"compare_mode", compare.mode == CompareMode::Exact ? "exact" : "filtered"},
              {"timing_patterns", compare.timing_patterns},
              {"rel_tol", compare.rel_tol}};
}

fs::path metadata_path(const fs::path& workdir, const std::string& app) {
  return workdir / (app + "__metadata.json");
}

namespace {

bool is_correction(PromptKind kind) {
  return kind == PromptKind::CompileCorrection || kind == PromptKind::ExecCorrection;
}

std::string seconds_text(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

std::string compile_error_text(const ToolResult& r, double timeout_s) {
  if (r.timed_out) return "compilation timed out after " + seconds_text(timeout_s) + "s";
  if (r.std_err.empty()) return std::string(kEmptyCompileStderr);
  return r.std_err;
}

class Session {
 public:
  Session(const TranslationTask& task, const LoopConfig& cfg, PipelineContext& ctx)
      : task_(task), cfg_(cfg), ctx_(ctx), dict_(ctx.prompts.dictionary()) {
    rec_.app_name = task.app_name;
    rec_.direction = task.direction();
    rec_.llm_name = task.llm.name;
    rec_.model_id = task.llm.model_id;
    rec_.runtime_args = task.runtime_args;
  }

  SessionRecord run() {
    fs::create_directories(ctx_.workdir);
    if (!baseline()) return std::move(rec_);
    auto first = prepare_and_generate();
    if (!first) return std::move(rec_);
    iterate(std::move(*first));
    return std::move(rec_);
  }

 private:
  void log(const std::string& msg) {
    if (ctx_.log) ctx_.log(task_.app_name + " [" + rec_.direction.key() + ", " + task_.llm.name + "] " + msg);
  }

  bool baseline() {
    BaselineOptions opts;
    opts.compile_timeout_s = cfg_.compile_timeout_s;
    opts.exec_timeout_s = cfg_.exec_timeout_s;
    opts.n_runtime_runs = cfg_.n_runtime_runs;
    opts.resources = ctx_.resources;
    try {
      rec_.baseline = validate_baseline(task_, ctx_.workdir / "baseline", opts);
      return true;
    } catch (const BaselineFailed& e) {
      rec_.baseline = e.record();
      rec_.status = SessionStatus::BaselineFailed;
      rec_.detail = e.stage() + ": " + (e.result().timed_out ? "timed out" : e.result().std_err);
      log("baseline failed at " + e.stage());
      return false;
    }
  }

  void push(PromptKind kind, const Exchange& ex) {
    rec_.transcript.push_back({kind, ex.system_prompt, ex.prompt, ex.response, iso8601_now(), ex.cached});
  }

  std::optional<std::string> prepare_and_generate() {
    if (!task_.target.knowledge) {
      throw ConfigError("language '" + task_.target.name + "' has no knowledge asset");
    }
    system_ = system_prompt(dict_, rec_.direction);
    PromptBundle bundle;
    try {
      const auto summary = ctx_.prompts.summarize_knowledge(ctx_.backend, task_.llm, *task_.target.knowledge);
      push(PromptKind::KnowledgeSummary, summary);
      const auto description =
          ctx_.prompts.describe_source(ctx_.backend, task_.llm, task_.source_code, task_.source.name);
      push(PromptKind::SourceDescription, description);
      bundle = assemble_translation_prompt(
          dict_, {task_.target.knowledge->text, summary.response, description.response},
          task_.source_code, rec_.direction, task_.llm, ctx_.prompts.estimator());
    } catch (const ContextOverflow& e) {
      rec_.status = SessionStatus::ContextOverflow;
      rec_.detail = e.what();
      return std::nullopt;
    }
    return ask(PromptKind::Translation, bundle.assembled);
  }

  // Issues `prompt` until a code block comes back. Each issue of a correction
  // prompt counts as one self-correction.
  std::optional<std::string> ask(PromptKind kind, const std::string& prompt) {
    int failures = 0;
    for (;;) {
      if (is_correction(kind)) {
        if (rec_.self_corr + 1 > cfg_.max_self_corr) {
          rec_.status = kind == PromptKind::CompileCorrection ? SessionStatus::CompileBudgetExceeded
                                                              : SessionStatus::ExecBudgetExceeded;
          rec_.detail = "self-correction budget of " + std::to_string(cfg_.max_self_corr) + " exhausted";
          log(rec_.detail);
          return std::nullopt;
        }
      }
      ChatResponse response;
      try {
        response = ctx_.backend.complete(make_request(task_.llm, system_, prompt), task_.llm);
      } catch (const ContextOverflow& e) {
        rec_.status = SessionStatus::ContextOverflow;
        rec_.detail = e.what();
        return std::nullopt;
      }
      if (is_correction(kind)) ++rec_.self_corr;
      rec_.transcript.push_back({kind, system_, prompt, response.text, iso8601_now(), false});
      try {
        return extract_code(response.text).code;
      } catch (const ExtractionFailed& e) {
        if (++failures >= cfg_.max_consecutive_extraction_failures) {
          rec_.status = SessionStatus::ExtractionFailed;
          rec_.detail = e.what();
          log("giving up: " + rec_.detail);
          return std::nullopt;
        }
        log("no code in response, asking again");
      }
    }
  }

  std::string correction(PromptKind kind, const std::string& code, const std::string& cmd,
                         const std::string& error_text) {
    auto render = [&](std::string_view err, std::optional<std::size_t> budget) {
      return kind == PromptKind::CompileCorrection
                 ? compile_error_prompt(dict_, code, cmd, err, budget, ctx_.prompts.estimator())
                 : exec_error_prompt(dict_, code, cmd, err, budget, ctx_.prompts.estimator());
    };
    const auto fixed = ctx_.prompts.estimator()(system_ + render(" ", std::nullopt));
    return render(error_text, error_text_budget(task_.llm, fixed));
  }

  void iterate(std::string code) {
    const auto& target = task_.target;
    for (int n = 1;; ++n) {
      Attempt attempt;
      attempt.index = n;
      const auto path = ctx_.workdir / (task_.app_name + "__attempt" + std::to_string(n) + target.file_extension);
      attempt.code_path = path.string();
      attempt.code = code;
      write_text_file(path, code);
      const auto cmd = compile_command_text(target, path, ctx_.workdir);

      attempt.compile = compile(path, target, ctx_.workdir, cfg_.compile_timeout_s);
      if (!attempt.compile.exit_ok) {
        log("attempt " + std::to_string(n) + ": compile error");
        rec_.attempts.push_back(attempt);
        auto next = ask(PromptKind::CompileCorrection,
                        correction(PromptKind::CompileCorrection, code, cmd,
                                   compile_error_text(attempt.compile, cfg_.compile_timeout_s)));
        if (!next) return;
        code = std::move(*next);
        continue;
      }

      const auto bin = binary_path_for(path, ctx_.workdir);
      attempt.execute = execute(target, bin, task_.runtime_args, cfg_.exec_timeout_s);
      std::optional<double> runtime;
      if (attempt.execute->exit_ok) {
        RuntimeOptions ro;
        ro.n_runs = cfg_.n_runtime_runs;
        ro.timeout_s = cfg_.exec_timeout_s;
        ro.spec = &target;
        ro.resources = ctx_.resources;
        try {
          runtime = measure_runtime(bin, task_.runtime_args, ro);
        } catch (const RunFailed& e) {
          attempt.execute = e.result();  // a flaky binary is an execution error
        }
      }
      if (!runtime) {
        log("attempt " + std::to_string(n) + ": execution error");
        rec_.attempts.push_back(attempt);
        auto next = ask(PromptKind::ExecCorrection,
                        correction(PromptKind::ExecCorrection, code, cmd,
                                   execution_error_text(*attempt.execute, cfg_.exec_timeout_s)));
        if (!next) return;
        code = std::move(*next);
        continue;
      }

      rec_.attempts.push_back(attempt);
      finalize(attempt, *runtime);
      return;
    }
  }

  void finalize(const Attempt& attempt, double runtime) {
    rec_.status = SessionStatus::Success;
    rec_.final_code = attempt.code;
    rec_.final_stdout = attempt.execute->std_out;
    rec_.final_runtime_s = runtime;

    if (task_.reference_target_code && rec_.baseline.target_runtime_s && runtime > 0.0) {
      const auto verdict = rec_.baseline.target_stdout
                               ? compare_output(*rec_.baseline.target_stdout, *rec_.final_stdout, cfg_.compare)
                               : OutputVerdict::Unchecked;
      rec_.metrics = make_metrics(*rec_.baseline.target_runtime_s, runtime,
                                  sim_t(*task_.reference_target_code, attempt.code),
                                  sim_l(*task_.reference_target_code, attempt.code), rec_.self_corr,
                                  verdict);
    }

    json meta{{"app_name", rec_.app_name},
              {"direction", rec_.direction.key()},
              {"llm_name", rec_.llm_name},
              {"code_path", attempt.code_path},
              {"self_corr", rec_.self_corr},
              {"runtime_s", runtime},
              {"stdout", *rec_.final_stdout}};
    write_text_file(metadata_path(ctx_.workdir, task_.app_name), dump_json(meta, 2) + "\n");
    log("success after " + std::to_string(rec_.self_corr) + " self-corrections");
  }

  const TranslationTask& task_;
  const LoopConfig& cfg_;
  PipelineContext& ctx_;
  const PromptDictionary& dict_;
  std::string system_;
  SessionRecord rec_;
};

}  // namespace

SessionRecord run_pipeline(const TranslationTask& task, const LoopConfig& cfg, PipelineContext& ctx) {
  cfg.validate();
  if (const auto errors = validate_task(task); !errors.empty()) {
    std::string message = "invalid task '" + task.app_name + "':";
    for (const auto& e : errors) message += "\n  " + e;
    throw ConfigError(message);
  }
  return Session(task, cfg, ctx).run();
}

void write_session_files(const SessionRecord& record, const fs::path& dir) {
  write_text_file(dir / "session.json", dump_json(json(record), 2) + "\n");

  std::ostringstream log;
  log << "app: " << record.app_name << "\ndirection: " << record.direction.key()
      << "\nllm: " << record.llm_name << " (" << record.model_id << ")\nstatus: "
      << to_string(record.status) << "\nself_corr: " << record.self_corr << "\n";
  if (!record.detail.empty()) log << "detail: " << record.detail << "\n";
  for (const auto& e : record.transcript) {
    log << "\n=== " << e.timestamp << " " << to_string(e.kind) << (e.cached ? " (cached)" : "") << "\n";
    log << "--- system\n" << e.system_prompt << "\n--- prompt\n" << e.prompt << "\n--- response\n"
        << e.response << "\n";
  }
  for (const auto& a : record.attempts) {
    log << "\n=== attempt " << a.index << " " << a.code_path << "\n--- compile (" << a.compile.command
        << ") " << (a.compile.exit_ok ? "ok" : "FAILED") << "\n" << a.compile.std_err;
    if (a.execute) {
      log << "--- execute " << (a.execute->exit_ok ? "ok" : "FAILED")
          << (a.execute->timed_out ? " (timed out)" : "") << "\n" << a.execute->std_err;
    }
  }
  write_text_file(dir / "transcript.log", log.str());
}

}  // namespace partrans
