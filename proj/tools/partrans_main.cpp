// SPDX-License-Identifier: Apache-2.0
#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "partrans/cli.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

void add_summary_options(CLI::App* cmd, partrans::SummaryOptions& s, std::string& sim_metric) {
  cmd->add_option("--runtime-threshold", s.runtime_threshold,
                  "minimum source/generated runtime ratio counted as fast enough (default 1/1.1)");
  cmd->add_option("--sim-threshold", s.sim_threshold, "similarity threshold (default 0.6)");
  cmd->add_option("--sim-metric", sim_metric, "sim_t | sim_l | either | both (default either)")
      ->check(CLI::IsMember({"sim_t", "sim_l", "either", "both"}));
}

}  // namespace

int main(int argc, char** argv) {
  using namespace partrans;

  CLI::App app{"Translate parallel codes between programming models with an LLM in a self-correcting loop."};
  app.footer(exit_code_table());
  app.require_subcommand(1);

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "compile and run the source and reference codes");
  validate->add_option("--config", va.config, "config file")->required();
  validate->add_option("--manifest", va.manifest, "manifest (overrides the config)");
  validate->add_option("--app", va.app, "only this app");
  validate->add_option("--direction", va.direction, "only this direction, e.g. openmp:cuda");
  validate->add_option("--out", va.out_dir, "keep build products here");

  TranslateArgs ta;
  auto* translate = app.add_subcommand("translate", "translate one app with one LLM");
  translate->add_option("--config", ta.config, "config file")->required();
  translate->add_option("--manifest", ta.manifest, "manifest (overrides the config)");
  translate->add_option("--app", ta.app, "app name in the manifest")->required();
  translate->add_option("--direction", ta.direction, "source:target")->required();
  translate->add_option("--llm", ta.llm, "LLM profile name")->required();
  translate->add_option("--out", ta.out_dir, "session directory")->required();
  translate->add_option("--max-self-corr", ta.max_self_corr, "self-correction budget");

  BenchArgs ba;
  std::string ba_metric;
  auto* bench = app.add_subcommand("bench", "run the app x LLM x direction matrix");
  bench->add_option("--config", ba.config, "config file");
  bench->add_option("--manifest", ba.manifest, "manifest (overrides the config)");
  bench->add_option("--out", ba.out_dir, "results directory")->required();
  bench->add_option("--workers", ba.workers, "parallel cells")->check(CLI::PositiveNumber);
  bench->add_option("--llm", ba.llm, "only this LLM profile");
  bench->add_option("--direction", ba.direction, "only this direction");
  bench->add_option("--app", ba.app, "only this app");
  bench->add_option("--max-self-corr", ba.max_self_corr, "self-correction budget");
  bench->add_option("--replay", ba.replay, "render published tables from this directory instead of running");
  add_summary_options(bench, ba.summary, ba_metric);

  ReportArgs ra;
  std::string ra_metric;
  std::string ra_format;
  auto* report = app.add_subcommand("report", "re-render reports from persisted rows");
  report->add_option("--out", ra.results_dir, "results directory")->required();
  report->add_option("--format", ra_format, "print this report to stdout: csv | json | markdown")
      ->check(CLI::IsMember({"csv", "json", "markdown", "md"}));
  add_summary_options(report, ra.summary, ra_metric);

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);
  CliEnv env{std::cout, std::cerr, make_backend, &g_stop};

  try {
    if (*validate) return cmd_validate(va, env);
    if (*translate) return cmd_translate(ta, env);
    if (*bench) {
      if (!ba_metric.empty()) ba.summary.sim_metric = parse_sim_metric(ba_metric);
      return cmd_bench(ba, env);
    }
    if (*report) {
      if (!ra_metric.empty()) ra.summary.sim_metric = parse_sim_metric(ra_metric);
      if (!ra_format.empty()) ra.format = parse_report_format(ra_format);
      return cmd_report(ra, env);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kInfra;
  }
  return exit_code::kInfra;
}
