// SPDX-License-Identifier: Apache-2.0
//
// Benchmark matrices: suite manifests, result rows, summary statistics and
// report rendering.
#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partrans/correction_loop.hpp"
#include "partrans/domain.hpp"
#include "partrans/llm_backend.hpp"
#include "partrans/prompt_engine.hpp"
#include "partrans/toolchain.hpp"

namespace partrans {

struct SuiteEntry {
  std::string app_name;
  std::string category;
  std::map<std::string, std::filesystem::path> sources;  // language -> absolute path
  std::vector<std::string> runtime_args;

  bool operator==(const SuiteEntry&) const = default;
};

struct SuiteManifest {
  std::vector<std::string> languages;
  std::vector<SuiteEntry> entries;

  /// Distinct categories in first-seen order.
  std::vector<std::string> categories() const;
};

/// Manifest JSON:
///   {"languages": [..], "entries": [{"app", "category", "sources": {lang: path},
///    "runtime_args": [..]}]}
/// Relative source paths resolve against `base_dir`. Throws ManifestError
/// listing every offending entry.
SuiteManifest parse_suite(const json& doc, const std::filesystem::path& base_dir);
SuiteManifest load_suite(const std::filesystem::path& manifest_path);

/// Sources that do not exist on disk, as "app: lang: path" strings.
std::vector<std::string> missing_sources(const SuiteManifest& manifest);

enum class RowStatus {
  Success,
  CompileBudgetExceeded,
  ExecBudgetExceeded,
  ExtractionFailed,
  BaselineFailed,
  ContextOverflow,
  OutputMismatch,  // ran, but stdout differs from the reference
  NotGenerated,    // published table reports N/A without a reason
  InfraError,      // transport or toolchain failure; retried on resume
};

std::string_view to_string(RowStatus status);
RowStatus parse_row_status(std::string_view text);

struct ResultRow {
  std::size_t cell_index = 0;  // position in the matrix; report order
  std::string app_name;
  std::string llm_name;
  Direction direction;
  RowStatus status = RowStatus::InfraError;
  std::optional<MetricsRecord> metrics;  // present iff Success
  std::string config_hash;
  std::string detail;
  bool erratum = false;
  double wall_time_s = 0.0;

  bool operator==(const ResultRow&) const = default;
};

std::vector<std::string> validate_row(const ResultRow& row);

void to_json(json& j, const ResultRow& r);
void from_json(const json& j, ResultRow& r);

/// Maps a finished session to its row. A successful session whose output
/// does not match the reference becomes OutputMismatch.
ResultRow row_from_session(const SessionRecord& record, std::size_t cell_index,
                           std::string config_hash);

enum class SimMetric { SimT, SimL, Either, Both };

std::string_view to_string(SimMetric metric);
SimMetric parse_sim_metric(std::string_view text);

/// generated <= 1.1 x source
inline constexpr double kDefaultRuntimeThreshold = 1.0 / 1.1;
inline constexpr double kDefaultSimThreshold = 0.6;

struct SummaryOptions {
  double runtime_threshold = kDefaultRuntimeThreshold;
  double sim_threshold = kDefaultSimThreshold;
  SimMetric sim_metric = SimMetric::Either;
};

/// success_rate is over all rows; the other three percentages are over
/// successful rows only. Percentages are 0 when their denominator is 0.
struct SummaryStats {
  std::size_t n_total = 0;
  std::size_t n_success = 0;
  std::size_t n_within_runtime = 0;
  std::size_t n_similar = 0;
  std::size_t n_first_attempt = 0;
  double success_rate = 0.0;
  double pct_within_runtime_threshold = 0.0;
  double pct_similar = 0.0;
  double pct_first_attempt = 0.0;
  SummaryOptions options;
};

/// Throws PreconditionError on empty input.
SummaryStats summarize(std::span<const ResultRow> rows, const SummaryOptions& options = {});

/// One summary per direction, in direction order.
std::map<Direction, SummaryStats> summarize_by_direction(std::span<const ResultRow> rows,
                                                         const SummaryOptions& options = {});

enum class ReportFormat { Csv, Json, Markdown };
ReportFormat parse_report_format(std::string_view text);

/// Rows are rendered in cell_index order. CSV columns are
/// app,llm,direction,runtime_s,ratio,sim_t,sim_l,self_corr,status; failures
/// print N/A in the five metric columns.
std::string render_report(std::span<const ResultRow> rows, ReportFormat format);

/// Human-readable per-direction summary lines.
std::string render_summary(std::span<const ResultRow> rows, const SummaryOptions& options = {});

/// report.csv, report.json, report.md and summary.txt under `dir`.
void write_reports(std::span<const ResultRow> rows, const std::filesystem::path& dir,
                   const SummaryOptions& options = {});

// Persistence --------------------------------------------------------------

inline constexpr std::string_view kRowsFile = "rows.jsonl";

/// Appends rows as single-line JSON records with one write() each, so
/// concurrent writers never interleave within a line.
class RowStore {
 public:
  explicit RowStore(std::filesystem::path path);
  void append(const ResultRow& row);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

/// Strict load: a missing file, an unparsable line or an invalid row throws
/// RowStoreError.
std::vector<ResultRow> load_rows(const std::filesystem::path& path);

/// Later rows for the same cell replace earlier ones.
std::vector<ResultRow> latest_rows(std::vector<ResultRow> rows);

// Published tables ---------------------------------------------------------

struct PublishedApp {
  std::string app_name;
  std::string category;
  std::vector<std::string> runtime_args;
  std::map<std::string, double> runtime_s;  // language -> seconds
};

struct PublishedRow {
  std::string app_name;
  std::string llm_name;
  std::optional<double> runtime_s;  // empty for N/A
  std::optional<double> ratio;
  std::optional<double> sim_t;
  std::optional<double> sim_l;
  std::optional<int> self_corr;
  bool erratum = false;
};

struct PublishedTable {
  Direction direction;
  std::vector<std::string> llms;
  std::vector<PublishedRow> rows;
};

std::vector<PublishedApp> load_published_runtimes(const std::filesystem::path& path);
PublishedTable load_published_table(const std::filesystem::path& path);

/// Result rows for a published table. Metrics carry the published
/// similarities and self-corr count; the ratio is recomputed from the
/// runtimes so every row stays self-consistent.
std::vector<ResultRow> published_rows(const PublishedTable& table,
                                      const std::vector<PublishedApp>& runtimes,
                                      std::size_t first_index = 0);

// Matrix -------------------------------------------------------------------

struct MatrixConfig {
  std::map<std::string, LanguageSpec> languages;
  std::vector<LlmProfile> llms;
  std::vector<Direction> directions;
  LoopConfig loop;
  PromptDictionary prompts = PromptDictionary::defaults();
  BackendFactory factory = make_backend;
  int workers = 1;
  std::filesystem::path out_dir;
  std::string config_hash;
  ResourcePool* resources = nullptr;
  std::atomic<bool>* stop = nullptr;
  std::function<void(const std::string&)> log;
};

/// Script key for a cell: "<app>__<source>-to-<target>".
std::string cell_script_key(const std::string& app, const Direction& direction);
/// Script key for knowledge-summary prewarming: "knowledge__<language>".
std::string knowledge_script_key(const std::string& language);
/// Session directory: out_dir/sessions/<app>__<slug>__<llm>.
std::filesystem::path session_dir(const std::filesystem::path& out_dir, const std::string& app,
                                  const Direction& direction, const std::string& llm);

/**
 * Runs every (app, llm, direction) cell and returns one row per cell in
 * matrix order (entries, then LLMs, then directions).
 *
 * Rows already present in out_dir/rows.jsonl with the same config hash and
 * a final status are reused without touching a backend. Knowledge summaries
 * are computed once per (LLM, target language) before any cell starts, so
 * cell transcripts do not depend on scheduling. When `stop` becomes true no
 * new cell starts; the returned rows then cover only finished cells.
 */
std::vector<ResultRow> run_matrix(const SuiteManifest& manifest, const MatrixConfig& cfg);

}  // namespace partrans
