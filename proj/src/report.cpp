// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <sstream>

#include "partrans/bench.hpp"
#include "partrans/errors.hpp"

namespace fs = std::filesystem;

namespace partrans {

std::string_view to_string(SimMetric metric) {
  switch (metric) {
    case SimMetric::SimT: return "sim_t";
    case SimMetric::SimL: return "sim_l";
    case SimMetric::Either: return "either";
    case SimMetric::Both: return "both";
  }
  return "either";
}

SimMetric parse_sim_metric(std::string_view text) {
  for (auto m : {SimMetric::SimT, SimMetric::SimL, SimMetric::Either, SimMetric::Both}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("sim metric must be sim_t, sim_l, either or both, got '" + std::string(text) + "'");
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  throw ConfigError("report format must be csv, json or markdown, got '" + std::string(text) + "'");
}

namespace {

bool is_similar(const MetricsRecord& m, const SummaryOptions& o) {
  const bool t = m.sim_t >= o.sim_threshold;
  const bool l = m.sim_l >= o.sim_threshold;
  switch (o.sim_metric) {
    case SimMetric::SimT: return t;
    case SimMetric::SimL: return l;
    case SimMetric::Either: return t || l;
    case SimMetric::Both: return t && l;
  }
  return false;
}

double percent(std::size_t n, std::size_t d) {
  return d == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(d);
}

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

std::vector<const ResultRow*> ordered(std::span<const ResultRow> rows) {
  std::vector<const ResultRow*> out;
  for (const auto& r : rows) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(),
                   [](const ResultRow* a, const ResultRow* b) { return a->cell_index < b->cell_index; });
  return out;
}

// The five metric cells: runtime, ratio, sim_t, sim_l, self_corr.
std::vector<std::string> metric_cells(const ResultRow& r) {
  if (r.status != RowStatus::Success || !r.metrics) return {"N/A", "N/A", "N/A", "N/A", "N/A"};
  const auto& m = *r.metrics;
  return {fixed(m.runtime_generated_s, 4), fixed(m.ratio, 4), fixed(m.sim_t, 2), fixed(m.sim_l, 2),
          std::to_string(m.self_corr)};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render_csv(std::span<const ResultRow> rows) {
  std::ostringstream out;
  out << "app,llm,direction,runtime_s,ratio,sim_t,sim_l,self_corr,status\n";
  for (const auto* r : ordered(rows)) {
    out << csv_field(r->app_name) << ',' << csv_field(r->llm_name) << ',' << csv_field(r->direction.key());
    for (const auto& c : metric_cells(*r)) out << ',' << c;
    out << ',' << to_string(r->status) << '\n';
  }
  return out.str();
}

std::string render_json(std::span<const ResultRow> rows) {
  json arr = json::array();
  for (const auto* r : ordered(rows)) arr.push_back(*r);
  return dump_json(arr, 2) + "\n";
}

std::string render_markdown(std::span<const ResultRow> rows) {
  const auto sorted = ordered(rows);
  std::vector<Direction> directions;
  for (const auto* r : sorted) {
    if (std::find(directions.begin(), directions.end(), r->direction) == directions.end()) {
      directions.push_back(r->direction);
    }
  }
  std::ostringstream out;
  out << "# Translation results\n";
  for (const auto& d : directions) {
    out << "\n## " << d.source << " → " << d.target << "\n";
    std::vector<std::string> llms;
    for (const auto* r : sorted) {
      if (r->direction == d && std::find(llms.begin(), llms.end(), r->llm_name) == llms.end()) {
        llms.push_back(r->llm_name);
      }
    }
    for (const auto& llm : llms) {
      out << "\n### " << llm << "\n\n"
          << "| App | Runtime (s) | Ratio | Sim-T | Sim-L | Self-corr | Status |\n"
          << "|---|---:|---:|---:|---:|---:|---|\n";
      for (const auto* r : sorted) {
        if (r->direction != d || r->llm_name != llm) continue;
        out << "| " << r->app_name;
        for (const auto& c : metric_cells(*r)) out << " | " << c;
        out << " | " << to_string(r->status) << (r->erratum ? " (erratum)" : "") << " |\n";
      }
    }
  }
  return out.str();
}

}  // namespace

SummaryStats summarize(std::span<const ResultRow> rows, const SummaryOptions& options) {
  if (rows.empty()) throw PreconditionError("summarize needs at least one row");
  SummaryStats s;
  s.options = options;
  s.n_total = rows.size();
  for (const auto& r : rows) {
    if (r.status != RowStatus::Success || !r.metrics) continue;
    ++s.n_success;
    if (r.metrics->ratio >= options.runtime_threshold) ++s.n_within_runtime;
    if (is_similar(*r.metrics, options)) ++s.n_similar;
    if (r.metrics->self_corr == 0) ++s.n_first_attempt;
  }
  s.success_rate = percent(s.n_success, s.n_total);
  s.pct_within_runtime_threshold = percent(s.n_within_runtime, s.n_success);
  s.pct_similar = percent(s.n_similar, s.n_success);
  s.pct_first_attempt = percent(s.n_first_attempt, s.n_success);
  return s;
}

std::map<Direction, SummaryStats> summarize_by_direction(std::span<const ResultRow> rows,
                                                         const SummaryOptions& options) {
  std::map<Direction, std::vector<ResultRow>> groups;
  for (const auto& r : rows) groups[r.direction].push_back(r);
  std::map<Direction, SummaryStats> out;
  for (const auto& [d, g] : groups) out.emplace(d, summarize(g, options));
  return out;
}

std::string render_report(std::span<const ResultRow> rows, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return render_csv(rows);
    case ReportFormat::Json: return render_json(rows);
    case ReportFormat::Markdown: return render_markdown(rows);
  }
  return {};
}

std::string render_summary(std::span<const ResultRow> rows, const SummaryOptions& options) {
  std::ostringstream out;
  out << "runtime threshold: ratio >= " << fixed(options.runtime_threshold, 4)
      << "; similarity: " << to_string(options.sim_metric) << " >= " << fixed(options.sim_threshold, 2)
      << "\n";
  auto count = [](std::size_t n, std::size_t d, double pct) {
    return fixed(pct, 1) + "% (" + std::to_string(n) + "/" + std::to_string(d) + ")";
  };
  for (const auto& [d, s] : summarize_by_direction(rows, options)) {
    out << d.key() << ": success " << count(s.n_success, s.n_total, s.success_rate)
        << ", within runtime threshold " << count(s.n_within_runtime, s.n_success, s.pct_within_runtime_threshold)
        << ", similar " << count(s.n_similar, s.n_success, s.pct_similar) << ", first attempt "
        << count(s.n_first_attempt, s.n_success, s.pct_first_attempt) << "\n";
  }
  return out.str();
}

void write_reports(std::span<const ResultRow> rows, const fs::path& dir, const SummaryOptions& options) {
  fs::create_directories(dir);
  write_text_file(dir / "report.csv", render_report(rows, ReportFormat::Csv));
  write_text_file(dir / "report.json", render_report(rows, ReportFormat::Json));
  write_text_file(dir / "report.md", render_report(rows, ReportFormat::Markdown));
  write_text_file(dir / "summary.txt", rows.empty() ? std::string("no rows\n") : render_summary(rows, options));
}

}  // namespace partrans
