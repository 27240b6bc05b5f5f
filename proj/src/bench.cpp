// SPDX-License-Identifier: Apache-2.0
#include "partrans/bench.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <set>
#include <thread>

#include "partrans/errors.hpp"

namespace fs = std::filesystem;

namespace partrans {

// Manifest -----------------------------------------------------------------

std::vector<std::string> SuiteManifest::categories() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (std::find(out.begin(), out.end(), e.category) == out.end()) out.push_back(e.category);
  }
  return out;
}

SuiteManifest parse_suite(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ManifestError("manifest must be a JSON object");
  SuiteManifest m;
  std::vector<std::string> errors;

  if (const auto it = doc.find("languages"); it != doc.end() && it->is_array()) {
    for (const auto& l : *it) {
      if (l.is_string()) m.languages.push_back(l.get<std::string>());
      else errors.emplace_back("languages: entries must be strings");
    }
  }
  if (m.languages.size() < 2) errors.emplace_back("languages: need at least two language names");

  const auto entries = doc.find("entries");
  if (entries == doc.end() || !entries->is_array() || entries->empty()) {
    errors.emplace_back("entries: need a nonempty array");
  } else {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < entries->size(); ++i) {
      const auto& e = (*entries)[i];
      std::string where = "entries[" + std::to_string(i) + "]";
      if (!e.is_object()) {
        errors.push_back(where + ": not an object");
        continue;
      }
      SuiteEntry entry;
      if (e.contains("app") && e["app"].is_string()) entry.app_name = e["app"].get<std::string>();
      if (entry.app_name.empty()) {
        errors.push_back(where + ": missing app");
      } else {
        where += " (" + entry.app_name + ")";
        if (!seen.insert(entry.app_name).second) errors.push_back(where + ": duplicate app");
      }
      if (e.contains("category") && e["category"].is_string()) {
        entry.category = e["category"].get<std::string>();
      }
      if (entry.category.empty()) errors.push_back(where + ": missing category");

      const auto sources = e.find("sources");
      if (sources == e.end() || !sources->is_object()) {
        errors.push_back(where + ": missing sources");
      } else {
        for (const auto& [lang, path] : sources->items()) {
          if (!path.is_string() || path.get<std::string>().empty()) {
            errors.push_back(where + ": sources." + lang + " must be a path");
            continue;
          }
          fs::path p = path.get<std::string>();
          entry.sources[lang] = (p.is_absolute() ? p : base_dir / p).lexically_normal();
        }
        for (const auto& lang : m.languages) {
          if (!entry.sources.count(lang)) errors.push_back(where + ": no " + lang + " source");
        }
      }

      if (const auto args = e.find("runtime_args"); args != e.end() && !args->is_null()) {
        if (!args->is_array()) {
          errors.push_back(where + ": runtime_args must be an array");
        } else {
          for (const auto& a : *args) {
            if (a.is_string()) entry.runtime_args.push_back(a.get<std::string>());
            else if (a.is_number_integer()) entry.runtime_args.push_back(std::to_string(a.get<long long>()));
            else errors.push_back(where + ": runtime_args must be strings or integers");
          }
        }
      }
      m.entries.push_back(std::move(entry));
    }
  }

  if (!errors.empty()) {
    std::string message = "invalid manifest:";
    for (const auto& e : errors) message += "\n  " + e;
    throw ManifestError(message);
  }
  return m;
}

SuiteManifest load_suite(const fs::path& manifest_path) {
  if (!fs::is_regular_file(manifest_path)) {
    throw ManifestError("manifest not found: " + manifest_path.string());
  }
  json doc;
  try {
    doc = json::parse(read_text_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw ManifestError("manifest " + manifest_path.string() + " does not parse: " + e.what());
  }
  return parse_suite(doc, fs::absolute(manifest_path).parent_path());
}

std::vector<std::string> missing_sources(const SuiteManifest& manifest) {
  std::vector<std::string> out;
  for (const auto& e : manifest.entries) {
    for (const auto& [lang, path] : e.sources) {
      if (!fs::is_regular_file(path)) out.push_back(e.app_name + ": " + lang + ": " + path.string());
    }
  }
  return out;
}

// Rows ---------------------------------------------------------------------

namespace {

constexpr std::pair<RowStatus, std::string_view> kRowStatusNames[] = {
    {RowStatus::Success, "Success"},
    {RowStatus::CompileBudgetExceeded, "CompileBudgetExceeded"},
    {RowStatus::ExecBudgetExceeded, "ExecBudgetExceeded"},
    {RowStatus::ExtractionFailed, "ExtractionFailed"},
    {RowStatus::BaselineFailed, "BaselineFailed"},
    {RowStatus::ContextOverflow, "ContextOverflow"},
    {RowStatus::OutputMismatch, "OutputMismatch"},
    {RowStatus::NotGenerated, "NotGenerated"},
    {RowStatus::InfraError, "InfraError"},
};

RowStatus from_session_status(SessionStatus s) {
  switch (s) {
    case SessionStatus::Success: return RowStatus::Success;
    case SessionStatus::CompileBudgetExceeded: return RowStatus::CompileBudgetExceeded;
    case SessionStatus::ExecBudgetExceeded: return RowStatus::ExecBudgetExceeded;
    case SessionStatus::ExtractionFailed: return RowStatus::ExtractionFailed;
    case SessionStatus::BaselineFailed: return RowStatus::BaselineFailed;
    case SessionStatus::ContextOverflow: return RowStatus::ContextOverflow;
  }
  return RowStatus::InfraError;
}

}  // namespace

std::string_view to_string(RowStatus status) {
  for (const auto& [s, name] : kRowStatusNames) {
    if (s == status) return name;
  }
  return "InfraError";
}

RowStatus parse_row_status(std::string_view text) {
  for (const auto& [s, name] : kRowStatusNames) {
    if (name == text) return s;
  }
  throw ConfigError("unknown row status '" + std::string(text) + "'");
}

std::vector<std::string> validate_row(const ResultRow& row) {
  std::vector<std::string> errors;
  if (row.app_name.empty()) errors.emplace_back("app_name empty");
  if (row.llm_name.empty()) errors.emplace_back("llm_name empty");
  if (row.status == RowStatus::Success && !row.metrics) errors.emplace_back("Success row without metrics");
  if (row.status != RowStatus::Success && row.metrics) {
    errors.push_back(std::string(to_string(row.status)) + " row carries metrics");
  }
  if (row.metrics) {
    for (const auto& e : validate_metrics(*row.metrics)) errors.push_back("metrics." + e);
  }
  return errors;
}

void to_json(json& j, const ResultRow& r) {
  j = json{{"cell_index", r.cell_index},
           {"app", r.app_name},
           {"llm", r.llm_name},
           {"direction", r.direction.key()},
           {"status", to_string(r.status)},
           {"metrics", r.metrics ? json(*r.metrics) : json(nullptr)},
           {"config_hash", r.config_hash},
           {"detail", r.detail},
           {"erratum", r.erratum},
           {"wall_time_s", r.wall_time_s}};
}

void from_json(const json& j, ResultRow& r) {
  r.cell_index = j.value("cell_index", std::size_t{0});
  r.app_name = j.at("app").get<std::string>();
  r.llm_name = j.at("llm").get<std::string>();
  r.direction = Direction::parse(j.at("direction").get<std::string>());
  r.status = parse_row_status(j.at("status").get<std::string>());
  if (const auto it = j.find("metrics"); it != j.end() && !it->is_null()) {
    r.metrics = it->get<MetricsRecord>();
  } else {
    r.metrics.reset();
  }
  r.config_hash = j.value("config_hash", std::string());
  r.detail = j.value("detail", std::string());
  r.erratum = j.value("erratum", false);
  r.wall_time_s = j.value("wall_time_s", 0.0);
}

ResultRow row_from_session(const SessionRecord& record, std::size_t cell_index,
                           std::string config_hash) {
  ResultRow row;
  row.cell_index = cell_index;
  row.app_name = record.app_name;
  row.llm_name = record.llm_name;
  row.direction = record.direction;
  row.status = from_session_status(record.status);
  row.config_hash = std::move(config_hash);
  row.detail = record.detail;
  if (row.status == RowStatus::Success) {
    if (!record.metrics) {
      row.status = RowStatus::InfraError;
      row.detail = "session succeeded without a reference to score against";
    } else if (record.metrics->output_verdict == OutputVerdict::Mismatch) {
      row.status = RowStatus::OutputMismatch;
      row.detail = "generated output differs from the reference output";
    } else {
      row.metrics = record.metrics;
    }
  }
  return row;
}

// Persistence --------------------------------------------------------------

RowStore::RowStore(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
}

void RowStore::append(const ResultRow& row) {
  const std::string line = dump_json(json(row)) + "\n";
  std::lock_guard lock(mutex_);
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw RowStoreError("cannot open " + path_.string() + ": " + std::strerror(errno));
  const auto n = ::write(fd, line.data(), line.size());
  const int err = errno;
  ::fsync(fd);
  ::close(fd);
  if (n != static_cast<ssize_t>(line.size())) {
    throw RowStoreError("short write to " + path_.string() + ": " + std::strerror(err));
  }
}

std::vector<ResultRow> load_rows(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw RowStoreError("no result rows at " + path.string());
  std::ifstream in(path);
  std::vector<ResultRow> rows;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(n);
    try {
      rows.push_back(json::parse(line).get<ResultRow>());
    } catch (const std::exception& e) {
      throw RowStoreError(where + ": corrupt row: " + e.what());
    }
    if (const auto errors = validate_row(rows.back()); !errors.empty()) {
      throw RowStoreError(where + ": invalid row: " + errors.front());
    }
  }
  if (rows.empty()) throw RowStoreError("no result rows in " + path.string());
  return rows;
}

std::vector<ResultRow> latest_rows(std::vector<ResultRow> rows) {
  std::map<std::tuple<std::string, std::string, Direction>, std::size_t> slot;
  std::vector<ResultRow> out;
  for (auto& r : rows) {
    auto key = std::make_tuple(r.app_name, r.llm_name, r.direction);
    if (const auto it = slot.find(key); it != slot.end()) {
      out[it->second] = std::move(r);
    } else {
      slot.emplace(std::move(key), out.size());
      out.push_back(std::move(r));
    }
  }
  return out;
}

// Published tables ---------------------------------------------------------

namespace {

json parse_file(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::vector<PublishedApp> load_published_runtimes(const fs::path& path) {
  const auto doc = parse_file(path);
  std::vector<PublishedApp> out;
  for (const auto& a : doc.at("apps")) {
    PublishedApp app;
    app.app_name = a.at("app").get<std::string>();
    app.category = a.at("category").get<std::string>();
    app.runtime_args = a.at("runtime_args").get<std::vector<std::string>>();
    app.runtime_s = a.at("runtime_s").get<std::map<std::string, double>>();
    out.push_back(std::move(app));
  }
  return out;
}

PublishedTable load_published_table(const fs::path& path) {
  const auto doc = parse_file(path);
  PublishedTable t;
  t.direction = Direction::parse(doc.at("direction").get<std::string>());
  t.llms = doc.at("llms").get<std::vector<std::string>>();
  for (const auto& r : doc.at("rows")) {
    PublishedRow row;
    row.app_name = r.at("app").get<std::string>();
    row.llm_name = r.at("llm").get<std::string>();
    row.runtime_s = optional_field<double>(r, "runtime_s");
    row.ratio = optional_field<double>(r, "ratio");
    row.sim_t = optional_field<double>(r, "sim_t");
    row.sim_l = optional_field<double>(r, "sim_l");
    row.self_corr = optional_field<int>(r, "self_corr");
    row.erratum = r.value("erratum", false);
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<ResultRow> published_rows(const PublishedTable& table,
                                      const std::vector<PublishedApp>& runtimes,
                                      std::size_t first_index) {
  std::vector<ResultRow> out;
  for (const auto& p : table.rows) {
    ResultRow row;
    row.cell_index = first_index + out.size();
    row.app_name = p.app_name;
    row.llm_name = p.llm_name;
    row.direction = table.direction;
    row.erratum = p.erratum;
    row.config_hash = "published";
    if (!p.runtime_s) {
      row.status = RowStatus::NotGenerated;
      out.push_back(std::move(row));
      continue;
    }
    const auto app = std::find_if(runtimes.begin(), runtimes.end(),
                                  [&](const PublishedApp& a) { return a.app_name == p.app_name; });
    if (app == runtimes.end() || !app->runtime_s.count(table.direction.target)) {
      throw ConfigError("no published " + table.direction.target + " runtime for " + p.app_name);
    }
    row.status = RowStatus::Success;
    row.metrics = make_metrics(app->runtime_s.at(table.direction.target), *p.runtime_s,
                               p.sim_t.value_or(0.0), p.sim_l.value_or(0.0), p.self_corr.value_or(0),
                               OutputVerdict::Unchecked);
    out.push_back(std::move(row));
  }
  return out;
}

// Matrix -------------------------------------------------------------------

std::string cell_script_key(const std::string& app, const Direction& direction) {
  return app + "__" + direction.slug();
}

std::string knowledge_script_key(const std::string& language) { return "knowledge__" + language; }

namespace {

std::string file_safe(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
    out += ok ? c : '_';
  }
  return out;
}

bool is_final(RowStatus s) { return s != RowStatus::InfraError; }

struct Cell {
  std::size_t index;
  const SuiteEntry* entry;
  const LlmProfile* llm;
  Direction direction;
};

}  // namespace

fs::path session_dir(const fs::path& out_dir, const std::string& app, const Direction& direction,
                     const std::string& llm) {
  return out_dir / "sessions" / (file_safe(app) + "__" + direction.slug() + "__" + file_safe(llm));
}

std::vector<ResultRow> run_matrix(const SuiteManifest& manifest, const MatrixConfig& cfg) {
  auto log = [&](const std::string& msg) {
    if (cfg.log) cfg.log(msg);
  };
  for (const auto& d : cfg.directions) {
    for (const auto& lang : {d.source, d.target}) {
      if (!cfg.languages.count(lang)) throw ConfigError("direction " + d.key() + ": unknown language " + lang);
    }
  }

  fs::create_directories(cfg.out_dir);
  const auto rows_path = cfg.out_dir / kRowsFile;

  // Completed rows from an earlier run; unreadable lines are ignored here,
  // which only means the affected cells run again.
  std::map<std::tuple<std::string, std::string, std::string>, ResultRow> done;
  if (fs::exists(rows_path)) {
    std::ifstream in(rows_path);
    std::string line;
    while (std::getline(in, line)) {
      try {
        auto r = json::parse(line).get<ResultRow>();
        if (r.config_hash == cfg.config_hash && is_final(r.status) && validate_row(r).empty()) {
          done[{r.app_name, r.llm_name, r.direction.key()}] = std::move(r);
        }
      } catch (const std::exception&) {
        log("skipping unreadable line in " + rows_path.string());
      }
    }
  }

  std::vector<Cell> cells;
  for (const auto& e : manifest.entries) {
    for (const auto& llm : cfg.llms) {
      for (const auto& d : cfg.directions) cells.push_back({cells.size(), &e, &llm, d});
    }
  }

  std::vector<std::optional<ResultRow>> results(cells.size());
  std::vector<const Cell*> pending;
  for (const auto& c : cells) {
    if (const auto it = done.find({c.entry->app_name, c.llm->name, c.direction.key()}); it != done.end()) {
      results[c.index] = it->second;
      results[c.index]->cell_index = c.index;
    } else {
      pending.push_back(&c);
    }
  }
  log(std::to_string(cells.size() - pending.size()) + " of " + std::to_string(cells.size()) +
      " cells already complete");

  PromptEngine engine(cfg.prompts);

  // Warm the summary cache in a fixed order before any worker starts.
  std::set<std::pair<std::string, std::string>> warmed;
  for (const auto* c : pending) {
    const auto& lang = c->direction.target;
    if (!warmed.insert({c->llm->name, lang}).second) continue;
    const auto& spec = cfg.languages.at(lang);
    if (!spec.knowledge) throw ConfigError("language '" + lang + "' has no knowledge asset");
    try {
      auto backend = cfg.factory(*c->llm, knowledge_script_key(lang));
      engine.summarize_knowledge(*backend, *c->llm, *spec.knowledge);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      log("knowledge summary for " + lang + " with " + c->llm->name + " deferred: " + e.what());
    }
  }

  RowStore store(rows_path);
  std::atomic<std::size_t> next{0};
  std::mutex first_error_mutex;
  std::exception_ptr first_error;

  auto run_cell = [&](const Cell& c) {
    const auto started = std::chrono::steady_clock::now();
    const auto& entry = *c.entry;
    TranslationTask task;
    task.app_name = entry.app_name;
    task.source = cfg.languages.at(c.direction.source);
    task.target = cfg.languages.at(c.direction.target);
    task.source_code = read_text_file(entry.sources.at(c.direction.source));
    task.reference_target_code = read_text_file(entry.sources.at(c.direction.target));
    task.runtime_args = entry.runtime_args;
    task.llm = *c.llm;

    const auto dir = session_dir(cfg.out_dir, entry.app_name, c.direction, c.llm->name);
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);

    ResultRow row;
    try {
      auto backend = cfg.factory(*c.llm, cell_script_key(entry.app_name, c.direction));
      PipelineContext ctx{*backend, engine, dir, cfg.resources, cfg.log};
      const auto record = run_pipeline(task, cfg.loop, ctx);
      write_session_files(record, dir);
      if (record.final_code) {
        write_text_file(dir / (entry.app_name + "__final" + task.target.file_extension), *record.final_code);
      }
      row = row_from_session(record, c.index, cfg.config_hash);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      row.cell_index = c.index;
      row.app_name = entry.app_name;
      row.llm_name = c.llm->name;
      row.direction = c.direction;
      row.status = RowStatus::InfraError;
      row.config_hash = cfg.config_hash;
      row.detail = e.what();
    }
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    store.append(row);
    log(entry.app_name + " [" + c.direction.key() + ", " + c.llm->name + "] -> " +
        std::string(to_string(row.status)));
    results[c.index] = std::move(row);
  };

  auto worker = [&] {
    for (;;) {
      if (cfg.stop && cfg.stop->load()) return;
      {
        std::lock_guard lock(first_error_mutex);
        if (first_error) return;
      }
      const auto i = next.fetch_add(1);
      if (i >= pending.size()) return;
      try {
        run_cell(*pending[i]);
      } catch (...) {
        std::lock_guard lock(first_error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(pending.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<ResultRow> out;
  for (auto& r : results) {
    if (r) out.push_back(std::move(*r));
  }
  return out;
}

}  // namespace partrans
