// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for unit and acceptance tests. The "sh-a"/"sh-b" pseudo
// languages are POSIX shell scripts: compiling is `sh -n` plus a copy, so a
// full session costs milliseconds.
#pragma once

#include <stdlib.h>

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "partrans/domain.hpp"
#include "partrans/errors.hpp"
#include "partrans/llm_backend.hpp"
#include "partrans/prompt_engine.hpp"

namespace partrans::testing {

namespace fs = std::filesystem;

inline const fs::path kSourceDir = PARTRANS_SOURCE_DIR;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "partrans-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline std::string fence(std::string_view code, std::string_view tag = "sh") {
  return "Here is the code.\n```" + std::string(tag) + "\n" + std::string(code) + "\n```\nDone.";
}

inline LanguageSpec sh_language(const std::string& name) {
  LanguageSpec s;
  s.name = name;
  s.file_extension = ".sh";
  s.compile_cmd = R"(sh -c 'sh -n "$0" && cp "$0" "$1"' {src} {out})";
  s.run_cmd = "sh {bin} {args}";
  s.knowledge = std::make_shared<const KnowledgeAsset>(
      KnowledgeAsset::from_text(name, "Reference card for " + name + ": POSIX shell, echo prints a line."));
  return s;
}

/// Sums 0..n-1 for n = $1 and prints the result plus a timing line.
inline const std::string kGoodScript =
    "n=${1:-3}\n"
    "i=0\n"
    "s=0\n"
    "while [ $i -lt $n ]; do\n"
    "  s=$((s + i))\n"
    "  i=$((i + 1))\n"
    "done\n"
    "echo \"sum $s\"\n"
    "echo \"Elapsed time: 0.001 s\"\n";

/// Fails `sh -n`.
inline const std::string kBrokenScript = "if true; then\n  echo \"sum 0\"\n";

/// Compiles, then exits nonzero.
inline const std::string kCrashingScript = "echo \"partial\"\necho \"boom: bad index\" >&2\nexit 3\n";

inline PromptDictionary sh_dictionary() {
  auto d = PromptDictionary::defaults();
  d.directions["sh-a:sh-b"] = {"You are a professional coding AI assistant for shell scripts.",
                               "Rewrite the following sh-a script as an sh-b script"};
  d.directions["sh-b:sh-a"] = {"You are a professional coding AI assistant for shell scripts.",
                               "Rewrite the following sh-b script as an sh-a script"};
  return d;
}

inline LlmProfile scripted_profile(const std::string& name = "scripted", std::size_t context = 16384,
                                   std::size_t max_response = 1024) {
  LlmProfile p;
  p.name = name;
  p.model_id = name + "-model";
  p.context_length = context;
  p.max_response_tokens = max_response;
  p.backend.kind = "scripted";
  return p;
}

inline TranslationTask sh_task(const LlmProfile& llm, std::string app = "summer") {
  TranslationTask t;
  t.app_name = std::move(app);
  t.source = sh_language("sh-a");
  t.target = sh_language("sh-b");
  t.source_code = kGoodScript;
  t.reference_target_code = kGoodScript;
  t.runtime_args = {"5"};
  t.llm = llm;
  return t;
}

/// Reply queues keyed by script key, shared by every backend the factory
/// makes. Counts model calls across all of them.
class ScriptBook {
 public:
  void set(const std::string& key, std::vector<std::string> replies) {
    std::lock_guard lock(mutex_);
    queues_[key] = std::deque<std::string>(replies.begin(), replies.end());
  }

  std::size_t calls() const { return calls_.load(); }
  std::size_t calls_for(const std::string& key) const {
    std::lock_guard lock(mutex_);
    const auto it = per_key_.find(key);
    return it == per_key_.end() ? 0 : it->second;
  }

  BackendFactory factory() {
    return [this](const LlmProfile& profile, std::string_view key) -> std::unique_ptr<Backend> {
      return std::make_unique<BookBackend>(this, profile.name + "/" + std::string(key));
    };
  }

  /// Keys are "<llm name>/<script key>".
  static std::string key(const std::string& llm, const std::string& script_key) {
    return llm + "/" + script_key;
  }

 private:
  class BookBackend final : public Backend {
   public:
    BookBackend(ScriptBook* book, std::string key) : book_(book), key_(std::move(key)) {}

   private:
    ChatResponse do_complete(const ChatRequest&) override {
      std::lock_guard lock(book_->mutex_);
      ++book_->calls_;
      ++book_->per_key_[key_];
      auto& q = book_->queues_[key_];
      if (q.empty()) throw ScriptExhausted(book_->per_key_[key_] - 1);
      ChatResponse r;
      r.text = q.front();
      q.pop_front();
      return r;
    }

    ScriptBook* book_;
    std::string key_;
  };

  mutable std::mutex mutex_;
  std::map<std::string, std::deque<std::string>> queues_;
  std::map<std::string, std::size_t> per_key_;
  std::atomic<std::size_t> calls_{0};
};

/// A config directory for the sh pseudo languages: knowledge files, prompt
/// dictionary, `n_apps` source pairs, manifest.json and config.json. The
/// config lists profiles "m1" and "m2" with a scripted backend; tests supply
/// replies through a ScriptBook factory.
class ShWorkspace {
 public:
  explicit ShWorkspace(std::size_t n_apps = 2, int max_self_corr = 5) {
    const auto& root = dir_.path();
    write_text_file(root / "sh-a.md", "sh-a reference: POSIX shell, echo prints a line.");
    write_text_file(root / "sh-b.md", "sh-b reference: POSIX shell, printf formats output.");
    write_text_file(root / "prompts.json", sh_dictionary().to_json().dump(2));
    json entries = json::array();
    for (std::size_t i = 0; i < n_apps; ++i) {
      const auto app = "app" + std::to_string(i);
      write_text_file(root / (app + "_a.sh"), kGoodScript);
      write_text_file(root / (app + "_b.sh"), kGoodScript);
      entries.push_back({{"app", app},
                         {"category", "cat" + std::to_string(i)},
                         {"sources", {{"sh-a", app + "_a.sh"}, {"sh-b", app + "_b.sh"}}},
                         {"runtime_args", {std::to_string(i + 3)}}});
    }
    write_text_file(root / "manifest.json", json{{"languages", {"sh-a", "sh-b"}}, {"entries", entries}}.dump(2));
    auto lang = [](const std::string& name) {
      return json{{"file_extension", ".sh"},
                  {"compile_cmd", sh_language(name).compile_cmd},
                  {"run_cmd", "sh {bin} {args}"},
                  {"knowledge", name + ".md"}};
    };
    auto profile = [](const std::string& name) {
      return json{{"name", name},
                  {"model_id", name + "-model"},
                  {"context_length", 16384},
                  {"max_response_tokens", 1024},
                  {"backend", {{"kind", "scripted"}}}};
    };
    config_ = {{"languages", {{"sh-a", lang("sh-a")}, {"sh-b", lang("sh-b")}}},
               {"llms", {profile("m1"), profile("m2")}},
               {"prompts", "prompts.json"},
               {"loop", {{"max_self_corr", max_self_corr}, {"n_runtime_runs", 1}}},
               {"manifest", "manifest.json"},
               {"directions", {"sh-a:sh-b", "sh-b:sh-a"}},
               {"workers", 1}};
    save();
  }

  json& config() { return config_; }
  void save() const { write_text_file(config_path(), config_.dump(2)); }
  fs::path config_path() const { return dir_.path() / "config.json"; }
  fs::path manifest_path() const { return dir_.path() / "manifest.json"; }
  const fs::path& root() const { return dir_.path(); }

 private:
  TempDir dir_;
  json config_;
};

/// Deterministic generator seeded per test.
inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace partrans::testing
