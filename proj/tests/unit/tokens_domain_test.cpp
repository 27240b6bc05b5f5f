// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "partrans/domain.hpp"
#include "partrans/errors.hpp"
#include "partrans/tokens.hpp"
#include "support.hpp"

using namespace partrans;
using namespace partrans::testing;

TEST_CASE("token estimate is ceil(bytes/4)") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("a") == 1);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
  CHECK(estimate_tokens(std::string(4000, 'x')) == 1000);
}

TEST_CASE("truncate_keep_tail keeps the tail and fits the budget") {
  const auto est = default_token_estimator();
  CHECK(truncate_keep_tail("short", 10, est) == "short");

  auto gen = rng(7);
  for (int i = 0; i < 200; ++i) {
    std::string text;
    const auto len = gen() % 2000;
    for (std::size_t k = 0; k < len; ++k) text += static_cast<char>('a' + gen() % 26);
    const std::size_t budget = 4 + gen() % 200;
    const auto out = truncate_keep_tail(text, budget, est);
    if (est(text) <= budget) {
      CHECK(out == text);
      continue;
    }
    REQUIRE(out.rfind("[...truncated]", 0) == 0);
    CHECK(est(out) <= budget);
    const auto tail = out.substr(std::string("[...truncated]").size());
    CHECK(text.size() >= tail.size());
    CHECK(text.compare(text.size() - tail.size(), tail.size(), tail) == 0);
    // maximal: one more byte of tail would not fit
    if (tail.size() < text.size()) {
      CHECK(est("[...truncated]" + text.substr(text.size() - tail.size() - 1)) > budget);
    }
  }
}

TEST_CASE("language spec validation") {
  auto spec = sh_language("sh-a");
  CHECK(validate_language_spec(spec).empty());

  spec.compile_cmd = "g++ {src}";
  auto errors = validate_language_spec(spec);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0] == "compile_cmd: missing {out}");

  spec = sh_language("sh-a");
  spec.run_cmd = "{bin} {bin}";
  errors = validate_language_spec(spec);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].find("{bin} appears 2 times") != std::string::npos);

  spec = sh_language("a:b");
  CHECK_FALSE(validate_language_spec(spec).empty());
  CHECK_THROWS_AS(require_valid(spec), ConfigError);
}

TEST_CASE("direction keys") {
  const auto d = Direction::parse("openmp:cuda");
  CHECK(d.source == "openmp");
  CHECK(d.target == "cuda");
  CHECK(d.key() == "openmp:cuda");
  CHECK(d.slug() == "openmp-to-cuda");
  CHECK_THROWS_AS(Direction::parse("openmp"), ConfigError);
  CHECK_THROWS_AS(Direction::parse(":cuda"), ConfigError);
  CHECK_THROWS_AS(Direction::parse("a:b:c"), ConfigError);
}

TEST_CASE("metrics derive the ratio from the runtimes") {
  const auto m = make_metrics(1.2440, 1.2039, 0.44, 0.83, 1, OutputVerdict::Match);
  CHECK(m.ratio == doctest::Approx(1.2440 / 1.2039));
  CHECK(validate_metrics(m).empty());
  CHECK_THROWS(make_metrics(1.0, 0.0, 0.5, 0.5, 0, OutputVerdict::Match));

  auto bad = m;
  bad.ratio = 2.0;
  CHECK_FALSE(validate_metrics(bad).empty());
  bad = m;
  bad.sim_t = 1.5;
  CHECK_FALSE(validate_metrics(bad).empty());
}

namespace {

std::string random_text(std::mt19937_64& g, std::size_t max_len) {
  static const std::vector<std::string> alphabet = {"a", "b", "c", " ", "x", "{", "}", "(", ";", "\n",
                                                    "\t", "\"", "\\", "\xc3\xa9"};
  std::string s;
  const auto n = g() % (max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s += alphabet[g() % alphabet.size()];
  return s;
}

ToolResult random_tool(std::mt19937_64& g, ToolKind kind) {
  ToolResult r;
  r.kind = kind;
  r.exit_ok = g() % 2;
  r.exit_code = static_cast<int>(g() % 256);
  r.std_out = random_text(g, 30);
  r.std_err = random_text(g, 30);
  r.wall_time_s = static_cast<double>(g() % 100000) / 1000.0;
  r.timed_out = g() % 5 == 0;
  r.command = random_text(g, 10);
  return r;
}

SessionRecord random_record(std::mt19937_64& g) {
  SessionRecord s;
  s.app_name = "app" + std::to_string(g() % 100);
  s.direction = {"sh-a", "sh-b"};
  s.llm_name = random_text(g, 8);
  s.model_id = random_text(g, 8);
  for (std::size_t i = 0, n = g() % 3; i < n; ++i) s.runtime_args.push_back(std::to_string(g() % 1000));
  const auto kinds = {PromptKind::KnowledgeSummary, PromptKind::SourceDescription, PromptKind::Translation,
                      PromptKind::CompileCorrection, PromptKind::ExecCorrection};
  for (std::size_t i = 0, n = g() % 6; i < n; ++i) {
    TranscriptEntry e;
    e.kind = *(kinds.begin() + g() % kinds.size());
    e.system_prompt = random_text(g, 20);
    e.prompt = random_text(g, 40);
    e.response = random_text(g, 40);
    e.timestamp = iso8601_now();
    e.cached = g() % 2;
    s.transcript.push_back(e);
    if (e.kind == PromptKind::CompileCorrection || e.kind == PromptKind::ExecCorrection) ++s.self_corr;
  }
  for (int i = 1, n = static_cast<int>(g() % 4); i <= n; ++i) {
    Attempt a;
    a.index = i;
    a.code_path = "/tmp/a" + std::to_string(i);
    a.code = random_text(g, 40);
    a.compile = random_tool(g, ToolKind::Compile);
    if (g() % 2) a.execute = random_tool(g, ToolKind::Execute);
    s.attempts.push_back(a);
  }
  s.status = static_cast<SessionStatus>(g() % 6);
  if (g() % 2) s.final_code = random_text(g, 20);
  if (g() % 2) s.final_stdout = random_text(g, 20);
  if (g() % 2) s.final_runtime_s = 0.25 * static_cast<double>(g() % 40);
  s.baseline.steps.push_back(random_tool(g, ToolKind::Compile));
  if (g() % 2) s.baseline.target_stdout = random_text(g, 20);
  if (g() % 2) s.baseline.target_runtime_s = 1.5;
  s.baseline.failed_stage = g() % 2 ? "" : "source compile";
  if (g() % 2) {
    s.metrics = make_metrics(1.0 + static_cast<double>(g() % 100), 0.5 + static_cast<double>(g() % 100),
                             0.01 * static_cast<double>(g() % 101), 0.01 * static_cast<double>(g() % 101),
                             s.self_corr, static_cast<OutputVerdict>(g() % 3));
  }
  s.detail = random_text(g, 20);
  return s;
}

}  // namespace

TEST_CASE("session record JSON round-trip (random records)") {
  auto g = rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto rec = random_record(g);
    const auto back = json::parse(json(rec).dump()).get<SessionRecord>();
    REQUIRE(back == rec);
  }
}

TEST_CASE("invalid UTF-8 in tool output serialises with replacement characters") {
  ToolResult r;
  r.std_err = "bad byte \xff here";
  const auto text = dump_json(json(r));
  CHECK(text.find("bad byte \xef\xbf\xbd here") != std::string::npos);
  CHECK_NOTHROW(json::parse(text));
}

TEST_CASE("session record invariants") {
  SessionRecord r;
  r.app_name = "x";
  r.status = SessionStatus::BaselineFailed;
  CHECK(validate_session_record(r).empty());

  r.self_corr = 1;
  CHECK_FALSE(validate_session_record(r).empty());
  r.self_corr = 0;

  r.status = SessionStatus::Success;
  CHECK_FALSE(validate_session_record(r).empty());  // no attempts, no final code

  Attempt a;
  a.index = 1;
  a.compile.exit_ok = false;
  a.execute = ToolResult{};
  r.status = SessionStatus::CompileBudgetExceeded;
  r.attempts.push_back(a);
  const auto errors = validate_session_record(r);
  REQUIRE_FALSE(errors.empty());
  CHECK(errors.back().find("executed after a failed compile") != std::string::npos);
}

TEST_CASE("knowledge digest tracks the text") {
  const auto a = KnowledgeAsset::from_text("cuda", "abc");
  const auto b = KnowledgeAsset::from_text("cuda", "abd");
  CHECK(a.token_count == 1);
  CHECK(a.digest() != b.digest());
  CHECK(a.digest() == KnowledgeAsset::from_text("openmp", "abc").digest());
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}
