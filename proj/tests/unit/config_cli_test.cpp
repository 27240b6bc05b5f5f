// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <httplib.h>

#include <sstream>
#include <thread>

#include "partrans/cli.hpp"
#include "partrans/config.hpp"
#include "partrans/errors.hpp"
#include "partrans/process.hpp"
#include "support.hpp"

using namespace partrans;
using namespace partrans::testing;

namespace {

struct Captured {
  std::ostringstream out;
  std::ostringstream err;
  CliEnv env{out, err};
};

std::string messages_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("shipped configs load") {
  const auto desk = load_config(kSourceDir / "config/desk.json");
  CHECK(desk.languages.size() == 2);
  CHECK(desk.llms.size() == 1);
  CHECK(desk.directions.size() == 2);
  CHECK(desk.loop.max_self_corr == 5);
  CHECK(desk.language("omp-host").env.at("OMP_NUM_THREADS") == "2");
  CHECK(desk.prompts.directions.count("serial:omp-host"));

  const auto hec = load_config(kSourceDir / "config/hecbench.json");
  CHECK(hec.llms.size() == 4);
  CHECK(hec.language("cuda").knowledge);
  CHECK(hec.llm("GPT-4").backend.api_key_env == "OPENAI_API_KEY");
  CHECK_THROWS_AS(hec.llm("GPT-5"), ConfigError);
}

TEST_CASE("config errors are collected and name their location") {
  ShWorkspace ws;
  auto doc = ws.config();
  doc["colour"] = "blue";
  doc["languages"]["sh-a"]["compile_cmd"] = "sh {src}";
  doc["languages"]["sh-b"]["knowledge"] = "missing.md";
  doc["loop"]["max_self_corr"] = 0;
  const auto msg = messages_of([&] { parse_config(doc, ws.root()); });
  CHECK(msg.find("colour") != std::string::npos);
  CHECK(msg.find("{out}") != std::string::npos);
  CHECK(msg.find("missing.md") != std::string::npos);
  CHECK(msg.find("max_self_corr") != std::string::npos);

  doc = ws.config();
  doc["directions"] = {"sh-a:sh-c"};
  CHECK_FALSE(messages_of([&] { parse_config(doc, ws.root()); }).empty());

  doc = ws.config();
  doc["llms"][0]["backend"]["kind"] = "telepathy";
  CHECK_FALSE(messages_of([&] { parse_config(doc, ws.root()); }).empty());

  CHECK_THROWS_AS(load_config(ws.root() / "nope.json"), ConfigError);
  write_text_file(ws.root() / "broken.json", "{ not json");
  CHECK_THROWS_AS(load_config(ws.root() / "broken.json"), ConfigError);
}

TEST_CASE("config hash tracks outcome-relevant settings only") {
  ShWorkspace ws;
  const auto base = config_hash(load_config(ws.config_path()));
  CHECK(base == config_hash(load_config(ws.config_path())));

  ::setenv("PARTRANS_HASH_KEY", "sk-one", 1);
  ws.config()["llms"][0]["backend"] = {{"kind", "http"}, {"url", "http://127.0.0.1:1/v1"}, {"api_key_env", "PARTRANS_HASH_KEY"}};
  ws.save();
  const auto with_http = config_hash(load_config(ws.config_path()));
  ::setenv("PARTRANS_HASH_KEY", "sk-two", 1);
  CHECK(with_http == config_hash(load_config(ws.config_path())));

  ws.config()["loop"]["max_self_corr"] = 9;
  ws.save();
  CHECK(config_hash(load_config(ws.config_path())) != with_http);

  const auto before_knowledge = config_hash(load_config(ws.config_path()));
  write_text_file(ws.root() / "sh-b.md", "changed knowledge");
  CHECK(config_hash(load_config(ws.config_path())) != before_knowledge);
  ShWorkspace other;  // same content in another directory
  CHECK(config_hash(load_config(other.config_path())) == base);
}

TEST_CASE("validate: pass, baseline failure with stderr, config error") {
  ShWorkspace ws;
  ScriptBook book;
  Captured c;
  c.env.factory = book.factory();
  ValidateArgs args{ws.config_path(), std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  CHECK(cmd_validate(args, c.env) == exit_code::kOk);
  CHECK(c.out.str().find("PASS app0 [sh-a:sh-b]") != std::string::npos);
  CHECK(c.out.str().find("PASS app1 [sh-b:sh-a]") != std::string::npos);

  write_text_file(ws.root() / "app1_a.sh", kBrokenScript);
  Captured bad;
  bad.env.factory = book.factory();
  CHECK(cmd_validate(args, bad.env) == exit_code::kBaselineFailed);
  CHECK(bad.out.str().find("FAIL app1 [sh-a:sh-b]: source compile") != std::string::npos);
  CHECK(bad.out.str().find("$ sh -c") != std::string::npos);
  CHECK(book.calls() == 0);

  Captured missing;
  args.config = ws.root() / "absent.json";
  CHECK(cmd_validate(args, missing.env) == exit_code::kConfig);
}

TEST_CASE("translate: happy path writes the session, final code and metadata") {
  ShWorkspace ws;
  ScriptBook book;
  book.set("m1/app0__sh-a-to-sh-b", {"summary", "description", fence(kBrokenScript), fence(kGoodScript)});
  Captured c;
  c.env.factory = book.factory();
  TempDir out;
  TranslateArgs args{ws.config_path(), std::nullopt, "app0", "sh-a:sh-b", "m1", out.path(), std::nullopt};
  REQUIRE(cmd_translate(args, c.env) == exit_code::kOk);
  CHECK(c.out.str().find("status: Success\nself_corr: 1\n") != std::string::npos);
  CHECK(c.out.str().find("output: Match") != std::string::npos);
  CHECK(fs::exists(out / "session.json"));
  CHECK(fs::exists(out / "transcript.log"));
  CHECK(read_text_file(out / "app0__final.sh").find("echo \"sum $s\"") != std::string::npos);
  const auto meta = json::parse(read_text_file(out / "app0__metadata.json"));
  CHECK(meta["stdout"] == "sum 3\nElapsed time: 0.001 s\n");
  const auto rec = json::parse(read_text_file(out / "session.json")).get<SessionRecord>();
  CHECK(rec.self_corr == 1);
  CHECK(validate_session_record(rec).empty());
}

TEST_CASE("translate exit codes") {
  ShWorkspace ws;
  TempDir out;
  SUBCASE("budget exceeded maps to 3") {
    ScriptBook book;
    book.set("m1/app0__sh-a-to-sh-b", {"s", "d", fence(kBrokenScript), fence(kBrokenScript), fence(kGoodScript)});
    Captured c;
    c.env.factory = book.factory();
    TranslateArgs args{ws.config_path(), std::nullopt, "app0", "sh-a:sh-b", "m1", out.path(), 1};
    CHECK(cmd_translate(args, c.env) == exit_code::kCompileBudget);
    CHECK(book.calls() == 4);
  }
  SUBCASE("unknown llm maps to 2") {
    Captured c;
    TranslateArgs args{ws.config_path(), std::nullopt, "app0", "sh-a:sh-b", "gpt-9", out.path(), std::nullopt};
    CHECK(cmd_translate(args, c.env) == exit_code::kConfig);
    CHECK(c.err.str().find("gpt-9") != std::string::npos);
  }
  SUBCASE("unknown app maps to 2") {
    Captured c;
    TranslateArgs args{ws.config_path(), std::nullopt, "nope", "sh-a:sh-b", "m1", out.path(), std::nullopt};
    CHECK(cmd_translate(args, c.env) == exit_code::kConfig);
  }
  SUBCASE("exhausted script is a backend failure") {
    ScriptBook book;
    Captured c;
    c.env.factory = book.factory();
    TranslateArgs args{ws.config_path(), std::nullopt, "app0", "sh-a:sh-b", "m1", out.path(), std::nullopt};
    CHECK(cmd_translate(args, c.env) == exit_code::kBackend);
  }
  CHECK(exit_code_for(SessionStatus::ExtractionFailed) == 5);
  CHECK(exit_code_table().find("CompileBudgetExceeded") != std::string::npos);
}

TEST_CASE("bench then report from persisted rows") {
  ShWorkspace ws;
  ScriptBook book;
  for (const auto* llm : {"m1", "m2"}) {
    book.set(ScriptBook::key(llm, "knowledge__sh-a"), {"summary a"});
    book.set(ScriptBook::key(llm, "knowledge__sh-b"), {"summary b"});
    for (const auto* app : {"app0", "app1"}) {
      for (const auto* slug : {"sh-a-to-sh-b", "sh-b-to-sh-a"}) {
        book.set(ScriptBook::key(llm, std::string(app) + "__" + slug), {"description", fence(kGoodScript)});
      }
    }
  }
  TempDir out;
  Captured c;
  c.env.factory = book.factory();
  BenchArgs args;
  args.config = ws.config_path();
  args.out_dir = out.path();
  args.workers = 2;
  REQUIRE(cmd_bench(args, c.env) == exit_code::kOk);
  CHECK(c.out.str().find("sh-a:sh-b: success 100.0% (4/4)") != std::string::npos);
  for (const auto* f : {"rows.jsonl", "report.csv", "report.json", "report.md", "summary.txt"}) {
    CHECK(fs::exists(out / f));
  }

  Captured r;
  ReportArgs ra{out.path(), std::nullopt, {}};
  CHECK(cmd_report(ra, r.env) == exit_code::kOk);
  CHECK(r.out.str() == read_text_file(out / "summary.txt"));

  Captured j;
  ra.format = ReportFormat::Json;
  CHECK(cmd_report(ra, j.env) == exit_code::kOk);
  const auto doc = json::parse(j.out.str());
  CHECK(doc.is_array());
  CHECK(doc.size() == 8);

  TempDir empty;
  Captured e;
  CHECK(cmd_report(ReportArgs{empty.path(), std::nullopt, {}}, e.env) == exit_code::kRows);
}

TEST_CASE("bench manifest errors exit 4") {
  ShWorkspace ws;
  fs::remove(ws.root() / "app1_b.sh");
  TempDir out;
  Captured c;
  BenchArgs args;
  args.config = ws.config_path();
  args.out_dir = out.path();
  CHECK(cmd_bench(args, c.env) == exit_code::kManifest);
  CHECK(c.err.str().find("app1") != std::string::npos);

  write_text_file(ws.manifest_path(), "{\"languages\": [\"sh-a\", \"sh-b\"], \"entries\": []}");
  Captured d;
  CHECK(cmd_bench(args, d.env) == exit_code::kManifest);
}

TEST_CASE("bench replay of the published tables and report over it") {
  TempDir out;
  Captured c;
  BenchArgs args;
  args.replay = kSourceDir / "fixtures/published";
  args.out_dir = out.path();
  REQUIRE(cmd_bench(args, c.env) == exit_code::kOk);
  CHECK(c.out.str().find("openmp:cuda: success 80.0% (32/40)") != std::string::npos);
  CHECK(c.out.str().find("cuda:openmp: success 85.0% (34/40)") != std::string::npos);

  Captured r;
  CHECK(cmd_report(ReportArgs{out.path(), std::nullopt, {}}, r.env) == exit_code::kOk);
  CHECK(r.out.str() == c.out.str());
}

namespace {

/// Answers chat requests from a fixed queue and records the auth header.
class ReplayServer {
 public:
  explicit ReplayServer(std::vector<std::string> replies) : replies_(std::move(replies)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      auth_ = req.get_header_value("Authorization");
      const auto text = next_ < replies_.size() ? replies_[next_++] : std::string("out of replies");
      res.set_content(json{{"choices", {{{"message", {{"content", text}}}}}}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ReplayServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  std::string auth() {
    std::lock_guard lock(mutex_);
    return auth_;
  }

 private:
  httplib::Server server_;
  std::mutex mutex_;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::string auth_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("API keys never reach logs, sessions or reports") {
  const std::string key = "sk-partrans-leak-canary-7f3a";
  ::setenv("PARTRANS_LEAK_KEY", key.c_str(), 1);
  ReplayServer server({"summary", "description", fence(kCrashingScript), fence(kGoodScript)});
  ShWorkspace ws;
  ws.config()["llms"][0]["backend"] = {
      {"kind", "http"}, {"url", server.url()}, {"api_key_env", "PARTRANS_LEAK_KEY"}, {"retry_backoff_s", 0.01}};
  ws.save();
  TempDir out;
  Captured c;
  TranslateArgs args{ws.config_path(), std::nullopt, "app0", "sh-a:sh-b", "m1", out / "t", std::nullopt};
  REQUIRE(cmd_translate(args, c.env) == exit_code::kOk);
  CHECK(server.auth() == "Bearer " + key);

  std::string everything = c.out.str() + c.err.str() + read_text_file(ws.config_path());
  for (const auto& f : fs::recursive_directory_iterator(out.path())) {
    if (f.is_regular_file()) everything += read_text_file(f.path());
  }
  CHECK(everything.find("boom: bad index") != std::string::npos);
  CHECK(everything.find(key) == std::string::npos);
  CHECK(everything.find("leak-canary") == std::string::npos);
}

TEST_CASE("the partrans executable documents exit codes and reports missing rows") {
  TempDir empty;
  ProcessOptions help;
  help.argv = {PARTRANS_BIN, "--help"};
  help.timeout_s = 30;
  const auto h = run_process(help);
  CHECK(h.exit_code == 0);
  CHECK(h.std_out.find("Exit codes:") != std::string::npos);
  for (const auto* sub : {"validate", "translate", "bench", "report"}) CHECK(h.std_out.find(sub) != std::string::npos);

  ProcessOptions report;
  report.argv = {PARTRANS_BIN, "report", "--out", empty.path().string()};
  report.timeout_s = 30;
  CHECK(run_process(report).exit_code == exit_code::kRows);

  ProcessOptions replay;
  replay.argv = {PARTRANS_BIN, "bench", "--replay", (kSourceDir / "fixtures/published").string(), "--out",
                 (empty / "replay").string(), "--sim-metric", "sim_t"};
  replay.timeout_s = 30;
  const auto rr = run_process(replay);
  CHECK(rr.exit_code == 0);
  CHECK(rr.std_out.find("similarity: sim_t >= 0.60") != std::string::npos);
}
