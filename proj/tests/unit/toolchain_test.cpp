// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <chrono>
#include <thread>

#include "partrans/errors.hpp"
#include "partrans/process.hpp"
#include "partrans/toolchain.hpp"
#include "support.hpp"

using namespace partrans;
using namespace partrans::testing;

TEST_CASE("split and join commands") {
  CHECK(split_command(R"(sh -c 'a "b" c' x "y z")") ==
        std::vector<std::string>{"sh", "-c", R"(a "b" c)", "x", "y z"});
  CHECK(join_command({"cc", "a b.c", "-o", "x"}) == "cc \"a b.c\" -o x");
  CHECK(split_command("   ").empty());
}

TEST_CASE("render_command expands placeholders and args") {
  const std::vector<std::string> args = {"200000", "20"};
  CHECK(render_command("nvcc -O3 {src} -o {out}", {{"src", "a.cu"}, {"out", "a"}}) ==
        std::vector<std::string>{"nvcc", "-O3", "a.cu", "-o", "a"});
  CHECK(render_command("{bin} {args}", {{"bin", "/w/a"}}, args) ==
        std::vector<std::string>{"/w/a", "200000", "20"});
  CHECK(render_command("{bin} --n={args}", {{"bin", "b"}}, args) == std::vector<std::string>{"b", "--n={args}"});
  CHECK(render_command("{bin} {args}", {{"bin", "b"}}).size() == 1);
}

TEST_CASE("process captures streams, exit codes and timeouts") {
  ProcessOptions o;
  o.argv = {"sh", "-c", "echo out; echo err >&2; exit 4"};
  auto r = run_process(o);
  CHECK(r.launched);
  CHECK(r.exit_code == 4);
  CHECK(r.std_out == "out\n");
  CHECK(r.std_err == "err\n");

  o.argv = {"sh", "-c", "echo $PARTRANS_X"};
  o.extra_env = {{"PARTRANS_X", "42"}};
  CHECK(run_process(o).std_out == "42\n");

  o.argv = {"sh", "-c", "sleep 5 & sleep 5"};
  o.timeout_s = 0.3;
  const auto start = std::chrono::steady_clock::now();
  r = run_process(o);
  CHECK(r.timed_out);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));

  o.argv = {"partrans-no-such-binary-xyz"};
  o.timeout_s = 0;
  CHECK_FALSE(run_process(o).launched);
}

TEST_CASE("compile and execute through a language spec") {
  TempDir dir;
  const auto spec = sh_language("sh-a");
  const auto src = dir / "app__attempt1.sh";
  write_text_file(src, kGoodScript);
  CHECK(binary_path_for(src, dir.path()) == dir / "app__attempt1");
  CHECK(compile_command_text(spec, src, dir.path()).find("app__attempt1.sh app__attempt1") != std::string::npos);

  const auto c = compile(src, spec, dir.path());
  REQUIRE(c.exit_ok);
  CHECK(c.kind == ToolKind::Compile);
  const std::vector<std::string> args = {"5"};
  const auto e = execute(spec, dir / "app__attempt1", args);
  CHECK(e.exit_ok);
  CHECK(e.std_out == "sum 10\nElapsed time: 0.001 s\n");

  write_text_file(src, kBrokenScript);
  const auto bad = compile(src, spec, dir.path());
  CHECK_FALSE(bad.exit_ok);
  CHECK_FALSE(bad.std_err.empty());

  write_text_file(dir / "crash.sh", kCrashingScript);
  REQUIRE(compile(dir / "crash.sh", spec, dir.path()).exit_ok);
  const auto crash = execute(spec, dir / "crash", args);
  CHECK_FALSE(crash.exit_ok);
  CHECK(crash.exit_code == 3);
  CHECK(crash.std_err == "boom: bad index\n");
}

TEST_CASE("missing compiler is a toolchain error, not a compile error") {
  TempDir dir;
  auto spec = sh_language("sh-a");
  spec.compile_cmd = "partrans-no-such-compiler {src} -o {out}";
  write_text_file(dir / "a.sh", "echo hi\n");
  CHECK_THROWS_AS(compile(dir / "a.sh", spec, dir.path()), ToolchainMissing);
}

TEST_CASE("measure_runtime averages and stops on the first failure") {
  TempDir dir;
  const auto spec = sh_language("sh-a");
  write_text_file(dir / "ok.sh", kGoodScript);
  REQUIRE(compile(dir / "ok.sh", spec, dir.path()).exit_ok);
  RuntimeOptions ro;
  ro.spec = &spec;
  ro.n_runs = 2;
  const std::vector<std::string> args = {"3"};
  const double t = measure_runtime(dir / "ok", args, ro);
  CHECK(t > 0.0);
  CHECK(t < 5.0);

  write_text_file(dir / "bad.sh", kCrashingScript);
  REQUIRE(compile(dir / "bad.sh", spec, dir.path()).exit_ok);
  CHECK_THROWS_AS(measure_runtime(dir / "bad", args, ro), RunFailed);
  ro.n_runs = 0;
  CHECK_THROWS_AS(measure_runtime(dir / "ok", args, ro), PreconditionError);
}

TEST_CASE("resource pool bounds concurrent holders") {
  ResourcePool pool;
  pool.set_capacity("gpu", 2);
  std::atomic<int> active{0}, peak{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&] {
      auto lease = pool.acquire("gpu");
      const int now = ++active;
      int prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      --active;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(peak.load() <= 2);
  CHECK(peak.load() >= 1);
}

TEST_CASE("baseline names the failing stage") {
  TempDir dir;
  auto task = sh_task(scripted_profile());
  const auto ok = validate_baseline(task, dir / "ok", {});
  REQUIRE(ok.target_stdout);
  CHECK(*ok.target_stdout == "sum 10\nElapsed time: 0.001 s\n");
  CHECK(ok.target_runtime_s);
  CHECK(ok.failed_stage.empty());

  auto expect_stage = [&](TranslationTask t, const std::string& stage) {
    try {
      validate_baseline(t, dir / stage, {});
      FAIL("expected BaselineFailed at " << stage);
    } catch (const BaselineFailed& e) {
      CHECK(e.stage() == stage);
      CHECK(e.record().failed_stage == stage);
    }
  };
  auto t = task;
  t.source_code = kBrokenScript;
  expect_stage(t, "source compile");
  t = task;
  t.source_code = kCrashingScript;
  expect_stage(t, "source execute");
  t = task;
  t.reference_target_code = kBrokenScript;
  expect_stage(t, "target compile");
  t = task;
  t.reference_target_code = kCrashingScript;
  expect_stage(t, "target execute");

  t = task;
  t.reference_target_code.reset();
  const auto no_ref = validate_baseline(t, dir / "noref", {});
  CHECK_FALSE(no_ref.target_stdout);
  CHECK_FALSE(no_ref.target_runtime_s);
}
