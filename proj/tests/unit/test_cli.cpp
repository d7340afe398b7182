#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"
#include "xicm/cli.hpp"
#include "xicm/errors.hpp"

using namespace xicm;
using xicm::testing::read_file;
using xicm::testing::TempDir;
using xicm::testing::write_file;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json last_error(const Run& r) {
  const auto end = r.err.find_last_not_of('\n');
  const auto start = r.err.rfind('\n', end);
  return nlohmann::json::parse(r.err.substr(start == std::string::npos ? 0 : start + 1, end - start));
}

// Small dataset, model and features under `dir`.
void prepare(const std::filesystem::path& dir) {
  const auto ds = (dir / "ds").string();
  REQUIRE(run({"-q", "simgen", "--tasks", "seen", "--episodes", "3", "--out", ds}).code == 0);
  REQUIRE(run({"-q", "train-dynamics", "--dataset", ds, "--epochs", "20"}).code == 0);
  REQUIRE(run({"-q", "embed", "--dataset", ds}).code == 0);
}

std::vector<std::string> bench_args(const std::filesystem::path& ds, const std::filesystem::path& out) {
  return {"-q",     "bench",        "--dataset", ds.string(), "--tasks",  "push_button,push_lever,turn_tap",
          "--runs", "2",            "--rollouts", "2",        "--seeds",  "5,6",
          "--k",    "4",            "--workers", "3",         "--out",    out.string()};
}

}  // namespace

TEST_CASE("help for the app and every subcommand") {
  CHECK(run({"--help"}).code == 0);
  for (const char* sub : {"simgen", "ingest", "extract-keyframes", "embed", "train-dynamics", "select", "prompt",
                          "predict", "rollout", "bench", "ablate", "sweep-k", "report"}) {
    CAPTURE(sub);
    const auto r = run({sub, "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("usage errors exit with 2 and one JSON error line") {
  auto r = run({});
  CHECK(r.code == 2);
  CHECK(last_error(r)["exit_code"] == 2);
  r = run({"bench", "--no-such-flag"});
  CHECK(r.code == 2);
  CHECK(last_error(r)["error"] == "UsageError");
  CHECK(r.err.find("--rollouts") != std::string::npos);
  r = run({"frobnicate"});
  CHECK(r.code == 2);
  r = run({"report", "--format", "xml"});
  CHECK(r.code == 2);
}

TEST_CASE("bad values are configuration errors") {
  TempDir tmp;
  auto r = run({"simgen", "--episodes", "many", "--out", (tmp / "x").string()});
  CHECK(r.code == 2);
  CHECK(last_error(r)["error"] == "ConfigError");
  r = run({"simgen", "--tasks", "no_such_task", "--out", (tmp / "x").string()});
  CHECK(r.code == 2);
  r = run({"--config", (tmp / "missing.conf").string(), "--print-config"});
  CHECK(r.code != 0);
}

TEST_CASE("domain errors exit with 1") {
  TempDir tmp;
  const auto r = run({"ingest", "--dataset", (tmp / "nothing").string()});
  CHECK(r.code == 1);
  const auto e = last_error(r);
  CHECK(e["error"] == "IoError");
  CHECK(e["exit_code"] == 1);
}

TEST_CASE("settings come from defaults, file, environment and flags in that order") {
  TempDir tmp;
  write_file(tmp / "x.conf", "# comment\nk = 6\nbench.rollouts = 5\nseed = 3\n");
  ::setenv("XICM_BENCH_ROLLOUTS", "7", 1);
  ::setenv("XICM_LLM_API_KEY", "topsecret", 1);
  const auto r = run({"--config", (tmp / "x.conf").string(), "--seed", "9", "--print-config"});
  ::unsetenv("XICM_BENCH_ROLLOUTS");
  ::unsetenv("XICM_LLM_API_KEY");
  REQUIRE(r.code == 0);
  auto line_of = [&](const std::string& key) {
    std::istringstream in(r.out);
    std::string line;
    while (std::getline(in, line))
      if (line.rfind(key + " = ", 0) == 0) return line;
    return std::string();
  };
  CHECK(line_of("k") == "k = 6  # file");
  CHECK(line_of("bench.rollouts") == "bench.rollouts = 7  # env");
  CHECK(line_of("seed") == "seed = 9  # flag");
  CHECK(line_of("bench.runs") == "bench.runs = 3  # default");
  CHECK(r.out.find("topsecret") == std::string::npos);
  CHECK(line_of("gateway.api_key").find("# env") != std::string::npos);

  ::setenv("XICM_BENCH_RUNS", "7", 1);
  const auto mismatch = run({"--print-config"});
  ::unsetenv("XICM_BENCH_RUNS");
  CHECK(mismatch.code == 2);
  CHECK(last_error(mismatch)["error"] == "ConfigError");

  CliConfig cfg;
  CHECK(CliConfig::env_name("bench.runs") == "XICM_BENCH_RUNS");
  CHECK_THROWS_AS(cfg.apply_text("no_such_key = 1\n", "inline"), ConfigError);
  CHECK_THROWS_AS(cfg.apply_text("k\n", "inline"), ConfigError);
}

TEST_CASE("end to end through the command line") {
  TempDir tmp;
  prepare(tmp.path());
  const auto ds = tmp / "ds";
  CHECK(std::filesystem::exists(ds / "manifest.json"));
  CHECK(std::filesystem::exists(ds / "dynamics.json"));
  CHECK(std::filesystem::exists(ds / "features.bin"));

  auto r = run({"ingest", "--dataset", ds.string()});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["demonstrations"] == 24);

  r = run({"extract-keyframes", "--dataset", ds.string()});
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 24);

  r = run({"select", "--dataset", ds.string(), "--task", "push_lever", "--k", "3"});
  REQUIRE(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);

  r = run({"prompt", "--dataset", ds.string(), "--task", "push_lever", "--k", "2", "--dry-run"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Task: push the lever") != std::string::npos);
  CHECK(r.out.find("Actions:\n") != std::string::npos);

  r = run({"rollout", "--dataset", ds.string(), "--task", "stack_block", "--backend", "scripted", "--k", "2"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["success"] == true);

  r = run({"select", "--dataset", ds.string(), "--task", "push_lever", "--k", "999"});
  CHECK(r.code != 0);

  REQUIRE(run(bench_args(ds, tmp / "r1")).code == 0);
  REQUIRE(run(bench_args(ds, tmp / "r2")).code == 0);
  const auto a = read_file(tmp / "r1" / "report.json");
  CHECK(a == read_file(tmp / "r2" / "report.json"));
  CHECK(read_file(tmp / "r1" / "report.csv") == read_file(tmp / "r2" / "report.csv"));

  r = run({"report", "--in", (tmp / "r1" / "report.json").string(), "--format", "json"});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out) == nlohmann::json::parse(a));
  r = run({"report", "--in", (tmp / "r1" / "report.json").string(), "--format", "csv"});
  CHECK(r.out == read_file(tmp / "r1" / "report.csv"));

  auto sweep = bench_args(ds, tmp / "sw");
  sweep[1] = "sweep-k";
  sweep.insert(sweep.end(), {"--k-values", "1,2"});
  REQUIRE(run(sweep).code == 0);
  CHECK(read_file(tmp / "sw" / "sweep.csv").rfind("k,mean,std\n", 0) == 0);
}
