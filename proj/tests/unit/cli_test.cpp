#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "relic/corpus.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using relic::testing::TempDir;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RELIC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

/// A tiny generated corpus shared by the tests below.
const fs::path& corpus() {
  static TempDir dir("cli-corpus");
  static const bool made = [] {
    const int rc = run_cli("synth-gen --out " + q(dir.path()) +
                           " --topics 3 --target-size 20 --aux-size 40 --test-size 6");
    EXPECT_EQ(rc, 0);
    return true;
  }();
  (void)made;
  return dir.path();
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("report --bogus-flag"), 2);
  EXPECT_EQ(run_cli("run --target x --test y --out z --oracle --model-url http://h:1"), 2);
}

TEST(Cli, MissingModelIsAConfigError) {
  TempDir out("cli");
  EXPECT_EQ(run_cli("run --target " + q(corpus() / "target.jsonl") + " --aux-dir " +
                    q(corpus() / "aux") + " --test " + q(corpus() / "test.jsonl") + " --out " +
                    q(out.path())),
            2);
}

TEST(Cli, IngestValidatesRecords) {
  TempDir dir("cli");
  EXPECT_EQ(run_cli("ingest --path " + q(corpus() / "target.jsonl") + " --validate-only"), 0);
  EXPECT_EQ(run_cli("ingest --kind test --path " + q(corpus() / "test.jsonl") + " --validate-only"), 0);
  relic::write_file(dir.path() / "bad.jsonl", "{\"id\": 1}\n");
  EXPECT_EQ(run_cli("ingest --path " + q(dir.path() / "bad.jsonl")), 3);
  EXPECT_EQ(run_cli("ingest --path " + q(dir.path() / "missing.jsonl")), 3);
}

TEST(Cli, UnreachableBackendExitsFour) {
  TempDir out("cli");
  EXPECT_EQ(run_cli("evaluate --test " + q(corpus() / "test.jsonl") +
                    " --strategies zero_shot --records " + q(out.path() / "r.jsonl") +
                    " --model-url http://127.0.0.1:9 --timeout 2"),
            4);
}

TEST(Cli, RunFromJsonConfigWithFlagOverride) {
  TempDir out("cli");
  const auto config = out.path() / "config.json";
  relic::write_file(config, R"({"run": {"target": ")" + (corpus() / "target.jsonl").string() +
                                R"(", "aux-dir": ")" + (corpus() / "aux").string() +
                                R"(", "test": ")" + (corpus() / "test.jsonl").string() +
                                R"(", "strategies": "zero_shot,bm25", "oracle": true,
                                "c": 8, "d-in": 1024, "d-out": 4}})");
  const auto run_dir = out.path() / "run";
  EXPECT_EQ(run_cli("--config " + q(config) + " run --out " + q(run_dir) + " --c 2"), 0);
  EXPECT_TRUE(fs::exists(run_dir / "report.txt"));
  const auto echo = relic::read_file(run_dir / "config.json");
  EXPECT_NE(echo.find("\"c\": \"2\""), std::string::npos) << echo;
  EXPECT_EQ(run_cli("report --records " + q(run_dir / "records.jsonl") + " --out " +
                    q(out.path() / "again.txt")),
            0);
  EXPECT_EQ(relic::read_file(out.path() / "again.txt"), relic::read_file(run_dir / "report.txt"));
}
