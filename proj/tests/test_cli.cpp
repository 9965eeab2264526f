#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "test_support.hpp"

using namespace testsupport;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const std::string dir = temp_dir("cli-io");
  const std::string out_path = dir + "/out.txt";
  const std::string err_path = dir + "/err.txt";
  const std::string command =
      std::string(DR_CLI_BIN) + " " + args + " > " + out_path + " 2> " + err_path;
  const int raw = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = read_file(out_path);
  result.err = read_file(err_path);
  return result;
}

std::string fixture(const std::string& name) {
  return std::string(DR_FIXTURE_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("cli translate: scripted fixture prints the final and exits 0") {
  auto result = run_cli("translate --from Chinese --to English --text 你好 "
                        "--backend scripted --script " +
                        fixture("converge1.rules.json"));
  CHECK(result.exit_code == 0);
  CHECK(result.out == "Hello there\n");
}

TEST_CASE("cli translate: missing --to is a usage error (exit 1)") {
  auto result = run_cli("translate --from Chinese --text 你好 --backend scripted --script " +
                        fixture("converge1.rules.json"));
  CHECK(result.exit_code == 1);
}

TEST_CASE("cli translate: extraction fallback still prints output, exit 3") {
  auto result = run_cli("translate --from Chinese --to English --text 今天天气很好 "
                        "--backend scripted --script " +
                        fixture("cap_fallback.rules.json"));
  CHECK(result.exit_code == 3);
  CHECK(result.out == "revised twice\n");
}

TEST_CASE("cli translate: unreachable backend exits 2") {
  auto result = run_cli("translate --from Chinese --to English --text 你好 "
                        "--backend http --base-url http://127.0.0.1:1/v1 "
                        "--max-attempts 2 --timeout-ms 200");
  CHECK(result.exit_code == 2);
  CHECK(result.err.find("backend failure") != std::string::npos);
}

TEST_CASE("cli translate: transcript lands in --transcript-dir") {
  const std::string dir = temp_dir("cli-transcript");
  auto result = run_cli("translate --from Chinese --to English --text 你好 --id demo "
                        "--backend scripted --script " +
                        fixture("converge1.rules.json") + " --transcript-dir " + dir);
  CHECK(result.exit_code == 0);
  CHECK(std::filesystem::exists(dir + "/demo.jsonl"));
}

TEST_CASE("cli batch + analyze over the fixture corpus") {
  const std::string dir = temp_dir("cli-batch");
  auto batch = run_cli("batch --input " + fixture("corpus3.tsv") +
                       " --from Chinese --to English --backend scripted --script " +
                       fixture("converge1.rules.json") + " --out " + dir +
                       "/dual --concurrency 2");
  // converge1 has per-run queues; every task replays it from scratch.
  CHECK(batch.exit_code == 0);
  CHECK(std::filesystem::exists(dir + "/dual/results.jsonl"));
  CHECK(std::filesystem::exists(dir + "/dual/run_manifest.json"));
  CHECK(std::filesystem::exists(dir + "/dual/transcripts/task-0001.jsonl"));

  auto zero = run_cli("batch --input " + fixture("corpus3.tsv") +
                      " --from Chinese --to English --backend scripted --script " +
                      fixture("converge1.rules.json") + " --out " + dir +
                      "/base --mode zero-shot");
  CHECK(zero.exit_code == 0);

  auto analysis = run_cli("analyze " + dir + "/dual " + dir + "/base --out " + dir +
                          "/report.json");
  CHECK(analysis.exit_code == 0);
  CHECK(analysis.out.find("pearson r:") != std::string::npos);
  CHECK(std::filesystem::exists(dir + "/report.json"));
}

TEST_CASE("cli analyze: nonexistent run dir exits 1") {
  auto result = run_cli("analyze /nonexistent/a /nonexistent/b");
  CHECK(result.exit_code == 1);
}
