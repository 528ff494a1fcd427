#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(THERMOGAP_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  std::array<char, 4096> buf;
  while (size_t got = fread(buf.data(), 1, buf.size(), pipe))
    res.output.append(buf.data(), got);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace

TEST_CASE("ki-bounds emits the documented CSV header") {
  auto res = run("ki-bounds --eta 0.5 --delta-grid -0.5:0.5:0.5 --format csv");
  CHECK(res.exit_code == 0);
  CHECK(res.output.rfind("delta,Delta12,Delta3,Delta4,full_min\n", 0) == 0);
  // header plus three grid rows
  int lines = 0;
  for (char c : res.output)
    if (c == '\n') ++lines;
  CHECK(lines == 4);
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run("ki-bounds --no-such-flag 1").exit_code == 1);
  CHECK(run("").exit_code == 1);
  CHECK(run("ki-bounds --eta 0.5 --delta-grid bad:grid").exit_code == 1);
  // mutually exclusive temperature specifications
  CHECK(run("ki-gap --n 4 --eta 0.5 --epsilon 0.5").exit_code == 1);
}

TEST_CASE("config file with flag override") {
  const std::string cfg = "/tmp/thermogap_test_cfg.ini";
  {
    std::ofstream f(cfg);
    f << "# comment line\n";
    f << "eta = 0.5\n";
    f << "delta-grid = 0:0:1\n";
    f << "format = csv\n";
  }
  auto res = run("ki-bounds --config " + cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("delta,Delta12") != std::string::npos);

  // command-line flag wins over the config value
  auto res2 = run("ki-bounds --config " + cfg + " --delta-grid 0:1:1");
  CHECK(res2.exit_code == 0);
  int lines = 0;
  for (char c : res2.output)
    if (c == '\n') ++lines;
  CHECK(lines == 3);

  // unknown keys are rejected
  {
    std::ofstream f(cfg, std::ios::app);
    f << "no_such_key = 1\n";
  }
  CHECK(run("ki-bounds --config " + cfg).exit_code == 1);
  std::remove(cfg.c_str());
}

TEST_CASE("validate single-body suite passes") {
  auto res = run("validate --suite single-body");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("\"suite\": \"single-body\"") != std::string::npos);
}

TEST_CASE("closed gap exits with code 3") {
  auto res = run("ki-gap --n 4 --epsilon 0 --delta 0");
  CHECK(res.exit_code == 3);
}

TEST_CASE("runs are byte-identical under a fixed seed") {
  auto r1 = run("lmg-optimize --s 1 --beta-tilde 5 --restarts 2 --budget 80 "
                "--seed 9 --threads 1");
  auto r2 = run("lmg-optimize --s 1 --beta-tilde 5 --restarts 2 --budget 80 "
                "--seed 9 --threads 1");
  CHECK(r1.exit_code == 0);
  CHECK(r1.output == r2.output);
  CHECK(r1.output.find("optimized_gap") != std::string::npos);
}

TEST_CASE("json output goes to a file with --out") {
  const std::string out = "/tmp/thermogap_test_out.json";
  auto res = run("lmg-gap --s 1 --beta-tilde 5 --out " + out);
  CHECK(res.exit_code == 0);
  std::ifstream f(out);
  REQUIRE(f.good());
  std::string content((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
  CHECK(content.find("\"command\": \"lmg-gap\"") != std::string::npos);
  CHECK(content.find("\"gap\"") != std::string::npos);
  std::remove(out.c_str());
}
