#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(ICFRM_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (const std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("cli: smoke scenario and thread-count determinism") {
  const fs::path a = fs::temp_directory_path() / "icfrm_cli_a";
  const fs::path b = fs::temp_directory_path() / "icfrm_cli_b";
  const std::string scenario = std::string(ICFRM_SCENARIO_DIR) + "/smoke.json";
  const Result ra = run("--threads 1 simulate " + scenario + " --out " + a.string());
  const Result rb = run("--threads 3 simulate " + scenario + " --out " + b.string());
  CHECK(ra.status == 0);
  CHECK(rb.status == 0);
  const std::string csv = slurp(a / "smoke.csv");
  CHECK(csv == slurp(b / "smoke.csv"));
  CHECK(csv.find("G^nb") != std::string::npos);
  // n_sims = 1: every implemented rate is 0 or 100.
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    for (int i = 0; std::getline(cells, cell, ','); ++i) {
      if (i >= 9 && cell != "n/a") CHECK((cell == "0.0" || cell == "100.0"));
    }
  }
}

TEST_CASE("cli: test subcommand on the surrogate data") {
  const Result r = run("test --surrogate --factor D --stat fmax --boot pb --M 200 --seed 1");
  CHECK(r.status == 0);
  CHECK(r.out.find("D,fmax,pb,") != std::string::npos);
  const Result same = run("test --surrogate --factor D --stat fmax --boot pb --M 200 --seed 1");
  CHECK(same.out == r.out);

  // Nonparametric Fmax p-values are identical with and without scaling.
  const auto pvalue = [](const std::string& out) { return out.substr(out.rfind(',', out.rfind(',', out.rfind(',') - 1) - 1)); };
  const Result u = run("test --surrogate --factor A --stat fmax --boot nb --M 200 --seed 4");
  const Result s = run("test --surrogate --factor A --stat fmax --boot nb --M 200 --seed 4 --scaled");
  CHECK(pvalue(u.out) == pvalue(s.out));
}

TEST_CASE("cli: exit codes per error class") {
  CHECK(run("").status == 2);
  CHECK(run("test --factor A --stat zz").status == 2);
  CHECK(run("test --data /nonexistent/file.csv --factor A").status == 4);
  CHECK(run("test --surrogate --factor Q").status == 3);
  CHECK(run("test --surrogate").status == 3);
  CHECK(run("reproduce-table S9").status == 3);

  const fs::path bad = fs::temp_directory_path() / "icfrm_bad_scenario.json";
  std::ofstream(bad) << R"({"case": "case1", "cells": []})";
  CHECK(run("simulate " + bad.string()).status == 3);

  const fs::path ragged = fs::temp_directory_path() / "icfrm_ragged.csv";
  std::ofstream(ragged) << "run,1,2\nr1,1\n";
  CHECK(run("test --data " + ragged.string() + " --factor A").status == 5);
}

TEST_CASE("cli: fit writes coefficients") {
  const fs::path out = fs::temp_directory_path() / "icfrm_fit";
  const Result r = run("fit --surrogate --out " + out.string());
  CHECK(r.status == 0);
  CHECK(r.out.find("rank = 8") != std::string::npos);
  CHECK(fs::exists(out / "beta_hat.csv"));
}
