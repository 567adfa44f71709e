#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "krongp/cli.hpp"
#include "krongp/evaluate.hpp"

namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  std::vector<const char*> argv{"krongp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return krongp::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("krongp_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  TempDir tmp("usage");
  CHECK(run({"simulate", "--noise-sd", "-1", "--out", tmp.sub("a")}) == 1);
  CHECK(run({"fit", "--data", "x.csv", "--schema", "x.json", "--model", "bogus"}) == 1);
  CHECK(run({"cv", "--data", "x.csv", "--schema", "x.json", "--k", "1"}) == 1);
  CHECK(run({"report", "--bundle", tmp.sub("nonexistent")}) == 1);
  CHECK(run({}) == 1);  // missing subcommand
}

TEST_CASE("simulate writes the dataset and is seed-deterministic") {
  TempDir tmp("sim");
  CHECK(run({"simulate", "--seed", "7", "--out", tmp.sub("a")}) == 0);
  CHECK(run({"simulate", "--seed", "7", "--out", tmp.sub("b")}) == 0);
  CHECK(fs::exists(tmp.sub("a") + "/data.csv"));
  CHECK(fs::exists(tmp.sub("a") + "/schema.json"));
  CHECK(fs::exists(tmp.sub("a") + "/manifest.json"));
  CHECK(slurp(tmp.sub("a") + "/data.csv") == slurp(tmp.sub("b") + "/data.csv"));
  CHECK(slurp(tmp.sub("a") + "/schema.json") == slurp(tmp.sub("b") + "/schema.json"));

  // default grid => 420 cells + header
  std::istringstream rows(slurp(tmp.sub("a") + "/data.csv"));
  std::string line;
  int count = 0;
  while (std::getline(rows, line)) ++count;
  CHECK(count == 421);
}

TEST_CASE("fit smoke test on a tiny simulated dataset") {
  TempDir tmp("fit");
  REQUIRE(run({"simulate", "--n1", "3", "--n2", "2", "--n3", "2", "--seed", "3", "--out",
               tmp.sub("data")}) == 0);
  const int code = run({"fit", "--data", tmp.sub("data") + "/data.csv", "--schema",
                        tmp.sub("data") + "/schema.json", "--model", "gp.f", "--chains", "4",
                        "--warmup", "50", "--samples", "50", "--seed", "1", "--out",
                        tmp.sub("out")});
  // 0 = clean, 2 = diagnostics warning; both mean the fit completed
  CHECK((code == 0 || code == 2));
  for (int c = 1; c <= 4; ++c)
    CHECK(fs::exists(tmp.sub("out") + "/chain_" + std::to_string(c) + ".csv"));
  const std::string summary = slurp(tmp.sub("out") + "/summary.csv");
  CHECK(summary.rfind("parameter,mean,sd,l-95% CI,u-95% CI,n.eff,Rhat\n", 0) == 0);
  CHECK(fs::exists(tmp.sub("out") + "/f_mean.csv"));
  CHECK(fs::exists(tmp.sub("out") + "/manifest.json"));
}

TEST_CASE("report renders a dash diagonal from a bundle") {
  TempDir tmp("report");
  fs::create_directories(tmp.sub("bundle"));
  {
    std::ofstream out(tmp.sub("bundle") + "/comparison_output1.csv");
    out << "method,gp.f,lin.f\n"
        << "gp.f,-,-0.9\n"
        << "lin.f,0.004,-\n";
  }
  const std::string text = krongp::render_report(tmp.sub("bundle"));
  CHECK(text.find("comparison_output1") != std::string::npos);
  CHECK(text.find("-0.9") != std::string::npos);
  CHECK(text.find("0.004") != std::string::npos);
  CHECK(run({"report", "--bundle", tmp.sub("bundle")}) == 0);
}
