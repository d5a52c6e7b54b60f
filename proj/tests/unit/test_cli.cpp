#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nestbo/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"nestbo"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::ostringstream out, err;
  const int code = nestbo::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"vpc", "--bogus"}).code == 1);
  CHECK(cli({"sweep", "nonsense"}).code == 1);
  const Outcome missing = cli({"run", "--config", "missing.toml"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("not found") != std::string::npos);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("vpc prints the sweep table") {
  const Outcome o = cli({"vpc", "--dim", "2"});
  CHECK(o.code == 0);
  CHECK(o.out.rfind("design,h,pi_g,pi_h,status\nprior,0,2,8,ok\n", 0) == 0);
}

TEST_CASE("run writes traces and reports") {
  const fs::path dir = fs::temp_directory_path() / "nestbo_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg = (dir / "cfg.ini").string();
  std::ofstream(cfg) << "[benchmark]\nfunction = sphere\ndim = 2\n[run]\nmethod = sobol_random\nbudget = 20\n";
  const std::string out = (dir / "out").string();
  const Outcome o = cli({"run", "--config", cfg.c_str(), "--replicates", "2", "--out-dir", out.c_str()});
  CHECK(o.code == 0);
  CHECK(o.out.find("failures=0") != std::string::npos);
  CHECK(fs::exists(fs::path(out) / "replicate_0.csv"));
  CHECK(fs::exists(fs::path(out) / "replicate_1.json"));

  std::ofstream(cfg) << "[run]\nbudget = -3\n";
  CHECK(cli({"run", "--config", cfg.c_str()}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("verify passes on a clean build") {
  const Outcome o = cli({"verify"});
  CHECK(o.code == 0);
  CHECK(o.out.find("FAIL") == std::string::npos);
}
