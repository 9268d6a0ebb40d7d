#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bred/cli.hpp"
#include "bred/errors.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bred;
namespace fs = std::filesystem;

namespace {

int call(std::vector<std::string> args) {
  args.insert(args.begin(), "bred");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("bred_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("experiment listing") {
  std::string s = list_experiments(false);
  CHECK(std::count(s.begin(), s.end(), '\n') == 7);
  for (const char* n : {"geometry-audit", "sde-convergence", "filtering-audit", "girsanov-audit", "reduction-identity",
                        "channel-consistency", "pde-cross-check"})
    CHECK(s.find(n) != std::string::npos);
  auto j = nlohmann::json::parse(list_experiments(true));
  CHECK(j.size() == 7);
  CHECK(call({}) == 0);
  CHECK(call({"list", "--json"}) == 0);
}

TEST_CASE("argument and config errors") {
  fs::path d = scratch("errors");
  CHECK(call({"run", "--no-such-flag"}) == 2);
  CHECK(call({"run", "--experiment", "nope", "--out", d.string()}) == 2);
  CHECK(call({"run", "--model", "Q", "--out", d.string()}) == 2);
  CHECK(call({"run", "--dt", "0.003", "--t", "0.01", "--experiment", "girsanov-audit", "--out", d.string()}) == 2);

  fs::path bad = d / "bad.ini";
  std::ofstream(bad) << "[run\nexperiment = geometry-audit\n";
  CHECK(call({"run", "--config", bad.string(), "--out", d.string()}) == 2);
  fs::path unknown = d / "unknown.ini";
  std::ofstream(unknown) << "[run]\nexperimnt = geometry-audit\n";
  CHECK(call({"run", "--config", unknown.string(), "--out", d.string()}) == 2);
  int files = 0;
  for (const auto& e : fs::directory_iterator(d)) files += e.path().extension() == ".csv";
  CHECK(files == 0);
}

TEST_CASE("config file, environment and flag precedence") {
  fs::path d = scratch("precedence");
  fs::path ini = d / "run.ini";
  std::ofstream(ini) << "[run]\nexperiment = girsanov-audit\nmodel = C\npaths = 123\nseed = 5\n\n[model]\nmu = 0.9\n\n"
                        "[tolerance]\nsigma = 4\n\n[output]\ndir = " << d.string() << "\n";
  RunConfig c = load_config(ini.string());
  CHECK(c.experiment == "girsanov-audit");
  CHECK(c.model == 'C');
  CHECK(c.n_paths == 123);
  CHECK(c.seed == 5);
  CHECK(c.params.mu == 0.9);
  CHECK(c.tol_sigma == 4.0);
  CHECK(c.out_dir == d.string());

  setenv("BRED_PATHS", "77", 1);
  setenv("BRED_MODEL", "A", 1);
  apply_env(c);
  unsetenv("BRED_PATHS");
  unsetenv("BRED_MODEL");
  CHECK(c.n_paths == 77);
  CHECK(c.model == 'A');
  CHECK(c.seed == 5);

  setenv("BRED_EXPERIMENT", "pde-cross-check", 1);
  int rc = call({"run", "--config", ini.string(), "--experiment", "geometry-audit", "--model", "B"});
  unsetenv("BRED_EXPERIMENT");
  CHECK(rc == 0);
  CHECK(fs::exists(d / "geometry-audit_B.csv"));
}

TEST_CASE("geometry audit output files and determinism") {
  fs::path d = scratch("outputs");
  REQUIRE(call({"run", "--experiment", "geometry-audit", "--model", "A", "--out", d.string(), "--json"}) == 0);
  std::string csv = slurp(d / "geometry-audit_A.csv");
  CHECK(csv.rfind(csv_header() + "\n", 0) == 0);
  CHECK(csv_header() == "experiment,model,channel,quantity,value,stderr,target,tolerance,pass,n_paths,dt,seed");
  CHECK(csv.find(",false,") == std::string::npos);
  auto j = nlohmann::json::parse(slurp(d / "geometry-audit_A.json"));
  CHECK(j["schema_version"] == kSchemaVersion);
  CHECK(j["all_pass"] == true);
  CHECK(j["n_rows"] == std::count(csv.begin(), csv.end(), '\n') - 1);

  fs::path d2 = scratch("outputs2");
  REQUIRE(call({"run", "--experiment", "geometry-audit", "--model", "A", "--out", d2.string()}) == 0);
  CHECK(slurp(d2 / "geometry-audit_A.csv") == csv);
  CHECK_FALSE(fs::exists(d2 / "geometry-audit_A.json"));
}

TEST_CASE("Monte Carlo output is reproducible across worker counts") {
  fs::path d1 = scratch("mc1"), d2 = scratch("mc2");
  std::vector<std::string> base{"run", "--experiment", "girsanov-audit", "--model", "C", "--paths", "400", "--t", "0.1"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", d1.string(), "--workers", "1"});
  b.insert(b.end(), {"--out", d2.string(), "--workers", "2"});
  int ra = call(a), rb = call(b);
  CHECK(ra == rb);
  CHECK(ra != 2);
  CHECK(slurp(d1 / "girsanov-audit_C.csv") == slurp(d2 / "girsanov-audit_C.csv"));
}

TEST_CASE("csv formatting") {
  ResultRow r;
  r.experiment = "x";
  r.model = "A";
  r.quantity = "q";
  r.value = 0.1;
  r.n_paths = 3;
  r.dt = 1e-3;
  r.seed = 9;
  CHECK(csv_line(r) == "x,A,,q,0.10000000000000001,0,,0,true,3,0.001,9");
  r.has_target = true;
  r.target = 1.0;
  r.pass = false;
  CHECK(csv_line(r) == "x,A,,q,0.10000000000000001,0,1,0,false,3,0.001,9");
}
