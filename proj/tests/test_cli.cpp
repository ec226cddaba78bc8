#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "trean/config.hpp"
#include "trean/errors.hpp"
#include "trean/experiments.hpp"

using namespace trean;

namespace {

std::string error_of(const std::string& yaml) {
  try {
    config::load_string(yaml, {}, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string env(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

struct Shell {
  int status = -1;
  std::string out;
};

Shell sh(const std::string& cmd) {
  Shell r;
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config errors carry the line") {
  CHECK(error_of("seed: 1\nsim:\n  modee: basic\n").find("cfg:3:") == 0);
  CHECK(error_of("seed: 1\nbogus: 2\n").find("cfg:2:") == 0);
  CHECK(error_of("sim:\n  mode: turbo\n").find("cfg:2:") == 0);
  CHECK(error_of("sim:\n  duration_s: soon\n").find("cfg:2:") == 0);
  CHECK(error_of("topology:\n  placement: hexagon\n").find("placement") != std::string::npos);
  CHECK(error_of("sim:\n  traffic:\n    flows: [[0, 1, 2]]\n").find("cfg:3:") == 0);
  CHECK(error_of("preset: tiny\n").find("preset") != std::string::npos);
  CHECK_FALSE(error_of("sweep:\n  atc_probability: [0.5, 1.5]\n").empty());
  CHECK(error_of("seed: 4\n").empty());
}

TEST_CASE("presets and overrides") {
  const auto e = config::load_string("sim:\n  duration_s: 0.25\npreset: large_scale\n");
  CHECK(e.sim.duration_s == 0.25);  // explicit keys win over the preset wherever they appear
  CHECK(e.topology.n == 300);
  CHECK(e.topology.ranges.r_i == doctest::Approx(1.78));
  const auto f = config::load_string("preset: fairness\n");
  CHECK(f.topology.positions.size() == 6);
  CHECK(f.sim.traffic.flows.size() == 4);
  const auto g = config::load_string(
      "sim:\n  mode: extended_plus\n  n_ea: 1\n  traffic:\n    backward_flows: [[2, 0]]\ntiming:\n  w0: 32\n");
  CHECK(g.sim.mode == mac::Mode::ExtendedPlus);
  CHECK(g.sim.n_ea == 1);
  CHECK(g.sim.timing.w0 == 32);
  REQUIRE(g.sim.traffic.backward_flows.size() == 1);
  CHECK(g.sim.traffic.backward_flows[0] == std::pair{2, 0});
}

TEST_CASE("table output") {
  exp::Table t;
  t.schema = "demo/1";
  t.columns = {"mode", "n", "phi"};
  t.rows = {{std::string("basic"), std::int64_t{5}, 1.0},
            {std::string("basic"), std::int64_t{5}, 3.0},
            {std::string("csma"), std::int64_t{5}, 2.0}};
  const auto csv = t.csv();
  CHECK(csv.rfind("# demo/1\nmode,n,phi\n", 0) == 0);
  CHECK(csv.find("csma,5,2\n") != std::string::npos);
  const auto s = t.stats({"mode"}, "phi");
  CHECK(s.at("basic").mean == 2.0);
  CHECK(s.at("basic").stddev == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.at("csma").count == 1);
  CHECK(s.at("csma").stddev == 0.0);
  const auto j = nlohmann::json::parse(t.summary_json({"mode"}));
  CHECK(j.dump().find("basic") != std::string::npos);
  CHECK_THROWS(t.column("missing"));
}

TEST_CASE("command line") {
  const auto cli = env("TREAN_CLI"), configs = env("TREAN_CONFIGS");
  if (cli.empty()) return;
  const auto out = std::filesystem::temp_directory_path() / "trean_cli_test";
  std::filesystem::remove_all(out);

  CHECK(sh(cli).status != 0);
  CHECK(sh(cli + " --help").status == 0);
  CHECK(sh(cli + " sim-small --reps 0").status != 0);
  CHECK(sh(cli + " sim-small --config /nonexistent.yaml").status != 0);

  const auto bad = out.string() + "_bad.yaml";
  std::ofstream(bad) << "sim:\n  mode: turbo\n";
  CHECK(sh(cli + " sim-small --config " + bad).status == 2);

  const auto r = sh(cli + " sim-small --config " + configs + "/chain.yaml --out " + out.string());
  CHECK(r.status == 0);
  CHECK(r.out.rfind("# sim-small/", 0) == 0);
  CHECK(std::filesystem::exists(out / "sim-small.csv"));
  const auto j = nlohmann::json::parse(slurp(out / "sim-small.json"));
  CHECK_FALSE(j.empty());

  const auto again = sh(cli + " sim-small --config " + configs + "/chain.yaml --jobs 1 --out " + out.string());
  CHECK(again.out == r.out);  // job count does not change results

  const auto a = sh(cli + " analytic-small --config " + configs + "/small.yaml --out " + out.string());
  CHECK(a.status == 0);
  CHECK(a.out.find("n,") != std::string::npos);
  std::filesystem::remove_all(out);
  std::filesystem::remove(bad);
}
