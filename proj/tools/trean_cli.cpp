// trean: experiment runner. Each subcommand writes <out>/<name>.csv (one
// row per sweep point and repetition) and <out>/<name>.json (mean and
// standard deviation per point).

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "trean/errors.hpp"
#include "trean/experiments.hpp"

namespace {

using trean::config::Experiment;
using trean::exp::Table;

struct Options {
  std::string config;
  std::string large_config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<int> jobs;
};

Experiment load(const std::string& path, Experiment base, const Options& o) {
  auto e = path.empty() ? base : trean::config::load_file(path, base);
  if (o.out) e.out = *o.out;
  if (o.seed) e.seed = *o.seed;
  if (o.reps) e.repetitions = *o.reps;
  if (o.jobs) e.jobs = *o.jobs;
  trean::config::check(e);
  return e;
}

void write(const Experiment& e, const std::string& name, const Table& t, const std::vector<std::string>& keys) {
  std::filesystem::create_directories(e.out);
  const auto base = std::filesystem::path(e.out) / name;
  std::ofstream(base.string() + ".csv") << t.csv();
  std::ofstream(base.string() + ".json") << t.summary_json(keys);
  std::cout << t.csv();
  std::cerr << "wrote " << base.string() << ".csv and .json\n";
}

Experiment modes_base() {
  auto e = Experiment::small_scale();
  e.topology.n = 40;
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-way relay MAC/PHY experiments"};
  app.require_subcommand(1);
  Options o;

  struct Recipe {
    std::string name;
    std::string help;
    std::function<Experiment()> base;
    std::function<Table(const Experiment&)> run;
    std::vector<std::string> keys;
  };
  const std::vector<Recipe> recipes = {
      {"ber-sweep", "BER of the superposed-packet decoder against the single-packet baseline", [] { return Experiment{}; },
       trean::exp::ber_sweep, {"modulation", "snr_db"}},
      {"sim-small", "small-scale simulation, configured mode and CSMA/CA", Experiment::small_scale,
       trean::exp::sim_small, {"mode", "n"}},
      {"sim-large", "large-scale simulation over the sensing-range sweep", Experiment::large_scale,
       trean::exp::sim_large, {"r_s"}},
      {"analytic-small", "small-scale saturation throughput model", Experiment::small_scale,
       trean::exp::analytic_small, {"protocol", "n"}},
      {"analytic-large", "large-scale saturation throughput model", Experiment::large_scale,
       trean::exp::analytic_large, {"r_s"}},
      {"modes-compare", "basic/extended/extended-plus against CSMA/CA over the ATC probability", modes_base,
       trean::exp::modes_compare, {"mode", "atc_probability"}},
      {"cpp-fairness", "group throughput on the six-station topology with CPP on and off", Experiment::fairness,
       trean::exp::cpp_fairness, {"cpp_enabled"}},
      {"ack-loss", "immediate ACK loss and final unacknowledged rate over the sensing range", Experiment::large_scale,
       trean::exp::ack_loss, {"r_s"}},
  };

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "YAML config file")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--reps", o.reps, "repetitions per sweep point")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", o.jobs, "parallel runs, 0 for all cores")->check(CLI::NonNegativeNumber);
  };

  int status = 0;
  for (const auto& r : recipes) {
    auto* sub = app.add_subcommand(r.name, r.help);
    add_common(sub);
    sub->callback([&, r] {
      const auto e = load(o.config, r.base(), o);
      write(e, r.name, r.run(e), r.keys);
    });
  }

  auto* val = app.add_subcommand("validate", "model against simulator with pass/fail per point");
  add_common(val);
  val->add_option("--large-config", o.large_config, "YAML config for the large-scale half")->check(CLI::ExistingFile);
  val->callback([&] {
    const auto small = load(o.config, Experiment::small_scale(), o);
    const auto large = load(o.large_config, Experiment::large_scale(), o);
    const auto rows = trean::exp::validate(small, large);
    write(small, "validate", trean::exp::validation_table(rows), {"scenario", "point"});
    for (const auto& row : rows) status |= row.pass ? 0 : 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const trean::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return status;
}
