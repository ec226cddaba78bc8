#pragma once

// Experiment configuration loaded from YAML. Every section is optional;
// unknown keys and malformed values raise ConfigError with the line number.

#include <cstdint>
#include <string>
#include <vector>

#include "trean/analytic.hpp"
#include "trean/baseband.hpp"
#include "trean/mac_sim.hpp"
#include "trean/topology.hpp"

namespace trean::config {

struct BerSweep {
  std::vector<baseband::Modulation> modulations{baseband::Modulation::BPSK};
  std::vector<double> snr_db{0, 2, 4, 6, 8, 10, 12};
  std::size_t max_delay_symbols = 8;
  std::size_t data_symbols = 1000;
  std::size_t pilot_length = 64;
  std::size_t frames = 100;
  bool noise = true;
};

struct Sweep {
  std::vector<int> n{5, 10, 20, 40};
  std::vector<double> r_s{2.2, 2.4, 2.6, 2.8, 3.0};
  std::vector<double> atc_probability{0.0, 0.1, 0.2, 0.3, 0.5, 1.0};
  std::vector<mac::Mode> modes{mac::Mode::Basic, mac::Mode::Extended, mac::Mode::ExtendedPlus};
};

struct Experiment {
  std::uint64_t seed = 1;
  int repetitions = 1;
  int jobs = 0;  // 0: OpenMP default
  std::string out = "results";

  BerSweep ber;
  mac::TopologySpec topology;
  mac::SimConfig sim;
  Sweep sweep;
  std::uint64_t disk_samples = 1'000'000;
  double busy_weight = 0.5;

  /// Small-scale defaults: disk of diameter r_s, single collision domain.
  static Experiment small_scale();
  /// Large-scale defaults: 300 stations on 10 x 10, r_i = 1.78.
  static Experiment large_scale();
  /// Six-station fairness topology with two bidirectional flow pairs.
  static Experiment fairness();
};

/// Loads a file over `base`. Throws ConfigError ("path:line: message").
Experiment load_file(const std::string& path, Experiment base = {});
Experiment load_string(const std::string& text, Experiment base = {},
                       const std::string& origin = "<string>");

void check(const Experiment& e);  // throws ConfigError

}  // namespace trean::config
