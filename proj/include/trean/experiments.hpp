#pragma once

// Experiment recipes behind the CLI subcommands. Each returns a table with
// one row per (sweep point, repetition); runs execute concurrently and rows
// come back in sweep order, so output is independent of the job count.

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "trean/config.hpp"

namespace trean::exp {

using Cell = std::variant<std::int64_t, double, std::string>;

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;
};

Stat describe(const std::vector<double>& values);

struct Table {
  std::string schema;  // name and version, e.g. "sim-small/1"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const;  // throws std::out_of_range
  double number(std::size_t row, const std::string& col) const;
  std::string text(std::size_t row, const std::string& col) const;

  std::string csv() const;
  /// Statistics of `metric` per distinct combination of the `keys` columns,
  /// keyed by the joined key values ("basic|20").
  std::map<std::string, Stat> stats(const std::vector<std::string>& keys, const std::string& metric) const;
  /// JSON document with mean and stddev of every numeric non-key column.
  std::string summary_json(const std::vector<std::string>& keys) const;
};

Table ber_sweep(const config::Experiment& e);
/// Small-scale throughput for e.sim.mode and the CSMA/CA baseline.
Table sim_small(const config::Experiment& e);
Table sim_large(const config::Experiment& e);
Table analytic_small(const config::Experiment& e);
Table analytic_large(const config::Experiment& e);
/// ATC-probability sweep over e.sweep.modes plus the CSMA/CA baseline.
Table modes_compare(const config::Experiment& e);
/// Per-group throughput with CPP on and off; groups are the connected
/// components of the communication graph.
Table cpp_fairness(const config::Experiment& e);
Table ack_loss(const config::Experiment& e);

struct ValidationRow {
  std::string scenario;
  double point = 0.0;
  double analytic_mbps = 0.0;
  Stat sim_mbps;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};
/// Model against simulator: small scale over e_small.sweep.n, large scale
/// over e_large.sweep.r_s.
std::vector<ValidationRow> validate(const config::Experiment& e_small, const config::Experiment& e_large,
                                    double small_tolerance = 0.03, double large_tolerance = 0.10);
Table validation_table(const std::vector<ValidationRow>& rows);

}  // namespace trean::exp
