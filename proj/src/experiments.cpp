#include "trean/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>

#include "trean/errors.hpp"
#include "trean/phy_decoder.hpp"
#include "trean/rng.hpp"

namespace trean::exp {

namespace {

using Row = std::vector<Cell>;

// Runs fn(0..count-1) on the requested number of threads; rows keep index order.
std::vector<Row> parallel_rows(std::size_t count, int jobs, const std::function<Row(std::size_t)>& fn) {
  std::vector<Row> rows(count);
  std::exception_ptr err;
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t i = 0; i < count; ++i) {
    try {
      rows[i] = fn(i);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return rows;
}

Table make(std::string schema, std::vector<std::string> columns, std::vector<Row> rows) {
  Table t;
  t.schema = std::move(schema);
  t.columns = std::move(columns);
  t.rows = std::move(rows);
  return t;
}

std::int64_t i64(std::uint64_t v) { return static_cast<std::int64_t>(v); }

mac::Topology topology_for(const config::Experiment& e, std::uint64_t tag, std::size_t point, int rep) {
  auto spec = e.topology;
  spec.seed = derive_seed(e.seed, {tag, point, static_cast<std::uint64_t>(rep)});
  return mac::build_topology(spec);
}

mac::SimConfig sim_for(const config::Experiment& e, std::uint64_t tag, std::size_t point, int rep) {
  auto c = e.sim;
  c.seed = derive_seed(e.seed, {tag + 1, point, static_cast<std::uint64_t>(rep)});
  return c;
}

std::uint64_t lost_rts(const mac::Metrics& m) { return m.lost[static_cast<int>(mac::FrameKind::Rts)]; }

}  // namespace

Table ber_sweep(const config::Experiment& e) {
  struct Point {
    baseband::Modulation m;
    double snr;
  };
  std::vector<Point> points;
  for (auto m : e.ber.modulations) {
    if (!e.ber.noise) {
      points.push_back({m, baseband::kNoNoise});
      continue;
    }
    for (double s : e.ber.snr_db) points.push_back({m, s});
  }
  auto rows = parallel_rows(points.size(), e.jobs, [&](std::size_t i) -> Row {
    phy::BerPoint pt;
    pt.modulation = points[i].m;
    pt.snr_db = points[i].snr;
    pt.max_delay_symbols = e.ber.max_delay_symbols;
    pt.data_symbols = e.ber.data_symbols;
    pt.pilot_length = e.ber.pilot_length;
    pt.frames = e.ber.frames;
    pt.seed = derive_seed(e.seed, {0xbe, i});
    const auto r = phy::run_ber_point(pt, phy::DecoderConfig{});
    return {std::string(baseband::to_string(pt.modulation)), pt.snr_db,
            static_cast<std::int64_t>(pt.max_delay_symbols), r.ber(), r.baseline_ber(),
            static_cast<std::int64_t>(r.trials), static_cast<std::int64_t>(r.bits),
            static_cast<std::int64_t>(r.bit_errors), static_cast<std::int64_t>(r.baseline_errors),
            static_cast<std::int64_t>(r.failures)};
  });
  return make("ber-sweep/1",
              {"modulation", "snr_db", "delay", "ber_pipeline", "ber_baseline", "trials", "bits", "bit_errors",
               "baseline_errors", "failures"},
              std::move(rows));
}

Table sim_small(const config::Experiment& e) {
  const std::vector<mac::Mode> modes{e.sim.mode, mac::Mode::Csma};
  const auto reps = static_cast<std::size_t>(e.repetitions);
  const auto count = e.sweep.n.size() * modes.size() * reps;
  auto rows = parallel_rows(count, e.jobs, [&](std::size_t i) -> Row {
    const auto p = i / (modes.size() * reps);
    const auto m = (i / reps) % modes.size();
    const int rep = static_cast<int>(i % reps);
    auto spec = e;
    spec.topology.n = e.sweep.n[p];
    const auto topo = topology_for(spec, 0x51, p, rep);  // same placement for both protocols
    auto cfg = sim_for(spec, 0x52, p, rep);
    cfg.mode = modes[m];
    const auto r = mac::run(topo, cfg);
    return {static_cast<std::int64_t>(e.sweep.n[p]), static_cast<std::int64_t>(rep),
            std::string(mac::to_string(modes[m])), r.throughput_bps / 1e6, i64(r.exchanges), i64(r.two_way),
            i64(r.one_way), i64(r.timeouts), i64(lost_rts(r))};
  });
  return make("sim-small/1",
              {"n", "rep", "mode", "throughput_mbps", "exchanges", "two_way", "one_way", "timeouts", "rts_lost"},
              std::move(rows));
}

Table sim_large(const config::Experiment& e) {
  const auto reps = static_cast<std::size_t>(e.repetitions);
  auto rows = parallel_rows(e.sweep.r_s.size() * reps, e.jobs, [&](std::size_t i) -> Row {
    const auto p = i / reps;
    const int rep = static_cast<int>(i % reps);
    auto spec = e;
    spec.topology.ranges.r_s = e.sweep.r_s[p];
    const auto topo = topology_for(spec, 0x61, p, rep);
    const auto r = mac::run(topo, sim_for(spec, 0x62, p, rep));
    return {e.sweep.r_s[p], static_cast<std::int64_t>(rep), std::string(mac::to_string(e.sim.mode)),
            r.throughput_bps / 1e6, i64(r.exchanges), i64(r.two_way), i64(r.one_way), i64(r.timeouts),
            r.immediate_ack_loss_rate(), r.final_unacked_rate()};
  });
  return make("sim-large/1",
              {"r_s", "rep", "mode", "throughput_mbps", "exchanges", "two_way", "one_way", "timeouts",
               "immediate_ack_loss", "final_unacked"},
              std::move(rows));
}

Table analytic_small(const config::Experiment& e) {
  std::vector<Row> rows;
  for (int n : e.sweep.n) {
    for (auto proto : {analytic::Protocol::Trean, analytic::Protocol::Csma}) {
      analytic::SmallScaleParams p;
      p.n = n;
      p.timing = e.sim.timing;
      p.protocol = proto;
      const auto s = analytic::small_scale_fixed_point(p);
      rows.push_back({static_cast<std::int64_t>(n), std::string(proto == analytic::Protocol::Trean ? "trean" : "csma"),
                      s.p_t, s.p_f, s.p_c, s.throughput.X, s.throughput.bits_per_s / 1e6,
                      static_cast<std::int64_t>(s.iterations)});
    }
  }
  return make("analytic-small/1", {"n", "protocol", "p_t", "p_f", "p_c", "X_us", "throughput_mbps", "iterations"},
              std::move(rows));
}

namespace {

analytic::LargeScaleParams large_params(const config::Experiment& e, double r_s) {
  analytic::LargeScaleParams p;
  p.stations = e.topology.n;
  p.width = e.topology.width;
  p.height = e.topology.height;
  p.r_c = e.topology.ranges.r_c;
  p.r_i = e.topology.ranges.r_i;
  p.r_s = r_s;
  p.timing = e.sim.timing;
  p.disk_samples = e.disk_samples;
  p.seed = derive_seed(e.seed, {0xa1});
  p.busy_weight = e.busy_weight;
  return p;
}

}  // namespace

Table analytic_large(const config::Experiment& e) {
  auto rows = parallel_rows(e.sweep.r_s.size(), e.jobs, [&](std::size_t i) -> Row {
    const auto s = analytic::large_scale_fixed_point(large_params(e, e.sweep.r_s[i]));
    return {e.sweep.r_s[i], s.point.p_t, s.point.p_f, s.X, s.P_rts_succ, s.p_s1, s.p_s2, s.geometry.n_h,
            s.bits_per_s / 1e6, static_cast<std::int64_t>(s.oscillation)};
  });
  return make("analytic-large/1",
              {"r_s", "p_t", "p_f", "X_us", "P_rts_succ", "p_s1", "p_s2", "n_h", "throughput_mbps", "oscillation"},
              std::move(rows));
}

Table modes_compare(const config::Experiment& e) {
  auto modes = e.sweep.modes;
  modes.push_back(mac::Mode::Csma);
  const auto reps = static_cast<std::size_t>(e.repetitions);
  auto rows = parallel_rows(e.sweep.atc_probability.size() * modes.size() * reps, e.jobs, [&](std::size_t i) -> Row {
    const auto p = i / (modes.size() * reps);
    const auto m = (i / reps) % modes.size();
    const int rep = static_cast<int>(i % reps);
    const auto topo = topology_for(e, 0x71, p, rep);
    auto cfg = sim_for(e, 0x72, p, rep);
    cfg.mode = modes[m];
    cfg.traffic.atc_prob = e.sweep.atc_probability[p];
    const auto r = mac::run(topo, cfg);
    return {e.sweep.atc_probability[p], std::string(mac::to_string(modes[m])), static_cast<std::int64_t>(rep),
            r.throughput_bps / 1e6, i64(r.two_way), i64(r.one_way)};
  });
  return make("modes-compare/1", {"atc_probability", "mode", "rep", "throughput_mbps", "two_way", "one_way"},
              std::move(rows));
}

Table cpp_fairness(const config::Experiment& e) {
  const auto reps = static_cast<std::size_t>(e.repetitions);
  auto rows = parallel_rows(2 * reps, e.jobs, [&](std::size_t i) -> Row {
    const bool cpp = i < reps;
    const int rep = static_cast<int>(i % reps);
    const auto topo = topology_for(e, 0x81, 0, rep);
    auto cfg = sim_for(e, 0x82, 0, rep);
    cfg.cpp_enabled = cpp;
    const auto r = mac::run(topo, cfg);
    std::vector<double> groups;
    for (const auto& comp : mac::components(topo.comm)) {
      double bits = 0.0;
      bool sends = false;
      for (int k : comp) {
        bits += r.delivered_bits[static_cast<std::size_t>(k)];
        for (const auto& f : cfg.traffic.flows) sends = sends || f.first == k;
      }
      if (sends || cfg.traffic.flows.empty()) groups.push_back(bits / r.sim_time_s / 1e6);
    }
    const double lo = groups.empty() ? 0.0 : *std::min_element(groups.begin(), groups.end());
    const double hi = groups.empty() ? 0.0 : *std::max_element(groups.begin(), groups.end());
    return {static_cast<std::int64_t>(cpp), static_cast<std::int64_t>(rep), groups.size() > 0 ? groups[0] : 0.0,
            groups.size() > 1 ? groups[1] : 0.0, hi > 0.0 ? lo / hi : 0.0, r.throughput_bps / 1e6};
  });
  return make("cpp-fairness/1", {"cpp_enabled", "rep", "group1_mbps", "group2_mbps", "ratio", "total_mbps"},
              std::move(rows));
}

Table ack_loss(const config::Experiment& e) {
  auto spec = e.topology;
  spec.seed = derive_seed(e.seed, {0x91});
  auto cfg = e.sim;
  cfg.seed = derive_seed(e.seed, {0x92});
  if (e.jobs > 0) omp_set_num_threads(e.jobs);
  std::vector<Row> rows;
  for (const auto& r : mac::ack_loss_experiment(spec, cfg, e.sweep.r_s, e.repetitions)) {
    rows.push_back({r.r_s, r.immediate_loss, r.final_unacked, i64(r.delivered), i64(r.resolved)});
  }
  return make("ack-loss/1", {"r_s", "immediate_loss", "final_unacked", "delivered", "resolved"}, std::move(rows));
}

std::vector<ValidationRow> validate(const config::Experiment& e_small, const config::Experiment& e_large,
                                    double small_tolerance, double large_tolerance) {
  std::vector<ValidationRow> out;
  const auto small = sim_small(e_small);
  const auto small_stats = small.stats({"mode", "n"}, "throughput_mbps");
  for (int n : e_small.sweep.n) {
    analytic::SmallScaleParams p;
    p.n = n;
    p.timing = e_small.sim.timing;
    p.protocol = e_small.sim.mode == mac::Mode::Csma ? analytic::Protocol::Csma : analytic::Protocol::Trean;
    ValidationRow row;
    row.scenario = "small";
    row.point = n;
    row.analytic_mbps = analytic::small_scale_fixed_point(p).throughput.bits_per_s / 1e6;
    row.sim_mbps = small_stats.at(std::string(mac::to_string(e_small.sim.mode)) + "|" + std::to_string(n));
    out.push_back(row);
  }
  const auto large = sim_large(e_large);
  const auto large_rows = analytic_large(e_large);
  for (std::size_t i = 0; i < e_large.sweep.r_s.size(); ++i) {
    ValidationRow row;
    row.scenario = "large";
    row.point = e_large.sweep.r_s[i];
    row.analytic_mbps = large_rows.number(i, "throughput_mbps");
    std::vector<double> v;
    for (std::size_t k = 0; k < large.rows.size(); ++k) {
      if (large.number(k, "r_s") == row.point) v.push_back(large.number(k, "throughput_mbps"));
    }
    row.sim_mbps = describe(v);
    out.push_back(row);
  }
  for (auto& r : out) {
    r.tolerance = r.scenario == "small" ? small_tolerance : large_tolerance;
    r.rel_error = std::abs(r.analytic_mbps - r.sim_mbps.mean) / r.sim_mbps.mean;
    r.pass = r.rel_error <= r.tolerance;
  }
  return out;
}

Table validation_table(const std::vector<ValidationRow>& rows) {
  std::vector<Row> out;
  for (const auto& r : rows) {
    out.push_back({r.scenario, r.point, r.analytic_mbps, r.sim_mbps.mean, r.sim_mbps.stddev, r.rel_error, r.tolerance,
                   static_cast<std::int64_t>(r.pass)});
  }
  return make("validate/1",
              {"scenario", "point", "analytic_mbps", "sim_mean_mbps", "sim_stddev_mbps", "rel_error", "tolerance",
               "pass"},
              std::move(out));
}

}  // namespace trean::exp
