#include "trean/config.hpp"

#include <yaml-cpp/yaml.h>

#include <set>

#include "trean/errors.hpp"

namespace trean::config {

Experiment Experiment::small_scale() {
  Experiment e;
  e.topology.placement = mac::Placement::Disk;
  e.topology.n = 20;
  e.topology.radius = 1.45;
  e.topology.ranges = {1.0, 2.9, 2.9};
  e.topology.require_two_hop = true;
  e.topology.max_attempts = 1000;
  e.sim.duration_s = 2.0;
  return e;
}

Experiment Experiment::large_scale() {
  Experiment e;
  e.topology.placement = mac::Placement::Rect;
  e.topology.n = 300;
  e.topology.ranges = {1.0, 1.78, 2.4};
  e.topology.max_attempts = 1000;
  e.sim.duration_s = 2.0;
  return e;
}

Experiment Experiment::fairness() {
  Experiment e;
  e.topology.placement = mac::Placement::Explicit;
  e.topology.positions = mac::fairness_positions();
  e.topology.n = 6;
  e.topology.ranges = {1.0, 1.78, 2.9};
  e.topology.require_connected = false;
  e.sim.traffic.flows = {{0, 2}, {2, 0}, {3, 5}, {5, 3}};
  e.sim.duration_s = 2.0;
  return e;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    const auto line = n.Mark().line;
    throw ConfigError(origin_ + ":" + (line >= 0 ? std::to_string(line + 1) : "?") + ": " + msg);
  }

  template <class T>
  T as(const YAML::Node& n, const std::string& key) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "bad value for '" + key + "'");
    }
  }

  template <class T>
  std::vector<T> list(const YAML::Node& n, const std::string& key) const {
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list");
    std::vector<T> out;
    for (const auto& v : n) out.push_back(as<T>(v, key));
    return out;
  }

  // Visits a mapping; unknown keys are an error.
  template <class F>
  void section(const YAML::Node& n, const std::string& name, const std::set<std::string>& keys, F&& f) const {
    if (!n) return;
    if (!n.IsMap()) fail(n, "'" + name + "' must be a mapping");
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!keys.contains(key)) fail(kv.first, "unknown key '" + key + "' in " + name);
      f(key, kv.second);
    }
  }

 private:
  std::string origin_;
};

void read_timing(const Reader& r, const YAML::Node& n, Timing& t) {
  r.section(n, "timing",
            {"slot_us", "sifs_us", "difs_us", "delta_us", "plcp_us", "control_rate_mbps",
             "data_rate_mbps", "payload_bytes", "w0", "m"},
            [&](const std::string& k, const YAML::Node& v) {
              if (k == "slot_us") t.slot = r.as<double>(v, k);
              if (k == "sifs_us") t.sifs = r.as<double>(v, k);
              if (k == "difs_us") t.difs = r.as<double>(v, k);
              if (k == "delta_us") t.delta = r.as<double>(v, k);
              if (k == "plcp_us") t.plcp = r.as<double>(v, k);
              if (k == "control_rate_mbps") t.control_rate = r.as<double>(v, k);
              if (k == "data_rate_mbps") t.data_rate = r.as<double>(v, k);
              if (k == "payload_bytes") t.payload_bytes = r.as<double>(v, k);
              if (k == "w0") t.w0 = r.as<int>(v, k);
              if (k == "m") t.m = r.as<int>(v, k);
            });
}

mac::Placement placement(const Reader& r, const YAML::Node& v, mac::TopologySpec& t) {
  const auto s = r.as<std::string>(v, "placement");
  if (s == "rect") return mac::Placement::Rect;
  if (s == "disk") return mac::Placement::Disk;
  if (s == "explicit") return mac::Placement::Explicit;
  if (s == "fairness") {
    t.positions = mac::fairness_positions();
    t.n = static_cast<int>(t.positions.size());
    t.require_connected = false;
    return mac::Placement::Explicit;
  }
  r.fail(v, "placement must be rect, disk, explicit or fairness");
}

void read_topology(const Reader& r, const YAML::Node& n, mac::TopologySpec& t) {
  r.section(n, "topology",
            {"placement", "n", "width", "height", "radius", "positions", "ranges", "close_threshold",
             "require_two_hop", "require_connected", "max_attempts"},
            [&](const std::string& k, const YAML::Node& v) {
              if (k == "placement") t.placement = placement(r, v, t);
              if (k == "n") t.n = r.as<int>(v, k);
              if (k == "width") t.width = r.as<double>(v, k);
              if (k == "height") t.height = r.as<double>(v, k);
              if (k == "radius") t.radius = r.as<double>(v, k);
              if (k == "close_threshold") t.close_threshold = r.as<double>(v, k);
              if (k == "require_two_hop") t.require_two_hop = r.as<bool>(v, k);
              if (k == "require_connected") t.require_connected = r.as<bool>(v, k);
              if (k == "max_attempts") t.max_attempts = r.as<int>(v, k);
              if (k == "positions") {
                t.positions.clear();
                for (const auto& p : r.list<std::vector<double>>(v, k)) {
                  if (p.size() != 2) r.fail(v, "positions entries must be [x, y]");
                  t.positions.push_back({p[0], p[1]});
                }
                t.n = static_cast<int>(t.positions.size());
              }
              if (k == "ranges") {
                r.section(v, "ranges", {"r_c", "r_i", "r_s"}, [&](const std::string& rk, const YAML::Node& rv) {
                  if (rk == "r_c") t.ranges.r_c = r.as<double>(rv, rk);
                  if (rk == "r_i") t.ranges.r_i = r.as<double>(rv, rk);
                  if (rk == "r_s") t.ranges.r_s = r.as<double>(rv, rk);
                });
              }
            });
}

void read_sim(const Reader& r, const YAML::Node& n, mac::SimConfig& s) {
  r.section(n, "sim",
            {"mode", "duration_s", "cpp_enabled", "n_ea", "tiny_delay_us", "rts_timer_us",
             "rtc_timer_us", "responder_cca", "phy_check_interval", "record_log", "traffic"},
            [&](const std::string& k, const YAML::Node& v) {
              if (k == "mode") {
                try {
                  s.mode = mac::parse_mode(r.as<std::string>(v, k));
                } catch (const ConfigError& e) {
                  r.fail(v, e.what());
                }
              }
              if (k == "duration_s") s.duration_s = r.as<double>(v, k);
              if (k == "cpp_enabled") s.cpp_enabled = r.as<bool>(v, k);
              if (k == "n_ea") s.n_ea = r.as<int>(v, k);
              if (k == "tiny_delay_us") s.tiny_delay_us = r.as<double>(v, k);
              if (k == "rts_timer_us") s.rts_timer_us = r.as<double>(v, k);
              if (k == "rtc_timer_us") s.rtc_timer_us = r.as<double>(v, k);
              if (k == "responder_cca") s.responder_cca = r.as<bool>(v, k);
              if (k == "phy_check_interval") s.phy_check_interval = r.as<int>(v, k);
              if (k == "record_log") s.record_log = r.as<bool>(v, k);
              if (k == "traffic") {
                r.section(v, "traffic", {"atc_probability", "one_hop_fraction", "flows", "backward_flows"},
                          [&](const std::string& tk, const YAML::Node& tv) {
                            if (tk == "atc_probability") s.traffic.atc_prob = r.as<double>(tv, tk);
                            if (tk == "one_hop_fraction") s.traffic.one_hop_fraction = r.as<double>(tv, tk);
                            if (tk == "flows" || tk == "backward_flows") {
                              auto& out = tk == "flows" ? s.traffic.flows : s.traffic.backward_flows;
                              out.clear();
                              for (const auto& f : r.list<std::vector<int>>(tv, tk)) {
                                if (f.size() != 2) r.fail(tv, tk + " entries must be [source, destination]");
                                out.emplace_back(f[0], f[1]);
                              }
                            }
                          });
              }
            });
}

void read_ber(const Reader& r, const YAML::Node& n, BerSweep& b) {
  r.section(n, "ber",
            {"modulations", "snr_db", "max_delay_symbols", "data_symbols", "pilot_length", "frames", "noise"},
            [&](const std::string& k, const YAML::Node& v) {
              if (k == "modulations") {
                b.modulations.clear();
                for (const auto& name : r.list<std::string>(v, k)) {
                  try {
                    b.modulations.push_back(baseband::modulation_from_string(name));
                  } catch (const ParameterError& e) {
                    r.fail(v, e.what());
                  }
                }
              }
              if (k == "snr_db") b.snr_db = r.list<double>(v, k);
              if (k == "max_delay_symbols") b.max_delay_symbols = r.as<std::size_t>(v, k);
              if (k == "data_symbols") b.data_symbols = r.as<std::size_t>(v, k);
              if (k == "pilot_length") b.pilot_length = r.as<std::size_t>(v, k);
              if (k == "frames") b.frames = r.as<std::size_t>(v, k);
              if (k == "noise") b.noise = r.as<bool>(v, k);
            });
}

void read_sweep(const Reader& r, const YAML::Node& n, Sweep& s) {
  r.section(n, "sweep", {"n", "r_s", "atc_probability", "modes"}, [&](const std::string& k, const YAML::Node& v) {
    if (k == "n") s.n = r.list<int>(v, k);
    if (k == "r_s") s.r_s = r.list<double>(v, k);
    if (k == "atc_probability") s.atc_probability = r.list<double>(v, k);
    if (k == "modes") {
      s.modes.clear();
      for (const auto& m : r.list<std::string>(v, k)) {
        try {
          s.modes.push_back(mac::parse_mode(m));
        } catch (const ConfigError& e) {
          r.fail(v, e.what());
        }
      }
    }
  });
}

Experiment parse(const YAML::Node& root, Experiment e, const Reader& r) {
  if (!root || root.IsNull()) return e;
  r.section(root, "top level",
            {"preset", "seed", "repetitions", "jobs", "out", "ber", "topology", "timing", "sim", "sweep",
             "analytic"},
            [&](const std::string& k, const YAML::Node& v) {
              if (k == "preset") {
                const auto p = r.as<std::string>(v, k);
                if (p == "small_scale") e = Experiment::small_scale();
                else if (p == "large_scale") e = Experiment::large_scale();
                else if (p == "fairness") e = Experiment::fairness();
                else r.fail(v, "preset must be small_scale, large_scale or fairness");
              }
            });
  // Second pass so the preset never overrides explicit keys, wherever they appear.
  r.section(root, "top level",
            {"preset", "seed", "repetitions", "jobs", "out", "ber", "topology", "timing", "sim", "sweep",
             "analytic"},
            [&](const std::string& k, const YAML::Node& v) {
              if (k == "seed") e.seed = r.as<std::uint64_t>(v, k);
              if (k == "repetitions") e.repetitions = r.as<int>(v, k);
              if (k == "jobs") e.jobs = r.as<int>(v, k);
              if (k == "out") e.out = r.as<std::string>(v, k);
              if (k == "ber") read_ber(r, v, e.ber);
              if (k == "topology") read_topology(r, v, e.topology);
              if (k == "timing") read_timing(r, v, e.sim.timing);
              if (k == "sim") read_sim(r, v, e.sim);
              if (k == "sweep") read_sweep(r, v, e.sweep);
              if (k == "analytic") {
                r.section(v, "analytic", {"disk_samples", "busy_weight"}, [&](const std::string& ak, const YAML::Node& av) {
                  if (ak == "disk_samples") e.disk_samples = r.as<std::uint64_t>(av, ak);
                  if (ak == "busy_weight") e.busy_weight = r.as<double>(av, ak);
                });
              }
            });
  return e;
}

}  // namespace

Experiment load_string(const std::string& text, Experiment base, const std::string& origin) {
  const Reader r(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  auto e = parse(root, std::move(base), r);
  try {
    check(e);
  } catch (const ConfigError& err) {
    throw ConfigError(origin + ": " + err.what());
  }
  return e;
}

Experiment load_file(const std::string& path, Experiment base) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError(path + ": cannot open config file");
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  auto e = parse(root, std::move(base), Reader(path));
  try {
    check(e);
  } catch (const ConfigError& err) {
    throw ConfigError(path + ": " + err.what());
  }
  return e;
}

void check(const Experiment& e) {
  if (e.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (e.jobs < 0) throw ConfigError("jobs must be >= 0");
  if (e.topology.placement != mac::Placement::Explicit && e.topology.n < 1) {
    throw ConfigError("topology.n must be >= 1");
  }
  if (e.ber.frames < 1 || e.ber.data_symbols < 1 || e.ber.pilot_length < 1) {
    throw ConfigError("ber frames, data_symbols and pilot_length must be >= 1");
  }
  if (!(e.busy_weight >= 0.0 && e.busy_weight <= 1.0)) throw ConfigError("analytic.busy_weight must be in [0, 1]");
  for (double a : e.sweep.atc_probability) {
    if (a < 0.0 || a > 1.0) throw ConfigError("sweep.atc_probability values must be in [0, 1]");
  }
  for (int n : e.sweep.n) {
    if (n < 3) throw ConfigError("sweep.n values must be >= 3");
  }
}

}  // namespace trean::config
