#include "trean/mac_sim.hpp"

#include <cmath>
#include <exception>
#include <set>

#include "mac_engine.hpp"
#include "trean/errors.hpp"
#include "trean/phy_decoder.hpp"
#include "trean/rng.hpp"

namespace trean::mac {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Basic: return "basic";
    case Mode::Extended: return "extended";
    case Mode::ExtendedPlus: return "extended_plus";
    case Mode::Csma: return "csma";
  }
  return "?";
}

const char* to_string(FrameKind k) {
  switch (k) {
    case FrameKind::Rts: return "RTS";
    case FrameKind::Rtc: return "RTC";
    case FrameKind::Atc: return "ATC";
    case FrameKind::Cts: return "CTS";
    case FrameKind::Cpp: return "CPP";
    case FrameKind::Data: return "DATA";
    case FrameKind::Ack: return "ACK";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "basic") return Mode::Basic;
  if (s == "extended") return Mode::Extended;
  if (s == "extended_plus" || s == "extended-plus") return Mode::ExtendedPlus;
  if (s == "csma") return Mode::Csma;
  throw ConfigError("unknown mode '" + s + "' (basic, extended, extended_plus, csma)");
}

namespace {

void put(std::string& out, std::int64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

std::string Frame::wire() const {
  // A CPP goes out as a copy of the RTS it protects.
  const auto k = kind == FrameKind::Cpp ? FrameKind::Rts : kind;
  std::string out;
  put(out, static_cast<int>(k), 1);
  put(out, static_cast<int>(subtype), 1);
  put(out, std::llround(duration_us), 2);
  put(out, ra, 4);
  put(out, ta, 4);
  if (na >= 0) put(out, na, 4);
  for (int e : ea) put(out, e, 4);
  for (int t : ts) put(out, t, 1);
  if (k == FrameKind::Data) put(out, static_cast<std::int64_t>(frame_id), 4);
  for (auto id : ack_ids) put(out, static_cast<std::int64_t>(id), 4);
  return out;
}

double SimConfig::rts_timer() const {
  return rts_timer_us >= 0.0 ? rts_timer_us : timing.sifs + timing.cts() + 2 * timing.delta;
}

double SimConfig::rtc_timer() const {
  return rtc_timer_us >= 0.0 ? rtc_timer_us : timing.difs + timing.atc() + 2 * timing.delta;
}

void SimConfig::validate(const Topology& topo) const {
  if (!(duration_s >= 0.0)) throw ConfigError("duration_s must be non-negative");
  if (timing.w0 < 1 || timing.m < 0) throw ConfigError("w0 must be >= 1 and m >= 0");
  if (!(timing.slot > 0.0 && timing.sifs > 0.0 && timing.difs > timing.sifs && timing.delta >= 0.0)) {
    throw ConfigError("timing needs slot > 0, 0 < sifs < difs and delta >= 0");
  }
  const int max_ea = static_cast<int>(std::floor((timing.difs - timing.sifs) / timing.slot));
  if (n_ea < 0 || n_ea > max_ea) {
    throw ConfigError("n_ea must be in [0, " + std::to_string(max_ea) +
                      "] so every ATC starts before DIFS");
  }
  if (traffic.atc_prob < 0.0 || traffic.atc_prob > 1.0) throw ConfigError("atc_prob must be in [0, 1]");
  if (traffic.one_hop_fraction < 0.0 || traffic.one_hop_fraction > 1.0) {
    throw ConfigError("one_hop_fraction must be in [0, 1]");
  }
  if (tiny_delay_us < 0.0) throw ConfigError("tiny_delay_us must be non-negative");
  if (phy_check_interval < 0) throw ConfigError("phy_check_interval must be non-negative");
  const int n = topo.size();
  auto all = traffic.flows;
  all.insert(all.end(), traffic.backward_flows.begin(), traffic.backward_flows.end());
  for (const auto& [a, b] : all) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) {
      throw ConfigError("flow (" + std::to_string(a) + ", " + std::to_string(b) +
                        ") must name two distinct stations below " + std::to_string(n));
    }
    if (topo.hops[a][b] < 0) {
      throw ConfigError("flow (" + std::to_string(a) + ", " + std::to_string(b) + ") is unreachable");
    }
  }
}

double Metrics::immediate_ack_loss_rate() const {
  return data_delivered ? static_cast<double>(ack_immediate_lost) / static_cast<double>(data_delivered) : 0.0;
}

double Metrics::final_unacked_rate() const {
  return ack_resolved ? static_cast<double>(ack_final_unacked) / static_cast<double>(ack_resolved) : 0.0;
}

namespace detail {

Engine::Engine(const Topology& topo, const SimConfig& cfg)
    : topo_(topo), cfg_(cfg), tm_(cfg_.timing), rng_(derive_seed(cfg.seed, {0x5eed})) {
  cfg_.validate(topo_);
  const int n = topo_.size();
  st_.resize(static_cast<std::size_t>(n));
  m_.delivered_bits.assign(static_cast<std::size_t>(n), 0.0);
  m_.channel.assign(static_cast<std::size_t>(n), {});
  std::set<int> sources;
  for (const auto& f : cfg_.traffic.flows) sources.insert(f.first);
  for (int k = 0; k < n; ++k) {
    st_[k].has_traffic = cfg_.traffic.flows.empty() ? !topo_.comm[k].empty() : sources.contains(k);
  }
}

Metrics Engine::run() {
  end_ = to_ns(cfg_.duration_s * 1e6);
  for (int k = 0; k < topo_.size(); ++k) {
    draw_backoff(k, true);
    schedule(0, kTimer, [this, k] { medium_changed(k); });
  }
  while (!queue_.empty() && queue_.top().t < end_) {
    auto fn = queue_.top().fn;
    now_ = queue_.top().t;
    queue_.pop();
    fn();
  }
  now_ = end_;
  for (int k = 0; k < topo_.size(); ++k) {
    auto& s = st_[k];
    if (s.busy > 0) {
      account_busy(k, false, s.busy_failed);
    } else {
      m_.channel[static_cast<std::size_t>(k)].idle_s += static_cast<double>(end_ - s.last_change) * 1e-9;
    }
  }
  m_.sim_time_s = cfg_.duration_s;
  m_.throughput_bps = end_ > 0 ? m_.total_bits / cfg_.duration_s : 0.0;
  return std::move(m_);
}

void Engine::phy_check(const Coop& c) {
  phy::BerPoint pt;
  pt.snr_db = baseband::kNoNoise;
  pt.data_symbols = 200;
  pt.frames = 1;
  pt.seed = derive_seed(cfg_.seed, {0x9c, static_cast<std::uint64_t>(c.id)});
  const auto r = phy::run_ber_point(pt, phy::DecoderConfig{});
  m_.phy_checks++;
  if (r.bit_errors > 0 || r.failures > 0) m_.phy_check_errors++;
}

}  // namespace detail

Metrics run(const Topology& topo, const SimConfig& cfg) {
  detail::Engine e(topo, cfg);
  return e.run();
}

Metrics run_csma_baseline(const Topology& topo, SimConfig cfg) {
  cfg.mode = Mode::Csma;
  return run(topo, cfg);
}

std::vector<AckLossRow> ack_loss_experiment(const TopologySpec& spec, const SimConfig& cfg,
                                            const std::vector<double>& r_s_values, int reps) {
  if (reps < 1) throw ConfigError("reps must be positive");
  const auto nr = r_s_values.size();
  std::vector<Topology> topos;
  std::vector<SimConfig> cfgs;
  for (std::size_t i = 0; i < nr; ++i) {
    for (int rep = 0; rep < reps; ++rep) {
      auto s = spec;
      s.ranges.r_s = r_s_values[i];
      s.seed = derive_seed(spec.seed, {0xac, i, static_cast<std::uint64_t>(rep)});
      topos.push_back(build_topology(s));
      auto c = cfg;
      c.seed = derive_seed(cfg.seed, {0xad, i, static_cast<std::uint64_t>(rep)});
      cfgs.push_back(c);
    }
  }
  std::vector<Metrics> out(topos.size());
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < topos.size(); ++j) {
    try {
      out[j] = run(topos[j], cfgs[j]);
    } catch (...) {
#pragma omp critical
      err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  std::vector<AckLossRow> rows;
  for (std::size_t i = 0; i < nr; ++i) {
    AckLossRow row;
    row.r_s = r_s_values[i];
    std::uint64_t lost = 0, final_unacked = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto& m = out[i * static_cast<std::size_t>(reps) + static_cast<std::size_t>(rep)];
      row.delivered += m.data_delivered;
      row.resolved += m.ack_resolved;
      lost += m.ack_immediate_lost;
      final_unacked += m.ack_final_unacked;
    }
    row.immediate_loss = row.delivered ? static_cast<double>(lost) / static_cast<double>(row.delivered) : 0.0;
    row.final_unacked = row.resolved ? static_cast<double>(final_unacked) / static_cast<double>(row.resolved) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace trean::mac
