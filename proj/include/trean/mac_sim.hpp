#pragma once

// Discrete-event simulator of the cooperative two-way relay MAC and a
// CSMA/CA baseline. PHY outcomes are abstracted to a geometric collision
// model: a reception fails when another transmission from within r_i of
// the receiver overlaps it, unless the overlap is a superposition the
// receiver can resolve.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trean/timing.hpp"
#include "trean/topology.hpp"

namespace trean::mac {

enum class Mode { Basic, Extended, ExtendedPlus, Csma };

enum class FrameKind : std::uint8_t { Rts, Rtc, Atc, Cts, Cpp, Data, Ack };
inline constexpr int kFrameKinds = 7;

/// Control-frame subtype: which protocol variant a frame belongs to.
enum class Subtype : std::uint8_t { Basic, Extended, ExtendedPlus, OneWay, Special, Csma };

const char* to_string(Mode m);
const char* to_string(FrameKind k);
Mode parse_mode(const std::string& s);  // throws ConfigError

struct Frame {
  FrameKind kind = FrameKind::Rts;
  Subtype subtype = Subtype::Basic;
  int ra = -1;
  int ta = -1;
  int na = -1;
  std::vector<int> ea;   // extended RTC: extra qualified stations; extended-plus CTS: one
  std::vector<int> ts;   // sequence numbers, ts[0] for na, ts[k+1] for ea[k]
  std::vector<std::uint64_t> ack_ids;  // at most three, newest first
  std::uint64_t frame_id = 0;          // data frames
  double duration_us = 0.0;            // NAV field, counted from the end of the frame
  double airtime_us = 0.0;
  int coop = -1;                       // exchange this frame belongs to
  std::vector<int> components;         // relayed frames: transmission ids forwarded

  /// Over-the-air bytes of the MAC fields (simulator bookkeeping excluded).
  std::string wire() const;
};

struct Traffic {
  /// Probability that a station asked to cooperate holds an eligible backward frame.
  double atc_prob = 1.0;
  /// Fraction of frames addressed to a one-hop neighbour (special RTS).
  double one_hop_fraction = 0.0;
  /// Explicit saturated flows (source, destination). Empty: every station
  /// sends to random two-hop destinations (one-hop neighbours under CSMA).
  std::vector<std::pair<int, int>> flows;
  /// Frames held only for the backward direction: the source answers ATC
  /// for them but never initiates.
  std::vector<std::pair<int, int>> backward_flows;
};

struct SimConfig {
  Mode mode = Mode::Basic;
  Timing timing;
  Traffic traffic;
  double duration_s = 2.0;
  std::uint64_t seed = 1;
  bool cpp_enabled = true;
  /// The RTS receiver answers only when its physical carrier sense is idle
  /// too, not just its NAV. Not applied to the CSMA/CA baseline.
  bool responder_cca = true;
  int n_ea = 2;
  double tiny_delay_us = 4.0;  // extended modes: data phase starts SIFS + U[0, tiny_delay_us]
  double rts_timer_us = -1.0;  // < 0: SIFS + CTS + 2 delta
  double rtc_timer_us = -1.0;  // < 0: DIFS + ATC + 2 delta
  bool record_log = false;
  /// Run the waveform decoder on every k-th two-way broadcast (0 disables).
  int phy_check_interval = 0;

  double rts_timer() const;
  double rtc_timer() const;
  /// Throws ConfigError on inconsistent values.
  void validate(const Topology& topo) const;
};

struct LogEntry {
  std::int64_t t_ns = 0;  // transmission start
  int station = -1;
  Frame frame;
  std::int64_t nav_until_ns = 0;  // for received-NAV entries
  bool nav_set = false;           // entry records a NAV update rather than a transmission
};

struct ChannelTime {
  double idle_s = 0.0;
  double success_s = 0.0;
  double collision_s = 0.0;
};

struct Metrics {
  double sim_time_s = 0.0;
  std::vector<double> delivered_bits;  // per source station
  double total_bits = 0.0;
  double throughput_bps = 0.0;

  std::array<std::uint64_t, kFrameKinds> sent{};
  std::array<std::uint64_t, kFrameKinds> lost{};  // addressed reception failed

  std::uint64_t exchanges = 0;        // RTS transmissions
  std::uint64_t two_way = 0;          // CTS authorizing two-way relay
  std::uint64_t one_way = 0;          // special CTS
  std::uint64_t csma_exchanges = 0;   // special-RTS / CSMA RTS handshakes completed
  std::uint64_t timeouts = 0;         // initiator failures

  std::uint64_t data_delivered = 0;   // relayed data frames decoded at their destination
  std::uint64_t direct_delivered = 0; // special / CSMA data frames decoded at their destination
  std::uint64_t ack_immediate_lost = 0;
  std::uint64_t ack_resolved = 0;     // delivered frames whose ID window closed or was acked
  std::uint64_t ack_final_unacked = 0;

  std::uint64_t phy_checks = 0;
  std::uint64_t phy_check_errors = 0;

  std::vector<ChannelTime> channel;   // per observer station
  std::vector<LogEntry> log;

  double immediate_ack_loss_rate() const;
  double final_unacked_rate() const;
};

/// Runs one simulation. Deterministic in (topology, config).
Metrics run(const Topology& topo, const SimConfig& cfg);

/// run() with Mode::Csma.
Metrics run_csma_baseline(const Topology& topo, SimConfig cfg);

struct AckLossRow {
  double r_s = 0.0;
  double immediate_loss = 0.0;
  double final_unacked = 0.0;
  std::uint64_t delivered = 0;
  std::uint64_t resolved = 0;
};

/// Large-scale sweep over sensing ranges; one topology draw per repetition.
std::vector<AckLossRow> ack_loss_experiment(const TopologySpec& spec, const SimConfig& cfg,
                                            const std::vector<double>& r_s_values, int reps);

}  // namespace trean::mac
