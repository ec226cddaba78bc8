#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <vector>

#include "trean/mac_sim.hpp"

namespace trean::mac::detail {

using Time = std::int64_t;  // nanoseconds

inline Time to_ns(double us) { return static_cast<Time>(us * 1000.0 + (us >= 0 ? 0.5 : -0.5)); }

// Same-instant ordering: carrier-sense updates, then receptions, then timers.
enum Priority : int { kSense = 0, kReceive = 1, kTimer = 2 };

struct Event {
  Time t;
  int priority;
  std::uint64_t seq;
  std::function<void()> fn;
  bool operator>(const Event& o) const {
    if (t != o.t) return t > o.t;
    if (priority != o.priority) return priority > o.priority;
    return seq > o.seq;
  }
};

struct Tx {
  int id = -1;
  int sender = -1;
  Frame frame;
  Time start = 0;
  Time end = 0;
  bool ok_at_ra = true;  // set when the transmission ends
};

struct OutFrame {
  int dest = -1;
  int relay = -1;  // -1: one-hop exchange
  std::uint64_t id = 0;
};

struct Station {
  // backoff
  int stage = 0;
  int counter = 0;
  bool fresh = true;
  bool has_traffic = false;
  // medium
  int busy = 0;
  Time nav = 0;
  Time idle_since = 0;  // physical and virtual carrier sense idle since
  bool counting = false;
  bool started = false;  // first boundary of the current countdown passed
  Time b0 = 0;
  std::uint64_t gen = 0;
  Time tx_until = 0;
  // exchange
  int coop = -1;
  bool head_valid = false;
  OutFrame head;
  std::uint64_t next_id = 1;
  std::map<int, std::deque<std::uint64_t>> retransmit;  // peer -> frame ids
  std::map<int, std::deque<std::uint64_t>> unacked;     // peer -> ids awaiting an ACK
  std::map<int, std::deque<std::uint64_t>> window;      // peer -> ids received, newest first
  // channel-time accounting
  Time busy_start = 0;
  bool busy_failed = false;
  Time last_change = 0;
};

enum class Phase { Handshake, Data, Ack, Done };

// Uplink transmissions towards the relay in one stage of the exchange.
struct Leg {
  std::vector<int> tx;
  std::vector<int> ok;  // -1 pending, 0 corrupted, 1 received
  int arrived = 0;
  int expected = 0;
};

struct Coop {
  int id = -1;
  bool special = false;  // one-hop RTS/CTS/DATA/ACK exchange
  Subtype subtype = Subtype::Basic;
  int A = -1, B = -1, C = -1;
  std::vector<int> qualified;  // C first, then EA picks
  std::vector<int> seq;        // sequence number per qualified station
  int partner = -1;
  int partner_dest = -1;
  bool two_way = false;
  bool rtc_heard = false;   // initiator overheard the RTC
  bool atc_received = false;
  bool cts_sent = false;
  bool cts_heard = false;   // initiator received CTS
  Phase phase = Phase::Handshake;
  int rts_tx = -1;
  Time rtc_end = 0;
  OutFrame frame_A;
  OutFrame frame_P;
  Leg data;
  Leg ack;
  std::map<int, int> atc_dest;            // qualified station -> backward destination
  std::map<int, std::vector<int>> known;  // station -> transmissions it can cancel
  std::vector<int> engaged;
  std::map<int, bool> acked;              // original sender -> its frame was acknowledged
  std::map<int, bool> got_cts;
  std::vector<std::size_t> deliveries;
};

struct Delivery {
  int sender = -1;
  int dest = -1;
  std::uint64_t id = 0;
  bool acked = false;
  bool immediate = false;  // acked by the ACK of the same exchange
  int coop = -1;
  bool resolved = false;
};

class Engine {
 public:
  Engine(const Topology& topo, const SimConfig& cfg);
  Metrics run();

 private:
  // mac_channel.cpp
  void schedule(Time t, int priority, std::function<void()> fn);
  int transmit(int k, Frame f);
  void on_sense(int tx, bool on);
  void on_tx_end(int tx);
  bool clean(int r, const Tx& t, const std::vector<int>& overlapping) const;
  bool exempt(int r, const Tx& t, const Tx& v) const;
  /// End of the arrival at r of a transmission by `sender` now on air, or -1.
  Time arriving_until(int r, int sender) const;
  void medium_changed(int k);
  bool medium_idle(int k) const;
  void start_countdown(int k);
  void freeze(int k);
  void on_boundary(int k, std::uint64_t gen);
  void on_expire(int k, std::uint64_t gen);
  void draw_backoff(int k, bool success);
  void account_busy(int k, bool on, bool failed);
  void set_nav(int k, Time until, const Tx& t);

  // mac_protocol.cpp
  void initiate(int k);
  bool choose_head(int k);
  void on_receive(int r, int tx, bool ok);
  void rx_rts(int r, const Tx& t);
  void rx_rtc(int r, const Tx& t);
  void rx_atc(int r, const Tx& t);
  void rx_cts(int r, const Tx& t);
  void rx_data(int r, const Tx& t, bool ok);
  void rx_ack(int r, const Tx& t, bool ok);
  void rx_relayed(int r, const Tx& t);
  void try_atc(int q, int coop);
  void rtc_timeout(int coop);
  void leg_done(int coop, FrameKind kind);
  void data_leg_done(int coop) { leg_done(coop, FrameKind::Data); }
  void ack_leg_done(int coop) { leg_done(coop, FrameKind::Ack); }
  void send_uplink_data(int k, int coop);
  void send_ack(int d, int coop, int to);
  void expect(int k, int coop, Time at, int from, std::function<bool()> satisfied);
  void finish(int k, int coop, bool success);
  void release(int k, int coop);
  void engage(int k, int coop);
  void watchdog(int coop);
  bool holds_frame_for(int q, int dest);
  bool decodable(int r, const Coop& c, const std::vector<int>& components, std::size_t j) const;
  void deliver(int dest, const Tx& data, int coop);
  void process_ack(int s, const Frame& ack, int coop);
  void record_leg(Leg& leg, int tx, bool ok);
  void relay_leg(int coop, FrameKind kind);
  void dest_wait(int r, int coop, const Tx& cts);
  void phy_check(const Coop& c);
  double air(FrameKind k, const Coop& c, bool relayed = false) const;
  double duration_to(FrameKind k, const Coop& c, bool relayed = false) const;

  Time now() const { return now_; }
  Coop& coop(int id) { return coops_[static_cast<std::size_t>(id)]; }
  bool extended() const { return cfg_.mode == Mode::Extended || cfg_.mode == Mode::ExtendedPlus; }
  double uniform() { return unit_(rng_); }

  const Topology& topo_;
  SimConfig cfg_;
  const Timing& tm_;
  Time end_ = 0;
  Time now_ = 0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::vector<Station> st_;
  std::deque<Tx> txs_;  // deque: references stay valid across transmit()
  std::vector<int> recent_;
  Time max_air_ = 0;
  std::deque<Coop> coops_;
  std::vector<Delivery> deliveries_;
  std::map<std::pair<int, int>, std::vector<std::size_t>> open_deliveries_;  // (sender, dest)
  Metrics m_;
  std::uint64_t two_way_broadcasts_ = 0;
};

}  // namespace trean::mac::detail
