#pragma once

// 802.11a MAC/PHY timing shared by the analytic model and the simulator.
// All durations are in microseconds.

#include <cmath>

namespace trean {

struct FrameSizes {  // bytes, MAC header and FCS included
  int rts = 26;           // standard RTS plus the NA address
  int rtc = 32;
  int rtc_extended = 45;  // two EA addresses and the TS field
  int atc = 26;
  int cts = 20;
  int cts_extended = 26;  // extended-plus CTS carries one EA
  int ack = 28;           // RA plus three 4-byte frame IDs
  int data_overhead = 28;
  int csma_rts = 20;
  int csma_cts = 14;
  int csma_ack = 14;
};

struct Timing {
  double slot = 9.0;
  double sifs = 16.0;
  double difs = 34.0;
  double delta = 1.0;          // propagation delay
  double plcp = 20.0;          // preamble plus SIGNAL field
  double symbol = 4.0;
  double control_rate = 6.0;   // Mb/s
  double data_rate = 54.0;     // Mb/s
  double payload_bytes = 1500.0;
  int w0 = 16;
  int m = 6;
  FrameSizes sizes;

  /// PLCP + ceil((16 service + 8 bytes + 6 tail) / bits per symbol) symbols.
  double airtime(double bytes, double rate_mbps) const {
    const double bits_per_symbol = rate_mbps * symbol;
    return plcp + symbol * std::ceil((16.0 + 8.0 * bytes + 6.0) / bits_per_symbol);
  }
  double control(int bytes) const { return airtime(bytes, control_rate); }

  double rts() const { return control(sizes.rts); }
  double rtc(bool extended = false) const {
    return control(extended ? sizes.rtc_extended : sizes.rtc);
  }
  double atc() const { return control(sizes.atc); }
  double cts(bool extended = false) const {
    return control(extended ? sizes.cts_extended : sizes.cts);
  }
  double ack() const { return control(sizes.ack); }
  double data() const { return airtime(payload_bytes + sizes.data_overhead, data_rate); }
  /// Superposed frames carry one extra symbol for the unaligned overlap.
  double bdata() const { return data() + symbol; }
  double back() const { return ack() + symbol; }

  double csma_rts() const { return control(sizes.csma_rts); }
  double csma_cts() const { return control(sizes.csma_cts); }
  double csma_ack() const { return control(sizes.csma_ack); }

  double payload_bits() const { return 8.0 * payload_bytes; }
  int window(int stage) const { return w0 << (stage < m ? stage : m); }

  /// Channel time of a complete two-way cooperation, closed by DIFS.
  double trean_success(bool extended = false) const {
    const double hop = sifs + delta;
    return rts() + hop + rtc(extended) + hop + atc() + hop + cts() + hop + bdata() + hop +
           bdata() + hop + back() + hop + back() + difs + delta;
  }
  double trean_collision() const { return rts() + difs + delta; }
  double csma_success() const {
    const double hop = sifs + delta;
    return csma_rts() + hop + csma_cts() + hop + data() + hop + csma_ack() + difs + delta;
  }
  double csma_collision() const { return csma_rts() + difs + delta; }
};

}  // namespace trean
