// Traffic selection and the handshake: RTS, RTC, ATC/CPP and CTS.

#include <algorithm>

#include "mac_engine.hpp"

namespace trean::mac::detail {

double Engine::air(FrameKind k, const Coop& c, bool relayed) const {
  (void)relayed;
  const bool csma = c.subtype == Subtype::Csma;
  const bool ext = c.subtype == Subtype::Extended || c.subtype == Subtype::ExtendedPlus;
  switch (k) {
    case FrameKind::Rts:
    case FrameKind::Cpp:
      return csma ? tm_.csma_rts() : tm_.rts();
    case FrameKind::Rtc:
      return tm_.rtc(ext);
    case FrameKind::Atc:
      return tm_.atc();
    case FrameKind::Cts:
      if (csma) return tm_.csma_cts();
      return tm_.cts(c.subtype == Subtype::ExtendedPlus && c.two_way);
    case FrameKind::Data:
      return c.two_way ? tm_.bdata() : tm_.data();
    case FrameKind::Ack:
      if (csma) return tm_.csma_ack();
      return c.two_way ? tm_.back() : tm_.ack();
  }
  return 0.0;
}

double Engine::duration_to(FrameKind k, const Coop& c, bool relayed) const {
  const double h = tm_.sifs + tm_.delta;
  const double d = tm_.delta;
  if (c.special) {
    const double cts = air(FrameKind::Cts, c), data = tm_.data(), ack = air(FrameKind::Ack, c);
    switch (k) {
      case FrameKind::Rts: return 3 * h + cts + data + ack + d;
      case FrameKind::Cts: return 2 * h + data + ack + d;
      case FrameKind::Data: return h + ack + d;
      default: return 0.0;
    }
  }
  const bool ext = c.subtype == Subtype::Extended || c.subtype == Subtype::ExtendedPlus;
  const double wait = ext ? cfg_.n_ea * tm_.slot : 0.0;
  const double tiny = ext && c.two_way ? cfg_.tiny_delay_us : 0.0;
  const double rtc = air(FrameKind::Rtc, c), atc = air(FrameKind::Atc, c), cts = air(FrameKind::Cts, c);
  const double bd = air(FrameKind::Data, c), bk = air(FrameKind::Ack, c);
  switch (k) {
    case FrameKind::Rts:
    case FrameKind::Cpp: return 4 * h + rtc + wait + atc + cts;
    case FrameKind::Rtc: return 3 * h + wait + atc + cts;
    case FrameKind::Atc: return 2 * h + cts;
    case FrameKind::Cts: return h + tiny + bd + h + bd + h + bk + h + bk + d;
    case FrameKind::Data: return relayed ? h + bk + h + bk + d : h + bd + h + bk + h + bk + d;
    case FrameKind::Ack: return relayed ? 0.0 : h + bk + d;
  }
  return 0.0;
}

bool Engine::holds_frame_for(int q, int dest) {
  const auto& flows = cfg_.traffic.flows;
  const auto& back = cfg_.traffic.backward_flows;
  if ((!flows.empty() || !back.empty()) && std::find(flows.begin(), flows.end(), std::pair{q, dest}) == flows.end() &&
      std::find(back.begin(), back.end(), std::pair{q, dest}) == back.end()) {
    return false;
  }
  return uniform() < cfg_.traffic.atc_prob;
}

bool Engine::choose_head(int k) {
  auto& s = st_[k];
  if (s.head_valid) return true;
  const bool csma = cfg_.mode == Mode::Csma;
  auto route = [&](int d, OutFrame& o) {
    o.relay = -1;
    o.dest = -1;
    const int hops = topo_.hops[k][d];
    if (hops <= 0) return false;
    if (csma || hops == 1) {
      o.dest = hops == 1 ? d : topo_.next_hop[k][d];
      return true;
    }
    o.relay = topo_.next_hop[k][d];
    o.dest = hops == 2 ? d : topo_.next_hop[o.relay][d];
    return true;
  };
  for (auto& [peer, q] : s.retransmit) {
    while (!q.empty()) {
      const auto id = q.front();
      q.pop_front();
      if (route(peer, s.head) && s.head.dest == peer) {
        s.head.id = id;
        s.head_valid = true;
        return true;
      }
    }
  }
  const auto& flows = cfg_.traffic.flows;
  if (!flows.empty()) {
    std::vector<int> dests;
    for (const auto& [a, b] : flows) {
      if (a == k) dests.push_back(b);
    }
    if (dests.empty()) return false;
    std::uniform_int_distribution<std::size_t> pick(0, dests.size() - 1);
    if (!route(dests[pick(rng_)], s.head)) return false;
  } else {
    const auto& one = topo_.comm[k];
    const auto& two = topo_.two_hop[k];
    if (one.empty()) return false;
    if (csma || two.empty() || uniform() < cfg_.traffic.one_hop_fraction) {
      std::uniform_int_distribution<std::size_t> pick(0, one.size() - 1);
      s.head = {one[pick(rng_)], -1, 0};
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, two.size() - 1);
      const auto& r = two[pick(rng_)];
      s.head = {r.dest, r.relay, 0};
    }
  }
  s.head.id = s.next_id++;
  s.head_valid = true;
  return true;
}

void Engine::engage(int k, int id) {
  st_[k].coop = id;
  coop(id).engaged.push_back(k);
  medium_changed(k);
}

void Engine::release(int k, int id) {
  if (st_[k].coop != id) return;
  st_[k].coop = -1;
  medium_changed(k);
}

void Engine::expect(int k, int id, Time at, int from, std::function<bool()> satisfied) {
  schedule(at, kTimer, [this, k, id, from, satisfied = std::move(satisfied)]() mutable {
    if (st_[k].coop != id || satisfied()) return;
    const Time until = arriving_until(k, from);
    if (until > now_) {
      expect(k, id, until, from, std::move(satisfied));
      return;
    }
    finish(k, id, false);
  });
}

void Engine::initiate(int k) {
  if (!choose_head(k)) {
    st_[k].has_traffic = false;
    return;
  }
  const auto& head = st_[k].head;
  Coop c;
  c.id = static_cast<int>(coops_.size());
  c.A = k;
  c.frame_A = head;
  if (cfg_.mode == Mode::Csma || head.relay < 0) {
    c.special = true;
    c.subtype = cfg_.mode == Mode::Csma ? Subtype::Csma : Subtype::Special;
    c.B = head.dest;
  } else {
    c.B = head.relay;
    c.C = head.dest;
    c.subtype = cfg_.mode == Mode::Basic      ? Subtype::Basic
                : cfg_.mode == Mode::Extended ? Subtype::Extended
                                              : Subtype::ExtendedPlus;
  }
  const int id = c.id;
  coops_.push_back(std::move(c));
  engage(k, id);
  m_.exchanges++;

  const Coop& co = coop(id);
  Frame f;
  f.kind = FrameKind::Rts;
  f.subtype = co.subtype;
  f.ra = co.B;
  f.ta = k;
  f.na = co.special ? -1 : co.C;
  f.coop = id;
  f.airtime_us = air(FrameKind::Rts, co);
  f.duration_us = duration_to(FrameKind::Rts, co);
  const int tx = transmit(k, std::move(f));
  coop(id).rts_tx = tx;
  expect(k, id, txs_[tx].end + to_ns(cfg_.rts_timer()), co.B, [this, id] {
    const Coop& c = coop(id);
    return c.special ? c.cts_heard : c.rtc_heard;
  });
  const double bound = (co.special ? tm_.trean_success() : tm_.trean_success(true)) +
                       cfg_.rtc_timer() + cfg_.n_ea * tm_.slot + 2 * cfg_.tiny_delay_us + 500.0;
  schedule(now_ + to_ns(bound), kTimer, [this, id] { watchdog(id); });
}

void Engine::rx_rts(int r, const Tx& t) {
  const int id = t.frame.coop;
  auto& s = st_[r];
  if (s.coop >= 0 || s.nav > now_ || s.tx_until > now_) return;
  if (cfg_.responder_cca && cfg_.mode != Mode::Csma && s.busy > 0) return;
  Coop& c = coop(id);
  if (c.phase != Phase::Handshake || st_[c.A].coop != id) return;
  engage(r, id);
  const Time sifs = to_ns(tm_.sifs);
  if (c.special) {
    schedule(now_ + sifs, kTimer, [this, r, id] {
      if (st_[r].coop != id) return;
      const Coop& c = coop(id);
      Frame f;
      f.kind = FrameKind::Cts;
      f.subtype = c.subtype;
      f.ra = c.A;
      f.ta = r;
      f.coop = id;
      f.airtime_us = air(FrameKind::Cts, c);
      f.duration_us = duration_to(FrameKind::Cts, c);
      const int tx = transmit(r, std::move(f));
      const double wait = tm_.sifs + 2 * tm_.delta + tm_.data();
      expect(r, id, txs_[tx].end + to_ns(wait), c.A, [this, id] { return coop(id).phase != Phase::Handshake; });
    });
    return;
  }

  c.qualified = {c.C};
  if (extended()) {
    std::vector<int> pool;
    for (int x : topo_.close[c.C]) {
      if (x != c.A && x != r && topo_.in_comm(r, x)) pool.push_back(x);
    }
    std::shuffle(pool.begin(), pool.end(), rng_);
    for (std::size_t i = 0; i < pool.size() && static_cast<int>(i) < cfg_.n_ea; ++i) c.qualified.push_back(pool[i]);
    std::vector<int> numbers(static_cast<std::size_t>(cfg_.n_ea) + 1);
    for (std::size_t i = 0; i < numbers.size(); ++i) numbers[i] = static_cast<int>(i);
    std::shuffle(numbers.begin(), numbers.end(), rng_);
    c.seq.assign(numbers.begin(), numbers.begin() + static_cast<std::ptrdiff_t>(c.qualified.size()));
  } else {
    c.seq = {0};
  }
  schedule(now_ + sifs, kTimer, [this, r, id] {
    if (st_[r].coop != id) return;
    const Coop& c = coop(id);
    Frame f;
    f.kind = FrameKind::Rtc;
    f.subtype = c.subtype;
    f.ra = c.C;
    f.ta = r;
    f.na = c.A;
    f.ea.assign(c.qualified.begin() + 1, c.qualified.end());
    if (extended()) f.ts = c.seq;
    f.coop = id;
    f.airtime_us = air(FrameKind::Rtc, c);
    f.duration_us = duration_to(FrameKind::Rtc, c);
    const int tx = transmit(r, std::move(f));
    schedule(txs_[tx].end + to_ns(cfg_.rtc_timer()), kTimer, [this, id] { rtc_timeout(id); });
  });
}

void Engine::rx_rtc(int r, const Tx& t) {
  const int id = t.frame.coop;
  Coop& c = coop(id);
  if (r == c.A) {
    if (st_[r].coop != id) return;
    c.rtc_heard = true;
    if (cfg_.cpp_enabled) {
      schedule(now_ + to_ns(tm_.sifs), kTimer, [this, id] {
        const Coop& c = coop(id);
        if (st_[c.A].coop != id || c.phase != Phase::Handshake) return;
        Frame cpp = txs_[static_cast<std::size_t>(c.rts_tx)].frame;
        cpp.kind = FrameKind::Cpp;
        transmit(c.A, std::move(cpp));
      });
    }
    const double wait = cfg_.rtc_timer() + tm_.sifs + cfg_.n_ea * tm_.slot + tm_.cts(true) + 2 * tm_.delta;
    expect(r, id, t.end + to_ns(wait), c.B, [this, id] { return coop(id).cts_heard; });
    return;
  }
  const auto it = std::find(c.qualified.begin(), c.qualified.end(), r);
  const Time nav = t.end + to_ns(t.frame.duration_us);
  if (it == c.qualified.end()) {
    set_nav(r, nav, t);
    return;
  }
  const auto& s = st_[r];
  if (s.coop >= 0 || s.nav > now_ || s.tx_until > now_) return;
  int dest = -1;
  if (c.subtype == Subtype::ExtendedPlus) {
    std::vector<int> cand{c.A};
    for (int x : topo_.close[c.A]) {
      if (x != r && x != c.B && topo_.in_comm(c.B, x)) cand.push_back(x);
    }
    for (int x : cand) {
      if (holds_frame_for(r, x)) {
        dest = x;
        break;
      }
    }
  } else if (holds_frame_for(r, c.A)) {
    dest = c.A;
  }
  if (dest < 0 && r != c.C) {
    set_nav(r, nav, t);
    return;
  }
  engage(r, id);
  if (dest < 0) {  // stays as the destination of the initiator's frame
    const double wait = cfg_.rtc_timer() + tm_.sifs + cfg_.n_ea * tm_.slot + tm_.cts(true) + 2 * tm_.delta;
    expect(r, id, t.end + to_ns(wait), c.B, [this, id, r] { return coop(id).got_cts.contains(r); });
    return;
  }
  c.atc_dest[r] = dest;
  c.rtc_end = t.end;
  const int i = c.seq[static_cast<std::size_t>(it - c.qualified.begin())];
  schedule(now_ + to_ns(tm_.sifs + i * tm_.slot), kTimer, [this, r, id] { try_atc(r, id); });
}

void Engine::try_atc(int q, int id) {
  Coop& c = coop(id);
  if (st_[q].coop != id) return;
  bool sensed = c.atc_received || c.cts_sent;
  const Time d = to_ns(tm_.delta);
  for (int v : recent_) {
    if (sensed) break;
    const Tx& u = txs_[static_cast<std::size_t>(v)];
    // Only transmissions started inside the ATC wait window suppress.
    if (u.sender == q || u.start < c.rtc_end || !(u.start + d <= now_ && now_ < u.end + d)) continue;
    if (!topo_.in_sensing(u.sender, q)) continue;
    if (u.frame.kind == FrameKind::Cpp && u.frame.coop == id) continue;
    sensed = true;
  }
  if (sensed) {
    if (q != c.C) release(q, id);
    return;
  }
  const int dest = c.atc_dest[q];
  Frame f;
  f.kind = FrameKind::Atc;
  f.subtype = c.subtype;
  f.ra = c.B;
  f.ta = q;
  f.na = c.A;
  if (dest != c.A) f.ea = {dest};
  f.coop = id;
  f.airtime_us = air(FrameKind::Atc, c);
  f.duration_us = duration_to(FrameKind::Atc, c);
  const int tx = transmit(q, std::move(f));
  const double wait = 2 * (tm_.sifs + tm_.delta) + tm_.cts(true);
  expect(q, id, txs_[tx].end + to_ns(wait), c.B, [this, id, q] {
    const Coop& c = coop(id);
    const auto g = c.got_cts.find(q);
    return g != c.got_cts.end() && (q == c.C || c.partner == q);
  });
}

void Engine::rx_atc(int r, const Tx& t) {
  const int id = t.frame.coop;
  Coop& c = coop(id);
  if (r != c.B) {
    if (st_[r].coop != id) set_nav(r, t.end + to_ns(t.frame.duration_us), t);
    return;
  }
  if (st_[r].coop != id || c.atc_received || c.cts_sent) return;
  c.atc_received = true;
  c.partner = t.sender;
  c.partner_dest = t.frame.ea.empty() ? c.A : t.frame.ea.front();
  c.two_way = true;
  schedule(now_ + to_ns(tm_.sifs), kTimer, [this, id] {
    Coop& c = coop(id);
    if (st_[c.B].coop != id) return;
    c.cts_sent = true;
    Frame f;
    f.kind = FrameKind::Cts;
    f.subtype = c.subtype;
    f.ra = c.A;
    f.ta = c.partner;
    if (c.partner_dest != c.A) f.ea = {c.partner_dest};
    f.coop = id;
    f.airtime_us = air(FrameKind::Cts, c);
    f.duration_us = duration_to(FrameKind::Cts, c);
    const int tx = transmit(c.B, std::move(f));
    m_.two_way++;
    c.data.expected = 2;
    const double tiny = extended() ? cfg_.tiny_delay_us : 0.0;
    const double wait = tm_.sifs + 2 * tm_.delta + tiny + air(FrameKind::Data, c);
    schedule(txs_[tx].end + to_ns(wait), kTimer, [this, id] { data_leg_done(id); });
  });
}

void Engine::rtc_timeout(int id) {
  Coop& c = coop(id);
  if (st_[c.B].coop != id || c.atc_received || c.cts_sent) return;
  for (int q : c.qualified) {
    const Time until = arriving_until(c.B, q);
    if (until > now_) {
      schedule(until, kTimer, [this, id] { rtc_timeout(id); });
      return;
    }
  }
  c.two_way = false;
  c.cts_sent = true;
  Frame f;
  f.kind = FrameKind::Cts;
  f.subtype = Subtype::OneWay;
  f.ra = c.A;
  f.ta = c.B;
  f.coop = id;
  f.airtime_us = air(FrameKind::Cts, c);
  f.duration_us = duration_to(FrameKind::Cts, c);
  const int tx = transmit(c.B, std::move(f));
  m_.one_way++;
  c.data.expected = 1;
  const double wait = tm_.sifs + 2 * tm_.delta + tm_.data();
  schedule(txs_[tx].end + to_ns(wait), kTimer, [this, id] { data_leg_done(id); });
}

void Engine::rx_cts(int r, const Tx& t) {
  const int id = t.frame.coop;
  Coop& c = coop(id);
  const bool member = st_[r].coop == id;
  const Time sifs = to_ns(tm_.sifs);
  if (c.special) {
    if (r != c.A || !member) {
      if (!member) set_nav(r, t.end + to_ns(t.frame.duration_us), t);
      return;
    }
    c.cts_heard = true;
    m_.csma_exchanges++;
    schedule(now_ + sifs, kTimer, [this, id] {
      Coop& c = coop(id);
      if (st_[c.A].coop != id) return;
      Frame f;
      f.kind = FrameKind::Data;
      f.subtype = c.subtype;
      f.ra = c.B;
      f.ta = c.A;
      f.na = c.B;
      f.frame_id = c.frame_A.id;
      f.coop = id;
      f.airtime_us = tm_.data();
      f.duration_us = duration_to(FrameKind::Data, c);
      const int tx = transmit(c.A, std::move(f));
      c.phase = Phase::Data;
      auto& un = st_[c.A].unacked[c.B];
      if (std::find(un.begin(), un.end(), c.frame_A.id) == un.end()) un.push_back(c.frame_A.id);
      while (un.size() > 3) un.pop_front();
      const double wait = tm_.sifs + 2 * tm_.delta + air(FrameKind::Ack, c);
      expect(c.A, id, txs_[tx].end + to_ns(wait), c.B, [] { return false; });
    });
    return;
  }
  if (member) c.got_cts[r] = true;
  const bool up = member && (r == c.A || (c.two_way && r == c.partner));
  if (up) {
    if (r == c.A) c.cts_heard = true;
    const double tiny = c.two_way && extended() ? uniform() * cfg_.tiny_delay_us : 0.0;
    schedule(now_ + sifs + to_ns(tiny), kTimer, [this, r, id] { send_uplink_data(r, id); });
    return;
  }
  if (c.two_way && r == c.partner_dest && r != c.A) {
    if (st_[r].coop < 0 && st_[r].tx_until <= now_) {
      engage(r, id);
      c.got_cts[r] = true;
      dest_wait(r, id, t);
    }
    return;
  }
  if (member) {
    if (r == c.C) {
      dest_wait(r, id, t);
      return;
    }
    release(r, id);
  }
  set_nav(r, t.end + to_ns(t.frame.duration_us), t);
}

}  // namespace trean::mac::detail
