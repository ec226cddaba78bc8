// Data and acknowledgement phases, delivery bookkeeping and exchange teardown.

#include <algorithm>

#include "mac_engine.hpp"

namespace trean::mac::detail {

void Engine::on_receive(int r, int id, bool ok) {
  const Tx& t = txs_[static_cast<std::size_t>(id)];
  if (t.frame.ra == r && !ok) m_.lost[static_cast<int>(t.frame.kind)]++;
  const int cid = t.frame.coop;
  const bool member = st_[r].coop == cid;
  switch (t.frame.kind) {
    case FrameKind::Rts:
    case FrameKind::Cpp:
      if (!ok) return;
      if (t.frame.kind == FrameKind::Rts && r == t.frame.ra) {
        rx_rts(r, t);
      } else if (!member) {
        set_nav(r, t.end + to_ns(t.frame.duration_us), t);
      }
      return;
    case FrameKind::Rtc:
      if (ok) rx_rtc(r, t);
      return;
    case FrameKind::Atc:
      if (ok) rx_atc(r, t);
      return;
    case FrameKind::Cts:
      if (ok) rx_cts(r, t);
      return;
    case FrameKind::Data:
      rx_data(r, t, ok);
      return;
    case FrameKind::Ack:
      rx_ack(r, t, ok);
      return;
  }
}

void Engine::send_uplink_data(int k, int id) {
  Coop& c = coop(id);
  if (st_[k].coop != id) return;
  auto& s = st_[k];
  OutFrame out;
  if (k == c.A) {
    out = c.frame_A;
  } else {
    out = {c.partner_dest, c.B, 0};
    auto& rq = s.retransmit[c.partner_dest];
    if (!rq.empty()) {
      out.id = rq.front();
      rq.pop_front();
    } else {
      out.id = s.next_id++;
    }
    c.frame_P = out;
  }
  Frame f;
  f.kind = FrameKind::Data;
  f.subtype = c.subtype;
  f.ra = c.B;
  f.ta = k;
  f.na = out.dest;
  f.frame_id = out.id;
  f.coop = id;
  f.airtime_us = air(FrameKind::Data, c);
  f.duration_us = duration_to(FrameKind::Data, c);
  const int tx = transmit(k, std::move(f));
  c.phase = Phase::Data;
  c.data.tx.push_back(tx);
  c.data.ok.push_back(-1);
  c.known[k].push_back(tx);
  auto& un = s.unacked[out.dest];
  if (std::find(un.begin(), un.end(), out.id) == un.end()) un.push_back(out.id);
  while (un.size() > 3) un.pop_front();
  const double wait = duration_to(FrameKind::Data, c) + tm_.sifs + 2 * tm_.delta + cfg_.tiny_delay_us;
  expect(k, id, txs_[tx].end + to_ns(wait), c.B, [] { return false; });
}

void Engine::record_leg(Leg& leg, int tx, bool ok) {
  for (std::size_t i = 0; i < leg.tx.size(); ++i) {
    if (leg.tx[i] == tx && leg.ok[i] < 0) {
      leg.ok[i] = ok ? 1 : 0;
      leg.arrived++;
    }
  }
}

void Engine::rx_data(int r, const Tx& t, bool ok) {
  const int id = t.frame.coop;
  Coop& c = coop(id);
  const bool member = st_[r].coop == id;
  if (!member) {
    if (ok) set_nav(r, t.end + to_ns(t.frame.duration_us), t);
    return;
  }
  if (c.special) {
    if (r != c.B) return;
    if (!ok) {
      release(r, id);
      return;
    }
    deliver(r, t, id);
    const int to = t.sender;
    schedule(now_ + to_ns(tm_.sifs), kTimer, [this, r, id, to] { send_ack(r, id, to); });
    return;
  }
  if (!t.frame.components.empty()) {
    if (ok) rx_relayed(r, t);
    return;
  }
  if (r == c.B) {
    record_leg(c.data, t.id, ok);
  } else if (ok) {
    c.known[r].push_back(t.id);
  }
}


bool Engine::decodable(int r, const Coop& c, const std::vector<int>& components, std::size_t j) const {
  const auto it = c.known.find(r);
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i == j) continue;
    if (it == c.known.end()) return false;
    if (std::find(it->second.begin(), it->second.end(), components[i]) == it->second.end()) return false;
  }
  return true;
}

void Engine::rx_relayed(int r, const Tx& t) {
  const int id = t.frame.coop;
  Coop& c = coop(id);
  const auto& comps = t.frame.components;
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const Tx& u = txs_[static_cast<std::size_t>(comps[j])];
    if (u.frame.na != r) continue;
    if (!decodable(r, c, comps, j)) {
      m_.lost[static_cast<int>(FrameKind::Data)]++;
      if (r != c.A && r != c.partner) release(r, id);
      continue;
    }
    deliver(r, u, id);
    const double tiny = c.two_way && extended() ? uniform() * cfg_.tiny_delay_us : 0.0;
    const int to = u.sender;
    schedule(now_ + to_ns(tm_.sifs + tiny), kTimer, [this, r, id, to] { send_ack(r, id, to); });
  }
}

void Engine::leg_done(int id, FrameKind kind) {
  Coop& c = coop(id);
  if (st_[c.B].coop != id) return;
  Leg& leg = kind == FrameKind::Data ? c.data : c.ack;
  Time last = now_;
  for (std::size_t i = 0; i < leg.tx.size(); ++i) {
    const Tx& u = txs_[static_cast<std::size_t>(leg.tx[i])];
    if (leg.ok[i] < 0) {
      const Time until = arriving_until(c.B, u.sender);
      if (until > now_) {
        schedule(until, kTimer, [this, id, kind] { leg_done(id, kind); });
        return;
      }
    }
    if (leg.ok[i] == 1) last = std::max(last, u.end + to_ns(tm_.delta));
  }
  if (std::find(leg.ok.begin(), leg.ok.end(), 1) == leg.ok.end()) {
    release(c.B, id);
    return;
  }
  schedule(last + to_ns(tm_.sifs), kTimer, [this, id, kind] { relay_leg(id, kind); });
}

void Engine::relay_leg(int id, FrameKind kind) {
  Coop& c = coop(id);
  if (st_[c.B].coop != id) return;
  const Leg& leg = kind == FrameKind::Data ? c.data : c.ack;
  Frame f;
  f.kind = kind;
  f.subtype = c.subtype;
  f.ta = c.B;
  for (std::size_t i = 0; i < leg.tx.size(); ++i) {
    if (leg.ok[i] == 1) f.components.push_back(leg.tx[i]);
  }
  if (!c.two_way) f.ra = kind == FrameKind::Data ? c.C : c.A;
  f.coop = id;
  f.airtime_us = air(kind, c, true);
  f.duration_us = duration_to(kind, c, true);
  const auto comps = f.components.size();
  const int tx = transmit(c.B, std::move(f));
  if (kind == FrameKind::Ack) {
    c.phase = Phase::Done;
    release(c.B, id);
    return;
  }
  c.phase = Phase::Ack;
  if (c.two_way && comps == 2) {
    ++two_way_broadcasts_;
    if (cfg_.phy_check_interval > 0 && two_way_broadcasts_ % static_cast<std::uint64_t>(cfg_.phy_check_interval) == 0) {
      phy_check(c);
    }
  }
  c.ack.expected = static_cast<int>(comps);
  const double tiny = c.two_way && extended() ? cfg_.tiny_delay_us : 0.0;
  const double wait = tm_.sifs + 2 * tm_.delta + tiny + air(FrameKind::Ack, c);
  schedule(txs_[tx].end + to_ns(wait), kTimer, [this, id] { ack_leg_done(id); });
}

void Engine::send_ack(int d, int id, int to) {
  Coop& c = coop(id);
  if (st_[d].coop != id) return;
  const auto& w = st_[d].window[to];
  Frame f;
  f.kind = FrameKind::Ack;
  f.subtype = c.subtype;
  f.ra = c.special ? to : c.B;
  f.ta = d;
  f.na = to;
  f.ack_ids.assign(w.begin(), w.end());
  f.coop = id;
  f.airtime_us = air(FrameKind::Ack, c);
  f.duration_us = duration_to(FrameKind::Ack, c);
  const int tx = transmit(d, std::move(f));
  if (!c.special) {
    c.ack.tx.push_back(tx);
    c.ack.ok.push_back(-1);
    c.known[d].push_back(tx);
  }
  if (d != c.A && d != c.partner) release(d, id);
}

void Engine::rx_ack(int r, const Tx& t, bool ok) {
  const int id = t.frame.coop;
  Coop& c = coop(id);
  if (st_[r].coop != id) {
    if (ok && t.frame.duration_us > 0.0) set_nav(r, t.end + to_ns(t.frame.duration_us), t);
    return;
  }
  if (c.special) {
    if (r != c.A || !ok) return;
    process_ack(r, t.frame, id);
    finish(r, id, c.acked[r]);
    return;
  }
  const auto& comps = t.frame.components;
  if (comps.empty()) {
    if (r == c.B) {
      record_leg(c.ack, t.id, ok);
    } else if (ok) {
      c.known[r].push_back(t.id);
    }
    return;
  }
  if (!ok) return;
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const Tx& u = txs_[static_cast<std::size_t>(comps[j])];
    if (u.frame.na != r) continue;
    if (decodable(r, c, comps, j)) {
      process_ack(r, u.frame, id);
    } else {
      m_.lost[static_cast<int>(FrameKind::Ack)]++;
    }
    finish(r, id, c.acked[r]);
  }
}

void Engine::process_ack(int s, const Frame& ack, int id) {
  Coop& c = coop(id);
  const int d = ack.ta;
  auto& st = st_[s];
  auto& un = st.unacked[d];
  auto& open = open_deliveries_[{s, d}];
  for (const auto x : un) {
    if (std::find(ack.ack_ids.begin(), ack.ack_ids.end(), x) == ack.ack_ids.end()) {
      const bool head = st.head_valid && st.head.dest == d && st.head.id == x;
      if (!head) st.retransmit[d].push_back(x);
      continue;
    }
    if ((s == c.A && x == c.frame_A.id) || (s == c.partner && x == c.frame_P.id)) c.acked[s] = true;
    for (auto it = open.begin(); it != open.end(); ++it) {
      Delivery& dl = deliveries_[*it];
      if (dl.id != x) continue;
      dl.acked = true;
      dl.immediate = dl.coop == id;
      dl.resolved = true;
      m_.ack_resolved++;
      open.erase(it);
      break;
    }
  }
  un.clear();
}

void Engine::deliver(int dest, const Tx& data, int id) {
  const Coop& c = coop(id);
  const int s = data.sender;
  const auto fid = data.frame.frame_id;
  auto& w = st_[dest].window[s];
  if (std::find(w.begin(), w.end(), fid) != w.end()) return;  // duplicate
  w.push_front(fid);
  if (w.size() > 3) {
    const auto old = w.back();
    w.pop_back();
    auto& open = open_deliveries_[{s, dest}];
    for (auto it = open.begin(); it != open.end(); ++it) {
      Delivery& dl = deliveries_[*it];
      if (dl.id != old) continue;
      dl.resolved = true;
      m_.ack_final_unacked++;
      m_.ack_resolved++;
      open.erase(it);
      break;
    }
  }
  const double bits = (c.special ? 1.0 : 2.0) * tm_.payload_bits();
  m_.delivered_bits[static_cast<std::size_t>(s)] += bits;
  m_.total_bits += bits;
  if (c.special) {
    m_.direct_delivered++;
    return;
  }
  m_.data_delivered++;
  deliveries_.push_back({s, dest, fid, false, false, id, false});
  coop(id).deliveries.push_back(deliveries_.size() - 1);
  open_deliveries_[{s, dest}].push_back(deliveries_.size() - 1);
}

void Engine::finish(int k, int id, bool success) {
  Coop& c = coop(id);
  if (st_[k].coop != id) return;
  auto& s = st_[k];
  if (k == c.A) {
    if (success) {
      s.head_valid = false;
    } else {
      m_.timeouts++;
    }
    draw_backoff(k, success);
  } else if (k == c.partner) {
    if (success) {
      draw_backoff(k, true);
    } else if (c.frame_P.id != 0) {
      auto& un = s.unacked[c.partner_dest];
      std::erase(un, c.frame_P.id);
      s.retransmit[c.partner_dest].push_front(c.frame_P.id);
    }
  }
  if (k == c.A || k == c.partner) {
    for (auto idx : c.deliveries) {
      const Delivery& dl = deliveries_[idx];
      if (dl.sender == k && !dl.immediate) m_.ack_immediate_lost++;
    }
  }
  release(k, id);
}

void Engine::dest_wait(int r, int id, const Tx& cts) {
  const Coop& c = coop(id);
  expect(r, id, cts.end + to_ns(duration_to(FrameKind::Cts, c)), c.B, [] { return false; });
}

void Engine::watchdog(int id) {
  Coop& c = coop(id);
  c.phase = Phase::Done;
  const auto engaged = c.engaged;
  for (int k : engaged) {
    if (st_[k].coop == id) finish(k, id, false);
  }
}

}  // namespace trean::mac::detail
