// Channel model and backoff: transmissions, carrier sense, NAV,
// reception outcomes and the slotted countdown.

#include <algorithm>

#include "mac_engine.hpp"

namespace trean::mac::detail {

void Engine::schedule(Time t, int priority, std::function<void()> fn) {
  queue_.push(Event{t, priority, seq_++, std::move(fn)});
}

int Engine::transmit(int k, Frame f) {
  Tx t;
  t.id = static_cast<int>(txs_.size());
  t.sender = k;
  t.start = now_;
  t.end = now_ + to_ns(f.airtime_us);
  t.frame = std::move(f);
  st_[k].tx_until = t.end;
  m_.sent[static_cast<int>(t.frame.kind)]++;
  if (cfg_.record_log) m_.log.push_back({now_, k, t.frame, 0, false});
  max_air_ = std::max(max_air_, t.end - t.start);
  const int id = t.id;
  const Time d = to_ns(tm_.delta);
  schedule(t.start + d, kSense, [this, id] { on_sense(id, true); });
  schedule(t.end + d, kSense, [this, id] { on_tx_end(id); });
  txs_.push_back(std::move(t));
  recent_.push_back(id);
  return id;
}

void Engine::account_busy(int k, bool on, bool failed) {
  auto& s = st_[k];
  auto& ch = m_.channel[static_cast<std::size_t>(k)];
  const double dt = static_cast<double>(now_ - (on ? s.last_change : s.busy_start)) * 1e-9;
  if (on) {
    ch.idle_s += dt;
    s.busy_start = now_;
    s.busy_failed = false;
  } else {
    (failed ? ch.collision_s : ch.success_s) += dt;
    s.last_change = now_;
  }
}

void Engine::on_sense(int id, bool on) {
  const Tx& t = txs_[static_cast<std::size_t>(id)];
  auto touch = [&](int k) {
    auto& s = st_[k];
    if (on) {
      if (s.busy++ == 0) account_busy(k, true, false);
    } else {
      if (!t.ok_at_ra) s.busy_failed = true;
      if (--s.busy == 0) {
        account_busy(k, false, s.busy_failed);
        s.idle_since = now_;
      }
    }
    medium_changed(k);
  };
  touch(t.sender);
  for (int k : topo_.sense[t.sender]) touch(k);
}

bool Engine::exempt(int r, const Tx& t, const Tx& v) const {
  const int c = t.frame.coop;
  if (c < 0 || v.frame.coop != c) return false;
  const Coop& co = coops_[static_cast<std::size_t>(c)];
  const bool t_up = t.frame.ra == co.B && t.sender != co.B;
  const bool v_up = v.frame.ra == co.B && v.sender != co.B;
  const bool same_kind = t.frame.kind == v.frame.kind &&
                         (t.frame.kind == FrameKind::Data || t.frame.kind == FrameKind::Ack);
  if (r == co.B) {
    if (t.frame.kind == FrameKind::Atc && v.frame.kind == FrameKind::Cpp) return true;
    return t_up && v_up && same_kind;
  }
  // Overhearing a close neighbour through the far end of the superposition.
  if (t_up && v_up && same_kind) {
    return topo_.is_close(t.sender, r) && topo_.dist(v.sender, r) > topo_.ranges.r_c;
  }
  return false;
}

bool Engine::clean(int r, const Tx& t, const std::vector<int>& cand) const {
  if (r == t.sender) return false;
  const Time d = to_ns(tm_.delta);
  for (int id : cand) {
    const Tx& v = txs_[static_cast<std::size_t>(id)];
    if (v.id == t.id) continue;
    if (v.sender == r) {
      if (v.start < t.end + d && t.start + d < v.end) return false;  // half duplex
      continue;
    }
    if (v.sender == t.sender) continue;
    if (!(v.start < t.end && t.start < v.end)) continue;
    if (!topo_.in_interference(v.sender, r)) continue;
    if (!exempt(r, t, v)) return false;
  }
  return true;
}

void Engine::on_tx_end(int id) {
  const Time d = to_ns(tm_.delta);
  Tx& t = txs_[static_cast<std::size_t>(id)];
  std::vector<int> cand;
  for (int v : recent_) {
    const Tx& u = txs_[static_cast<std::size_t>(v)];
    if (u.start < t.end + d && u.end + d > t.start) cand.push_back(v);
  }
  const int ra = t.frame.ra;
  if (ra >= 0) t.ok_at_ra = topo_.in_comm(t.sender, ra) && clean(ra, t, cand);
  on_sense(id, false);
  for (int r : topo_.comm[t.sender]) {
    const bool ok = clean(r, t, cand);
    schedule(now_, kReceive, [this, r, id, ok] { on_receive(r, id, ok); });
  }
  // Drop transmissions that can no longer overlap anything still on air.
  const Time horizon = now_ - max_air_ - 4 * d;
  std::erase_if(recent_, [&](int v) { return txs_[static_cast<std::size_t>(v)].end < horizon; });
}

Time Engine::arriving_until(int r, int sender) const {
  if (!topo_.in_comm(sender, r)) return -1;
  const Time d = to_ns(tm_.delta);
  for (int id : recent_) {
    const Tx& u = txs_[static_cast<std::size_t>(id)];
    if (u.sender == sender && u.start + d <= now_ && now_ < u.end + d) return u.end + d;
  }
  return -1;
}

void Engine::set_nav(int k, Time until, const Tx& t) {
  auto& s = st_[k];
  if (cfg_.record_log && t.frame.kind == FrameKind::Data) {
    m_.log.push_back({now_, k, t.frame, until, true});
  }
  if (until <= s.nav) return;
  s.nav = until;
  schedule(until, kSense, [this, k] { medium_changed(k); });
  medium_changed(k);
}

// Countdown.

bool Engine::medium_idle(int k) const {
  const auto& s = st_[k];
  return s.has_traffic && s.busy == 0 && s.nav <= now_ && s.coop < 0 && s.tx_until <= now_;
}

void Engine::medium_changed(int k) {
  const bool idle = medium_idle(k);
  auto& s = st_[k];
  if (s.counting && !idle) {
    freeze(k);
  } else if (!s.counting && idle) {
    start_countdown(k);
  }
}

void Engine::start_countdown(int k) {
  auto& s = st_[k];
  const Time slot = to_ns(tm_.slot);
  const Time origin = std::max(s.idle_since, s.nav) + to_ns(tm_.difs);
  Time b = origin;
  if (now_ > origin) b = origin + (now_ - origin + slot - 1) / slot * slot;
  s.counting = true;
  s.started = false;
  s.b0 = b;
  const auto gen = ++s.gen;
  schedule(b, kTimer, [this, k, gen] { on_boundary(k, gen); });
}

void Engine::freeze(int k) {
  auto& s = st_[k];
  s.counting = false;
  ++s.gen;
  if (!s.started || now_ <= s.b0) return;
  const Time slot = to_ns(tm_.slot);
  const int passed = static_cast<int>((now_ - s.b0 - 1) / slot);
  s.counter = std::max(0, s.counter - passed);
}

void Engine::on_boundary(int k, std::uint64_t gen) {
  auto& s = st_[k];
  if (s.gen != gen) return;
  s.started = true;
  // A busy period counts as one generalized slot for a frozen counter.
  if (!s.fresh && s.counter > 0) s.counter--;
  s.fresh = false;
  if (s.counter == 0) {
    on_expire(k, gen);
    return;
  }
  schedule(s.b0 + static_cast<Time>(s.counter) * to_ns(tm_.slot), kTimer,
           [this, k, gen] { on_expire(k, gen); });
}

void Engine::on_expire(int k, std::uint64_t gen) {
  auto& s = st_[k];
  if (s.gen != gen) return;
  s.counting = false;
  ++s.gen;
  s.counter = 0;
  initiate(k);
}

void Engine::draw_backoff(int k, bool success) {
  auto& s = st_[k];
  s.stage = success ? 0 : std::min(s.stage + 1, tm_.m);
  std::uniform_int_distribution<int> pick(0, tm_.window(s.stage) - 1);
  s.counter = pick(rng_);
  s.fresh = true;
}

}  // namespace trean::mac::detail
