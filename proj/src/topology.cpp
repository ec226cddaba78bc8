#include "trean/topology.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

#include "trean/errors.hpp"
#include "trean/rng.hpp"

namespace trean::mac {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

int Topology::relay_towards(int a, int d) const {
  if (hops[a][d] != 2) return -1;
  return next_hop[a][d];
}

std::vector<std::vector<int>> components(const std::vector<std::vector<int>>& comm) {
  const int n = static_cast<int>(comm.size());
  std::vector<int> label(n, -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    out.emplace_back();
    std::vector<int> stack{s};
    label[s] = static_cast<int>(out.size()) - 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      out.back().push_back(u);
      for (int v : comm[u]) {
        if (label[v] < 0) {
          label[v] = label[s];
          stack.push_back(v);
        }
      }
    }
  }
  return out;
}

namespace {

std::string component_report(const std::vector<std::vector<int>>& comps) {
  std::ostringstream os;
  os << "communication graph has " << comps.size() << " components:";
  for (const auto& c : comps) {
    os << " {";
    for (std::size_t i = 0; i < c.size() && i < 8; ++i) os << (i ? "," : "") << c[i];
    if (c.size() > 8) os << ",... " << c.size() << " stations";
    os << "}";
  }
  return os.str();
}

void bfs_hops(Topology& t) {
  const int n = t.size();
  t.hops.assign(n, std::vector<int>(n, -1));
  for (int d = 0; d < n; ++d) {
    std::queue<int> q;
    t.hops[d][d] = 0;
    q.push(d);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : t.comm[u]) {
        if (t.hops[v][d] < 0) {
          t.hops[v][d] = t.hops[u][d] + 1;
          q.push(v);
        }
      }
    }
  }
  t.next_hop.assign(n, std::vector<int>(n, -1));
  for (int a = 0; a < n; ++a) {
    for (int d = 0; d < n; ++d) {
      if (t.hops[a][d] <= 0) continue;
      for (int v : t.comm[a]) {  // neighbour lists are sorted, lowest index wins
        if (t.hops[v][d] == t.hops[a][d] - 1) {
          t.next_hop[a][d] = v;
          break;
        }
      }
    }
  }
}

}  // namespace

Topology make_topology(std::vector<Point> positions, Ranges r, double close_threshold,
                       bool require_connected) {
  if (!(r.r_c > 0.0 && r.r_c <= r.r_i && r.r_i <= r.r_s)) {
    throw ConfigError("ranges must satisfy 0 < r_c <= r_i <= r_s");
  }
  if (close_threshold < 0.0) throw ConfigError("close_threshold must be non-negative");
  Topology t;
  t.pos = std::move(positions);
  t.ranges = r;
  t.close_threshold = close_threshold;
  const int n = t.size();
  t.comm.resize(n);
  t.interfere.resize(n);
  t.sense.resize(n);
  t.close.resize(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const double d = t.dist(a, b);
      if (d <= r.r_c) t.comm[a].push_back(b);
      if (d <= r.r_i) t.interfere[a].push_back(b);
      if (d <= r.r_s) t.sense[a].push_back(b);
      if (d <= close_threshold * r.r_c) t.close[a].push_back(b);
    }
  }
  if (require_connected && n > 0) {
    const auto comps = components(t.comm);
    if (comps.size() > 1) throw ConfigError(component_report(comps));
  }
  bfs_hops(t);
  t.two_hop.resize(n);
  for (int a = 0; a < n; ++a) {
    for (int d = 0; d < n; ++d) {
      if (t.hops[a][d] == 2) t.two_hop[a].push_back({t.next_hop[a][d], d});
    }
  }
  return t;
}

namespace {

std::vector<Point> place(const TopologySpec& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts(static_cast<std::size_t>(s.n));
  for (auto& p : pts) {
    if (s.placement == Placement::Rect) {
      p.x = u(rng) * s.width;
      p.y = u(rng) * s.height;
    } else {
      const double rho = s.radius * std::sqrt(u(rng));
      const double phi = 2.0 * std::numbers::pi * u(rng);
      p.x = rho * std::cos(phi);
      p.y = rho * std::sin(phi);
    }
  }
  return pts;
}

}  // namespace

Topology build_topology(const TopologySpec& s) {
  if (s.placement == Placement::Explicit) {
    return make_topology(s.positions, s.ranges, s.close_threshold, s.require_connected);
  }
  if (s.n < 1) throw ConfigError("topology needs at least one station");
  if (s.max_attempts < 1) throw ConfigError("max_attempts must be positive");
  for (int attempt = 0;; ++attempt) {
    const auto seed = attempt == 0 ? s.seed : derive_seed(s.seed, {0x70b0, static_cast<std::uint64_t>(attempt)});
    try {
      auto t = make_topology(place(s, seed), s.ranges, s.close_threshold, s.require_connected);
      if (s.require_two_hop) {
        for (int a = 0; a < t.size(); ++a) {
          if (t.two_hop[a].empty()) {
            throw ConfigError("station " + std::to_string(a) + " has no two-hop destination");
          }
        }
      }
      return t;
    } catch (const ConfigError&) {
      if (attempt + 1 >= s.max_attempts) throw;
    }
  }
}

std::vector<Point> fairness_positions() {
  // Group 1 (A, B, C) and group 2 (D, E, F) on parallel lines 1.2 apart.
  return {{-0.8, 0.0}, {0.0, 0.0}, {0.8, 0.0}, {-0.8, 1.2}, {0.0, 1.2}, {0.8, 1.2}};
}

}  // namespace trean::mac
