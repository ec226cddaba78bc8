#pragma once

// Station placement, range neighbourhoods and two-hop routing.
// Distances are in units of the communication radius.

#include <cstdint>
#include <string>
#include <vector>

namespace trean::mac {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct Ranges {
  double r_c = 1.0;
  double r_i = 1.78;
  double r_s = 2.4;
};

enum class Placement { Rect, Disk, Explicit };

struct TopologySpec {
  int n = 300;
  Placement placement = Placement::Rect;
  double width = 10.0;   // Rect
  double height = 10.0;  // Rect
  double radius = 1.45;  // Disk
  std::vector<Point> positions;  // Explicit
  Ranges ranges;
  double close_threshold = 0.5;  // close neighbour: distance <= close_threshold * r_c
  // Resample the placement until every station has a two-hop destination.
  bool require_two_hop = false;
  bool require_connected = true;
  int max_attempts = 1;
  std::uint64_t seed = 1;
};

/// One two-hop route: the relay and the next two-hop destination.
struct Route {
  int relay = -1;
  int dest = -1;
};

struct Topology {
  std::vector<Point> pos;
  Ranges ranges;
  double close_threshold = 0.5;
  std::vector<std::vector<int>> comm;       // within r_c
  std::vector<std::vector<int>> interfere;  // within r_i
  std::vector<std::vector<int>> sense;      // within r_s
  std::vector<std::vector<int>> close;      // within close_threshold * r_c
  std::vector<std::vector<int>> hops;       // BFS hop counts, -1 if unreachable
  std::vector<std::vector<int>> next_hop;   // next_hop[a][d]
  std::vector<std::vector<Route>> two_hop;  // routes to stations at hop distance 2

  int size() const { return static_cast<int>(pos.size()); }
  double dist(int a, int b) const { return distance(pos[a], pos[b]); }
  bool in_comm(int a, int b) const { return dist(a, b) <= ranges.r_c; }
  bool in_interference(int a, int b) const { return dist(a, b) <= ranges.r_i; }
  bool in_sensing(int a, int b) const { return dist(a, b) <= ranges.r_s; }
  bool is_close(int a, int b) const { return a != b && dist(a, b) <= close_threshold * ranges.r_c; }
  /// Relay on the shortest path from a to a station two hops away, or -1.
  int relay_towards(int a, int d) const;
};

/// Builds a topology from explicit positions. Throws ConfigError when
/// require_connected is set and the communication graph is disconnected,
/// naming its components, or when the ranges are not ordered.
Topology make_topology(std::vector<Point> positions, Ranges ranges, double close_threshold = 0.5,
                       bool require_connected = true);

/// Seeded placement followed by make_topology. With max_attempts > 1 a
/// failed attempt (disconnected, or missing two-hop routes when required)
/// is redrawn from a derived seed; the last failure is rethrown.
Topology build_topology(const TopologySpec& spec);

/// The six-station chain pair: A-B-C and D-E-F with 0.8 hops and B-E = 1.2.
std::vector<Point> fairness_positions();

/// Connected components of the communication graph, for error reports.
std::vector<std::vector<int>> components(const std::vector<std::vector<int>>& comm);

}  // namespace trean::mac
