#pragma once

// Saturation-throughput model of the cooperative MAC: the backoff Markov
// chain with a cooperation reset, its fixed point for a single cell, and
// the approximate hidden-node model for a large network.

#include <cstdint>
#include <string>
#include <vector>

#include "trean/timing.hpp"

namespace trean::analytic {

enum class Protocol { Trean, Csma };

/// c(p_f, p_c) = sum_i p_f^i / (p_c^{i+1} delta_i) prod_{k<=i} (1 - (1-p_c)^{W_k}) / W_k.
/// Throws DomainError unless 0 < p_c <= 1 and 0 <= p_f <= 1.
double c_value(double p_f, double p_c, int w0, int m);

/// p_t = c p_c / (1 - c (1 - p_c - p_f)).
double transmission_probability(double p_f, double p_c, int w0, int m);

/// The same p_t obtained by normalizing the stationary distribution
/// directly. Finite at p_c = 0, where it is the classical single-cell
/// transmission probability.
double transmission_probability_normalized(double p_f, double p_c, int w0, int m);

/// Closed-form classical saturation tau for conditional collision probability p.
double bianchi_tau(double p, int w0, int m);

/// Stationary probabilities v[i][j] rebuilt from the stage recursion.
struct StationaryDistribution {
  std::vector<std::vector<double>> v;
  double total() const;
  double transmit() const;  // sum_i v[i][0]
};
StationaryDistribution stationary_distribution(double p_f, double p_c, int w0, int m);

struct SmallScaleParams {
  int n = 10;
  Timing timing;
  Protocol protocol = Protocol::Trean;
};

struct Throughput {
  double P_idle = 0.0;
  double P_succ = 0.0;
  double P_col = 0.0;
  double X = 0.0;           // generalized slot, µs
  double bits_per_s = 0.0;
};

struct FixedPointSolution {
  double p_t = 0.0;
  double p_f = 0.0;
  double p_c = 0.0;
  double residual_pt = 0.0;
  double residual_pf = 0.0;
  double residual_pc = 0.0;
  int iterations = 0;
  bool used_bisection = false;
  Throughput throughput;
};

/// Scalar root of g(p_t) = p_t - RHS(p_t) with p_f and p_c substituted;
/// damped iteration first, bisection on (1e-9, 1 - 1e-9) as fallback.
/// Throws NoSolution without a sign change, ConvergenceFailure otherwise.
FixedPointSolution small_scale_fixed_point(const SmallScaleParams& params, double tol = 1e-12);

/// P_idle, P_succ, P_col, X and throughput for a solved p_t. TREAN counts
/// four payload deliveries per success, CSMA/CA one.
Throughput small_scale_throughput(double p_t, const SmallScaleParams& params);

// Large-scale model.

/// Intersection area of two disks with radii r1, r2 and centre distance d.
double lens_area(double r1, double r2, double d);

/// lambda * area(disk(r_i) around the receiver \ disk(r_s) around the
/// transmitter), transmitter and receiver r_c apart.
double hidden_region_count(double lambda, double r_c, double r_i, double r_s);

struct VulnerablePeriods {
  double rtc = 0.0;
  double cts = 0.0;
  double bdata = 0.0;
  double back = 0.0;
};
/// Reduced form T - (DIFS - SIFS) when the broadcast stage follows a
/// transmission from the vulnerable end.
double reduced_vulnerable_period(double packet, const Timing& t);
VulnerablePeriods vulnerable_periods(const Timing& t);

struct DiskEstimate {
  double p = 0.0;
  double std_error = 0.0;
  bool degenerate = false;  // threshold >= diameter
};
/// Probability that 2 (or 3) uniform points in a disk of radius r_s are
/// pairwise farther apart than `threshold`. Monte-Carlo, deterministic per seed.
DiskEstimate disk_pair_prob(double r_s, double threshold, std::uint64_t samples,
                            std::uint64_t seed);
DiskEstimate disk_triple_prob(double r_s, double threshold, std::uint64_t samples,
                              std::uint64_t seed);

struct LargeScaleParams {
  int stations = 300;
  double width = 10.0;
  double height = 10.0;
  double r_c = 1.0;
  double r_i = 1.78;
  double r_s = 2.4;
  Timing timing;
  std::uint64_t disk_samples = 1'000'000;
  std::uint64_t seed = 1;
  // E[T_RTSsucc] = T_short + busy_weight (T_long - T_short); 0.5 is the midpoint.
  double busy_weight = 0.5;
  int max_iterations = 500;

  double density() const { return stations / (width * height); }
};

struct LargeScaleGeometry {
  double lambda = 0.0;
  double n_i = 0.0;
  double n_s = 0.0;
  double n_h = 0.0;
  double p_2c = 0.0;
  double p_3c = 0.0;
};
LargeScaleGeometry large_scale_geometry(const LargeScaleParams& params);

struct LargeScaleSolution {
  FixedPointSolution point;
  LargeScaleGeometry geometry;
  VulnerablePeriods vulnerable;
  double n_1 = 0.0;
  double n_2 = 0.0;
  double P_idle = 0.0;
  double P_rts_succ = 0.0;
  double P_rts_col = 0.0;
  double X = 0.0;
  double T_rts_succ = 0.0;
  double p_s1 = 0.0;
  double p_s2 = 0.0;
  double bits_per_s = 0.0;
  bool oscillation = false;  // X alternated between ceil branches and was averaged
  std::vector<double> x_trace;
};

/// Alternates between the scalar p_t fixed point at fixed X and the X
/// update until |dX| < tol X. Throws ConvergenceFailure with the X trace.
LargeScaleSolution large_scale_fixed_point(const LargeScaleParams& params, double tol = 1e-9);

/// Fills n_2, p_s1, p_s2 and the throughput N p_t (4 p_s2 + 2 p_s1) E[P] / X.
void large_scale_throughput(LargeScaleSolution& s, const LargeScaleParams& params);

/// n_1 = 2 n_h (ceil(T_RTC/X) + ceil(T_CTS/X) + ceil(T_BDATA/X)) + n_h ceil(T_BACK/X).
double hidden_exposure_failure(double n_h, const VulnerablePeriods& v, double X);
/// n_2 = 2 n_h (ceil(T_RTC/X) + ceil(T_CTS/X)) + n_h ceil(T_BDATA/X).
double hidden_exposure_success(double n_h, const VulnerablePeriods& v, double X);

}  // namespace trean::analytic
