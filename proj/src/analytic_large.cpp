#include <cmath>
#include <numbers>
#include <sstream>

#include "analytic_detail.hpp"
#include "trean/analytic.hpp"
#include "trean/errors.hpp"
#include "trean/kernels.hpp"

namespace trean::analytic {

using std::numbers::pi;

double lens_area(double r1, double r2, double d) {
  if (r1 < 0.0 || r2 < 0.0 || d < 0.0) throw DomainError("negative radius or distance");
  if (d >= r1 + r2) return 0.0;
  if (d <= std::abs(r1 - r2)) {
    const double r = std::min(r1, r2);
    return pi * r * r;
  }
  const double a1 = std::acos(std::clamp((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1), -1.0, 1.0));
  const double a2 = std::acos(std::clamp((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2), -1.0, 1.0));
  const double k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
  return r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * std::sqrt(std::max(0.0, k));
}

double hidden_region_count(double lambda, double r_c, double r_i, double r_s) {
  if (!(r_c <= r_i && r_i <= r_s)) throw ParameterError("ranges must satisfy r_c <= r_i <= r_s");
  if (lambda == 0.0) return 0.0;
  return lambda * std::max(0.0, pi * r_i * r_i - lens_area(r_i, r_s, r_c));
}

double reduced_vulnerable_period(double packet, const Timing& t) {
  return std::max(0.0, packet - (t.difs - t.sifs));
}

VulnerablePeriods vulnerable_periods(const Timing& t) {
  VulnerablePeriods v;
  v.rtc = t.rtc();
  v.cts = reduced_vulnerable_period(t.cts(), t);
  v.bdata = reduced_vulnerable_period(t.bdata(), t);
  v.back = reduced_vulnerable_period(t.back(), t);
  return v;
}

namespace {

DiskEstimate disk_estimate(double r_s, double threshold, int points, std::uint64_t samples,
                           std::uint64_t seed) {
  if (threshold < 0.0 || r_s <= 0.0) throw DomainError("disk radius must be positive and threshold non-negative");
  DiskEstimate e;
  if (threshold >= 2.0 * r_s) {
    e.degenerate = true;
    return e;
  }
  if (threshold == 0.0) {
    e.p = 1.0;
    return e;
  }
  if (samples == 0) throw ParameterError("disk estimate needs samples");
  const auto c = kernels::disk_separation({r_s, threshold, points, samples, seed});
  e.p = static_cast<double>(c.hits) / static_cast<double>(c.trials);
  e.std_error = std::sqrt(e.p * (1.0 - e.p) / static_cast<double>(c.trials));
  return e;
}

double ceil_ratio(double T, double X) { return T > 0.0 ? std::ceil(T / X) : 0.0; }

}  // namespace

DiskEstimate disk_pair_prob(double r_s, double threshold, std::uint64_t samples,
                            std::uint64_t seed) {
  return disk_estimate(r_s, threshold, 2, samples, seed);
}

DiskEstimate disk_triple_prob(double r_s, double threshold, std::uint64_t samples,
                              std::uint64_t seed) {
  return disk_estimate(r_s, threshold, 3, samples, seed);
}

LargeScaleGeometry large_scale_geometry(const LargeScaleParams& p) {
  LargeScaleGeometry g;
  g.lambda = p.density();
  g.n_i = p.r_i * p.r_i * pi * g.lambda;
  g.n_s = p.r_s * p.r_s * pi * g.lambda;
  g.n_h = hidden_region_count(g.lambda, p.r_c, p.r_i, p.r_s);
  const double threshold = p.r_i + p.r_c;
  g.p_2c = disk_pair_prob(p.r_s, threshold, p.disk_samples, p.seed).p;
  g.p_3c = disk_triple_prob(p.r_s, threshold, p.disk_samples, p.seed + 1).p;
  return g;
}

double hidden_exposure_failure(double n_h, const VulnerablePeriods& v, double X) {
  return 2.0 * n_h * (ceil_ratio(v.rtc, X) + ceil_ratio(v.cts, X) + ceil_ratio(v.bdata, X)) +
         n_h * ceil_ratio(v.back, X);
}

double hidden_exposure_success(double n_h, const VulnerablePeriods& v, double X) {
  return 2.0 * n_h * (ceil_ratio(v.rtc, X) + ceil_ratio(v.cts, X)) + n_h * ceil_ratio(v.bdata, X);
}

namespace {

// One pass of the model at a fixed generalized slot X.
void evaluate_at(LargeScaleSolution& s, const LargeScaleParams& p, double X, double tol) {
  const auto& g = s.geometry;
  const auto& t = p.timing;
  const double n1 = hidden_exposure_failure(g.n_h, s.vulnerable, X);
  auto pf_of = [&](double q) { return 1.0 - std::pow(1.0 - q, g.n_i + n1 - 1.0); };
  auto pc_of = [&](double q) { return q * std::pow(1.0 - q, g.n_i - 2.0 + n1); };
  auto rhs = [&](double q) {
    return transmission_probability_normalized(pf_of(q), pc_of(q), t.w0, t.m);
  };
  const auto root = detail::solve_scalar(rhs, tol, "large-scale model");
  const double q = root.p;

  s.n_1 = n1;
  s.point.p_t = q;
  s.point.p_f = pf_of(q);
  s.point.p_c = pc_of(q);
  s.point.residual_pt = std::abs(q - rhs(q));
  s.point.iterations += root.iterations;
  s.point.used_bisection = s.point.used_bisection || root.used_bisection;

  const double ns = g.n_s;
  s.P_idle = std::pow(1.0 - q, ns);
  const double single = q * std::pow(1.0 - q, g.n_i - 1.0);
  double succ = ns * single - ns * (ns - 1.0) / 2.0 * g.p_2c * single * single +
                ns * (ns - 1.0) * (ns - 2.0) / 6.0 * g.p_3c * single * single * single;
  succ = std::clamp(succ, 0.0, 1.0 - s.P_idle);
  s.P_rts_succ = succ;
  s.P_rts_col = 1.0 - s.P_idle - s.P_rts_succ;

  const double T_short = t.rts() + t.sifs + t.rtc() + t.difs;
  const double T_long = t.trean_success();
  s.T_rts_succ = T_short + p.busy_weight * (T_long - T_short);
  s.X = s.P_idle * t.slot + s.P_rts_col * t.trean_collision() + s.P_rts_succ * s.T_rts_succ;
}

}  // namespace

LargeScaleSolution large_scale_fixed_point(const LargeScaleParams& p, double tol) {
  if (p.stations < 3) throw ParameterError("large-scale model needs at least 3 stations");
  LargeScaleSolution s;
  s.geometry = large_scale_geometry(p);
  s.vulnerable = vulnerable_periods(p.timing);

  double X = p.timing.slot;
  s.x_trace.push_back(X);
  for (int it = 0; it < p.max_iterations; ++it) {
    evaluate_at(s, p, X, 1e-13);
    const double next = s.X;
    s.x_trace.push_back(next);
    if (std::abs(next - X) < tol * next) {
      large_scale_throughput(s, p);
      return s;
    }
    // A two-cycle between ceil branches: settle on the midpoint.
    const auto k = s.x_trace.size();
    if (k >= 3 && std::abs(s.x_trace[k - 1] - s.x_trace[k - 3]) < tol * next) {
      const double mid = 0.5 * (s.x_trace[k - 1] + s.x_trace[k - 2]);
      evaluate_at(s, p, mid, 1e-13);
      s.X = mid;
      s.oscillation = true;
      large_scale_throughput(s, p);
      return s;
    }
    X = next;
  }
  std::ostringstream trace;
  for (double x : s.x_trace) trace << x << '\n';
  throw ConvergenceFailure("large-scale X iteration did not converge", trace.str());
}

void large_scale_throughput(LargeScaleSolution& s, const LargeScaleParams& p) {
  const double q = s.point.p_t;
  const double X = s.X;
  const auto& g = s.geometry;
  s.n_2 = hidden_exposure_success(g.n_h, s.vulnerable, X);
  const double bdata_ok = std::pow(1.0 - q, g.n_h * ceil_ratio(s.vulnerable.bdata, X));
  const double base = std::pow(1.0 - q, g.n_i - 1.0 + s.n_2);
  s.p_s2 = base * bdata_ok;
  s.p_s1 = base * (2.0 - 2.0 * bdata_ok);
  s.bits_per_s = X > 0.0 ? p.stations * q * (4.0 * s.p_s2 + 2.0 * s.p_s1) *
                               p.timing.payload_bits() / X * 1e6
                         : 0.0;
  s.point.throughput.P_idle = s.P_idle;
  s.point.throughput.P_succ = s.P_rts_succ;
  s.point.throughput.P_col = s.P_rts_col;
  s.point.throughput.X = X;
  s.point.throughput.bits_per_s = s.bits_per_s;
}

}  // namespace trean::analytic
