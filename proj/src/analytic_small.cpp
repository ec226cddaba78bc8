#include <cmath>
#include <functional>
#include <sstream>

#include "analytic_detail.hpp"
#include "trean/analytic.hpp"
#include "trean/errors.hpp"

namespace trean::analytic {

namespace {

void check_chain(double p_f, double p_c, int w0, int m) {
  if (!(p_f >= 0.0 && p_f <= 1.0)) throw DomainError("p_f outside [0, 1]");
  if (!(p_c >= 0.0 && p_c <= 1.0)) throw DomainError("p_c outside [0, 1]");
  if (w0 < 1 || m < 0) throw DomainError("W_0 must be positive and m non-negative");
}

int window(int w0, int m, int i) { return w0 << (i < m ? i : m); }

// (1 - (1 - p_c)^l) / p_c, equal to l at p_c = 0.
double geometric_sum(double l, double p_c) {
  if (p_c == 0.0) return l;
  if (p_c == 1.0) return 1.0;
  return -std::expm1(l * std::log1p(-p_c)) / p_c;
}

// Per-stage quantities shared by both p_t routes.
struct Stages {
  std::vector<double> beta;  // (1 - (1-p_c)^{W_i}) / (p_c W_i)
  std::vector<double> r;     // v_{i,0} / A, the terms of c
};

Stages stages(double p_f, double p_c, int w0, int m) {
  Stages s;
  s.beta.resize(static_cast<std::size_t>(m) + 1);
  s.r.resize(s.beta.size());
  double prod = 1.0;
  for (int i = 0; i <= m; ++i) {
    const auto W = static_cast<double>(window(w0, m, i));
    const auto k = static_cast<std::size_t>(i);
    s.beta[k] = geometric_sum(W, p_c) / W;
    prod *= (i == 0 ? 1.0 : p_f) * s.beta[k];
    const double delta = i == m ? 1.0 - p_f * s.beta[k] : 1.0;
    s.r[k] = prod / delta;
  }
  return s;
}

}  // namespace

double c_value(double p_f, double p_c, int w0, int m) {
  check_chain(p_f, p_c, w0, m);
  if (p_c == 0.0) throw DomainError("c(p_f, p_c) is undefined at p_c = 0");
  const auto s = stages(p_f, p_c, w0, m);
  double c = 0.0;
  for (double r : s.r) c += r;
  return c;
}

double transmission_probability(double p_f, double p_c, int w0, int m) {
  const double c = c_value(p_f, p_c, w0, m);
  return c * p_c / (1.0 - c * (1.0 - p_c - p_f));
}

double transmission_probability_normalized(double p_f, double p_c, int w0, int m) {
  check_chain(p_f, p_c, w0, m);
  const auto s = stages(p_f, p_c, w0, m);
  double c = 0.0, K = 0.0;
  for (int i = 0; i <= m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const int W = window(w0, m, i);
    double S = 0.0;
    for (int l = 1; l <= W; ++l) S += geometric_sum(l, p_c);
    c += s.r[k];
    K += s.r[k] * S / (W * s.beta[k]);
  }
  return c / K;
}

double bianchi_tau(double p, int w0, int m) {
  const double W = w0;
  const double num = 2.0 * (1.0 - 2.0 * p);
  const double den = (1.0 - 2.0 * p) * (W + 1.0) + p * W * (1.0 - std::pow(2.0 * p, m));
  return num / den;
}

double StationaryDistribution::total() const {
  double t = 0.0;
  for (const auto& row : v) {
    for (double x : row) t += x;
  }
  return t;
}

double StationaryDistribution::transmit() const {
  double t = 0.0;
  for (const auto& row : v) t += row.front();
  return t;
}

StationaryDistribution stationary_distribution(double p_f, double p_c, int w0, int m) {
  check_chain(p_f, p_c, w0, m);
  const auto s = stages(p_f, p_c, w0, m);
  const double A = transmission_probability_normalized(p_f, p_c, w0, m) /
                   [&] {
                     double c = 0.0;
                     for (double r : s.r) c += r;
                     return c;
                   }();
  StationaryDistribution d;
  d.v.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const int W = window(w0, m, i);
    const double a = A * s.r[k] / (W * s.beta[k]);
    d.v[k].resize(static_cast<std::size_t>(W));
    for (int j = 0; j < W; ++j) d.v[k][static_cast<std::size_t>(j)] = a * geometric_sum(W - j, p_c);
  }
  return d;
}

namespace detail {

ScalarRoot solve_scalar(const std::function<double(double)>& rhs, double tol, const char* what) {
  ScalarRoot out;
  std::ostringstream trace;
  double p = 0.05;
  constexpr double kDamping = 0.5;
  for (int it = 1; it <= 400; ++it) {
    const double next = rhs(p);
    out.iterations = it;
    if (!std::isfinite(next)) break;
    if (std::abs(next - p) < tol) {
      out.p = next;
      return out;
    }
    p = std::clamp((1.0 - kDamping) * p + kDamping * next, 1e-12, 1.0 - 1e-12);
    if (it % 50 == 0) trace << "iter " << it << " p=" << p << '\n';
  }

  out.used_bisection = true;
  double lo = 1e-9, hi = 1.0 - 1e-9;
  double glo = lo - rhs(lo), ghi = hi - rhs(hi);
  if (!(glo < 0.0 && ghi > 0.0) && !(glo > 0.0 && ghi < 0.0)) {
    throw NoSolution(std::string(what) + ": no sign change of p - RHS(p) on (1e-9, 1 - 1e-9)");
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = mid - rhs(mid);
    out.iterations++;
    if ((g < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = g;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-16) break;
  }
  out.p = 0.5 * (lo + hi);
  const double residual = std::abs(out.p - rhs(out.p));
  if (residual > tol) {
    trace << "bisection ended at p=" << out.p << " residual=" << residual << '\n';
    throw ConvergenceFailure(std::string(what) + ": fixed point did not converge", trace.str());
  }
  return out;
}

}  // namespace detail

Throughput small_scale_throughput(double p_t, const SmallScaleParams& params) {
  const auto& t = params.timing;
  const double n = params.n;
  Throughput r;
  r.P_idle = std::pow(1.0 - p_t, n);
  r.P_succ = n * p_t * std::pow(1.0 - p_t, n - 1.0);
  r.P_col = 1.0 - r.P_idle - r.P_succ;
  const bool trean = params.protocol == Protocol::Trean;
  const double Ts = trean ? t.trean_success() : t.csma_success();
  const double Tc = trean ? t.trean_collision() : t.csma_collision();
  r.X = r.P_idle * t.slot + r.P_col * Tc + r.P_succ * Ts;
  const double deliveries = trean ? 4.0 : 1.0;
  r.bits_per_s = r.X > 0.0 ? deliveries * r.P_succ * t.payload_bits() / r.X * 1e6 : 0.0;
  return r;
}

FixedPointSolution small_scale_fixed_point(const SmallScaleParams& params, double tol) {
  if (params.n < 2) throw ParameterError("small-scale model needs n >= 2");
  const int w0 = params.timing.w0, m = params.timing.m;
  const double n = params.n;
  const bool coop = params.protocol == Protocol::Trean;
  auto pf_of = [&](double p) { return 1.0 - std::pow(1.0 - p, n - 1.0); };
  auto pc_of = [&](double p) { return coop ? p * std::pow(1.0 - p, n - 2.0) : 0.0; };
  auto rhs = [&](double p) {
    return transmission_probability_normalized(pf_of(p), pc_of(p), w0, m);
  };
  const auto root = detail::solve_scalar(rhs, tol, "small-scale model");

  FixedPointSolution s;
  s.p_t = root.p;
  s.p_f = pf_of(s.p_t);
  s.p_c = pc_of(s.p_t);
  s.residual_pt = std::abs(s.p_t - rhs(s.p_t));
  s.residual_pf = std::abs(s.p_f - pf_of(s.p_t));
  s.residual_pc = std::abs(s.p_c - pc_of(s.p_t));
  s.iterations = root.iterations;
  s.used_bisection = root.used_bisection;
  s.throughput = small_scale_throughput(s.p_t, params);
  return s;
}

}  // namespace trean::analytic
