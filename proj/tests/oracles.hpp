#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. Nothing here calls into the library under test.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracle {

using cvec = std::vector<std::complex<double>>;
using cmat = std::vector<cvec>;  // row major

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline cvec gauss_solve(cmat A, cvec b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    }
    if (std::abs(A[piv][c]) == 0.0) throw std::runtime_error("singular");
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const auto f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  cvec x(n);
  for (std::size_t i = n; i-- > 0;) {
    auto s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

/// Least squares through the explicitly formed normal equations C^H C x = C^H y.
inline cvec normal_equations(const cmat& C, const cvec& y) {
  const std::size_t m = C.size(), n = C.front().size();
  cmat A(n, cvec(n));
  cvec b(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t r = 0; r < m; ++r) A[i][j] += std::conj(C[r][i]) * C[r][j];
    }
    for (std::size_t r = 0; r < m; ++r) b[i] += std::conj(C[r][i]) * y[r];
  }
  return gauss_solve(A, b);
}

inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// P(|X - Y| <= d) for X, Y independent and uniform in a disk of radius R.
inline double disk_distance_cdf(double d, double R) {
  if (d <= 0.0) return 0.0;
  if (d >= 2.0 * R) return 1.0;
  const double x = d / R;
  return 1.0 + (2.0 / std::numbers::pi) * (x * x - 1.0) * std::acos(x / 2.0) -
         (x / std::numbers::pi) * (1.0 + x * x / 2.0) * std::sqrt(1.0 - x * x / 4.0);
}

/// Three-sigma binomial half width for a rate p over n trials.
inline double three_sigma(double p, double n) { return 3.0 * std::sqrt(std::max(p * (1.0 - p), 1e-12) / n); }

/// Stationary vector of the backoff chain built state by state from the
/// transition list: from S(i,j), j >= 1, count down with 1 - p_c or reset to
/// a uniform stage-0 counter with p_c; from S(i,0) transmit, restart at stage
/// 0 with 1 - p_f or move to stage min(i+1, m) with p_f. Power iteration on
/// the lazy chain (P + I) / 2.
inline std::vector<std::vector<double>> markov_stationary(double p_f, double p_c, int w0, int m,
                                                          int iterations = 200000, double tol = 1e-15) {
  auto W = [&](int i) { return w0 << std::min(i, m); };
  std::vector<std::vector<double>> v(static_cast<std::size_t>(m) + 1);
  std::size_t states = 0;
  for (int i = 0; i <= m; ++i) states += static_cast<std::size_t>(W(i));
  for (int i = 0; i <= m; ++i) v[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(W(i)), 1.0 / static_cast<double>(states));
  auto next = v;
  for (int it = 0; it < iterations; ++it) {
    for (auto& row : next) std::fill(row.begin(), row.end(), 0.0);
    double to_stage0 = 0.0;
    for (int i = 0; i <= m; ++i) {
      const auto& row = v[static_cast<std::size_t>(i)];
      for (int j = 1; j < W(i); ++j) {
        next[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)] += row[static_cast<std::size_t>(j)] * (1.0 - p_c);
        to_stage0 += row[static_cast<std::size_t>(j)] * p_c;
      }
      to_stage0 += row[0] * (1.0 - p_f);
      const int up = std::min(i + 1, m);
      for (int k = 0; k < W(up); ++k) next[static_cast<std::size_t>(up)][static_cast<std::size_t>(k)] += row[0] * p_f / W(up);
    }
    for (int k = 0; k < w0; ++k) next[0][static_cast<std::size_t>(k)] += to_stage0 / w0;
    double diff = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = 0; j < v[i].size(); ++j) {
        const double lazy = 0.5 * (v[i][j] + next[i][j]);
        diff = std::max(diff, std::abs(lazy - v[i][j]));
        v[i][j] = lazy;
      }
    }
    if (diff < tol) break;
  }
  return v;
}

/// Classical single-cell saturation transmission probability.
inline double classical_tau(double p, int w0, int m) {
  const double W = w0;
  return 2.0 * (1.0 - 2.0 * p) / ((1.0 - 2.0 * p) * (W + 1.0) + p * W * (1.0 - std::pow(2.0 * p, m)));
}

}  // namespace oracle
