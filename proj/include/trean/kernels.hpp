#pragma once

// Data-parallel inner loops shared by the PHY and the analytic model.
//
// Every kernel has two implementations with identical results: a plain
// serial loop kept as the reference for tests, and an OpenMP version used by
// the library. Monte-Carlo kernels split their work into a fixed number of
// independently seeded chunks so both versions draw the same points.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace trean::kernels {

using Complex = std::complex<double>;

/// Pulse shaping on the dense grid.
/// out[k] += h * sum_n symbols[n] * pulse[k - origin - n * grid_per_symbol]
/// where `pulse` is the tabulated pulse (zero outside its table).
struct ShapeArgs {
  std::span<const Complex> symbols;
  std::span<const double> pulse;
  Complex h;
  std::int64_t origin;          // grid index of symbol 0's pulse start, relative to out[0]
  int grid_per_symbol;
};

/// Sliding pilot correlation S[i] = sum_k s[i + 2k] * p[k] for every i with
/// i + 2(L_p - 1) inside the stream; shorter tails are zero-padded.
struct CorrelateArgs {
  std::span<const Complex> samples;
  std::span<const double> pilot;
};

/// Truncated sinc interpolation of T/2-spaced samples onto the dense grid.
/// samples[n] sits at grid index sample_origin + n * grid_per_sample. Output
/// point j is at grid index out_start + j, using the `taps` nearest samples
/// weighted by a Lanczos window of half width taps/2.
struct SincArgs {
  std::span<const Complex> samples;
  std::int64_t sample_origin;
  int grid_per_sample;
  std::int64_t out_start;
  std::size_t out_count;
  int taps;
};

/// Uniform points in a disk of radius `radius`. Counts the sets of `points`
/// (2 or 3) whose pairwise distances all exceed `threshold`.
struct DiskArgs {
  double radius;
  double threshold;
  int points;
  std::uint64_t samples;
  std::uint64_t seed;
};

struct DiskCount {
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
};

namespace serial {
void shape(const ShapeArgs& a, std::span<Complex> out);
std::vector<Complex> correlate(const CorrelateArgs& a);
std::vector<Complex> sinc_interpolate(const SincArgs& a);
DiskCount disk_separation(const DiskArgs& a);
}  // namespace serial

namespace omp {
void shape(const ShapeArgs& a, std::span<Complex> out);
std::vector<Complex> correlate(const CorrelateArgs& a);
std::vector<Complex> sinc_interpolate(const SincArgs& a);
DiskCount disk_separation(const DiskArgs& a);
}  // namespace omp

// Library entry points.
inline void shape(const ShapeArgs& a, std::span<Complex> out) { omp::shape(a, out); }
inline std::vector<Complex> correlate(const CorrelateArgs& a) { return omp::correlate(a); }
inline std::vector<Complex> sinc_interpolate(const SincArgs& a) {
  return omp::sinc_interpolate(a);
}
inline DiskCount disk_separation(const DiskArgs& a) { return omp::disk_separation(a); }

/// Number of independently seeded chunks used by the Monte-Carlo kernels.
inline constexpr std::uint64_t kMonteCarloChunks = 64;

}  // namespace trean::kernels
