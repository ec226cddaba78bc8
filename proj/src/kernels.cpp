#include "trean/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "trean/rng.hpp"

namespace trean::kernels {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Symbol index range [lo, hi] whose pulse covers output index k.
void symbols_covering(const ShapeArgs& a, std::int64_t k, std::int64_t& lo, std::int64_t& hi) {
  const auto g = static_cast<std::int64_t>(a.grid_per_symbol);
  const auto p = static_cast<std::int64_t>(a.pulse.size());
  const std::int64_t rel = k - a.origin;
  lo = std::max<std::int64_t>(0, floor_div(rel - p, g) + 1);
  hi = std::min<std::int64_t>(static_cast<std::int64_t>(a.symbols.size()) - 1, floor_div(rel, g));
}

Complex sinc_point(const SincArgs& a, std::int64_t grid) {
  const std::int64_t rel = grid - a.sample_origin;
  const auto n_samples = static_cast<std::int64_t>(a.samples.size());
  if (rel % a.grid_per_sample == 0) {
    const std::int64_t n = rel / a.grid_per_sample;
    return (n >= 0 && n < n_samples) ? a.samples[static_cast<std::size_t>(n)] : Complex{};
  }
  const double x = static_cast<double>(rel) / a.grid_per_sample;
  const std::int64_t n0 = floor_div(rel, a.grid_per_sample);
  const std::int64_t first = std::max<std::int64_t>(0, n0 - a.taps / 2 + 1);
  const std::int64_t last = std::min<std::int64_t>(n_samples - 1, n0 + a.taps / 2);
  Complex acc{};
  for (std::int64_t n = first; n <= last; ++n) {  // Lanczos-windowed kernel
    const double u = x - static_cast<double>(n);
    acc += a.samples[static_cast<std::size_t>(n)] * (sinc(u) * sinc(u * 2.0 / a.taps));
  }
  return acc;
}

std::uint64_t chunk_hits(const DiskArgs& a, std::uint64_t chunk, std::uint64_t count) {
  std::mt19937_64 rng(splitmix64(a.seed ^ splitmix64(chunk + 1)));
  std::uniform_real_distribution<double> u(-a.radius, a.radius);
  const double r2 = a.radius * a.radius;
  const double t2 = a.threshold * a.threshold;
  auto draw = [&](double& x, double& y) {
    do {
      x = u(rng);
      y = u(rng);
    } while (x * x + y * y > r2);
  };
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    double x[3], y[3];
    for (int j = 0; j < a.points; ++j) draw(x[j], y[j]);
    bool ok = true;
    for (int j = 0; j < a.points && ok; ++j) {
      for (int k = j + 1; k < a.points; ++k) {
        const double dx = x[j] - x[k], dy = y[j] - y[k];
        if (dx * dx + dy * dy <= t2) {
          ok = false;
          break;
        }
      }
    }
    hits += ok ? 1 : 0;
  }
  return hits;
}

std::uint64_t chunk_size(const DiskArgs& a, std::uint64_t chunk) {
  const std::uint64_t base = a.samples / kMonteCarloChunks;
  return base + (chunk < a.samples % kMonteCarloChunks ? 1 : 0);
}

}  // namespace

namespace serial {

void shape(const ShapeArgs& a, std::span<Complex> out) {
  const auto g = static_cast<std::int64_t>(a.grid_per_symbol);
  const auto len = static_cast<std::int64_t>(out.size());
  for (std::size_t n = 0; n < a.symbols.size(); ++n) {
    const Complex s = a.h * a.symbols[n];
    const std::int64_t base = a.origin + static_cast<std::int64_t>(n) * g;
    for (std::size_t j = 0; j < a.pulse.size(); ++j) {
      const std::int64_t k = base + static_cast<std::int64_t>(j);
      if (k >= 0 && k < len) out[static_cast<std::size_t>(k)] += s * a.pulse[j];
    }
  }
}

std::vector<Complex> correlate(const CorrelateArgs& a) {
  std::vector<Complex> out(a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    Complex acc{};
    for (std::size_t k = 0; k < a.pilot.size(); ++k) {
      const std::size_t idx = i + 2 * k;
      if (idx >= a.samples.size()) break;
      acc += a.samples[idx] * a.pilot[k];
    }
    out[i] = acc;
  }
  return out;
}

std::vector<Complex> sinc_interpolate(const SincArgs& a) {
  std::vector<Complex> out(a.out_count);
  for (std::size_t j = 0; j < a.out_count; ++j) {
    out[j] = sinc_point(a, a.out_start + static_cast<std::int64_t>(j));
  }
  return out;
}

DiskCount disk_separation(const DiskArgs& a) {
  DiskCount c;
  for (std::uint64_t chunk = 0; chunk < kMonteCarloChunks; ++chunk) {
    const auto n = chunk_size(a, chunk);
    c.hits += chunk_hits(a, chunk, n);
    c.trials += n;
  }
  return c;
}

}  // namespace serial

namespace omp {

void shape(const ShapeArgs& a, std::span<Complex> out) {
  const auto len = static_cast<std::int64_t>(out.size());
  const auto g = static_cast<std::int64_t>(a.grid_per_symbol);
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < len; ++k) {
    std::int64_t lo = 0, hi = -1;
    symbols_covering(a, k, lo, hi);
    for (std::int64_t n = lo; n <= hi; ++n) {
      const Complex s = a.h * a.symbols[static_cast<std::size_t>(n)];
      out[static_cast<std::size_t>(k)] += s * a.pulse[static_cast<std::size_t>(k - a.origin - n * g)];
    }
  }
}

std::vector<Complex> correlate(const CorrelateArgs& a) {
  const auto n = static_cast<std::int64_t>(a.samples.size());
  std::vector<Complex> out(a.samples.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    Complex acc{};
    for (std::size_t k = 0; k < a.pilot.size(); ++k) {
      const auto idx = static_cast<std::size_t>(i) + 2 * k;
      if (idx >= a.samples.size()) break;
      acc += a.samples[idx] * a.pilot[k];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

std::vector<Complex> sinc_interpolate(const SincArgs& a) {
  std::vector<Complex> out(a.out_count);
  const auto n = static_cast<std::int64_t>(a.out_count);
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < n; ++j) {
    out[static_cast<std::size_t>(j)] = sinc_point(a, a.out_start + j);
  }
  return out;
}

DiskCount disk_separation(const DiskArgs& a) {
  std::vector<std::uint64_t> hits(kMonteCarloChunks, 0);
  const auto chunks = static_cast<std::int64_t>(kMonteCarloChunks);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t chunk = 0; chunk < chunks; ++chunk) {
    const auto c = static_cast<std::uint64_t>(chunk);
    hits[c] = chunk_hits(a, c, chunk_size(a, c));
  }
  DiskCount c;
  for (auto h : hits) c.hits += h;
  c.trials = a.samples;
  return c;
}

}  // namespace omp

}  // namespace trean::kernels
