// Serial against OpenMP versions of the kernels. Set OMP_NUM_THREADS to
// compare thread counts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "trean/kernels.hpp"

namespace k = trean::kernels;
using k::Complex;

namespace {

std::vector<Complex> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<Complex> v(n);
  for (auto& z : v) z = {g(rng), g(rng)};
  return v;
}

std::vector<double> signs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = (rng() & 1) ? 1.0 : -1.0;
  return v;
}

struct ShapeFixture {
  std::vector<Complex> symbols;
  std::vector<double> pulse;
  std::vector<Complex> out;
  explicit ShapeFixture(std::size_t n) : symbols(noise(n, 1)), pulse(96), out(n * 16 + 96) {
    for (std::size_t j = 0; j < pulse.size(); ++j) pulse[j] = 1.0 / (1.0 + static_cast<double>(j));
  }
  k::ShapeArgs args() const { return {symbols, pulse, Complex{1.0, 0.0}, 0, 16}; }
};

template <auto Fn>
void shape(benchmark::State& st) {
  ShapeFixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    std::fill(f.out.begin(), f.out.end(), Complex{});
    Fn(f.args(), f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <auto Fn>
void correlate(benchmark::State& st) {
  const auto s = noise(static_cast<std::size_t>(st.range(0)), 2);
  const auto p = signs(64, 3);
  for (auto _ : st) benchmark::DoNotOptimize(Fn(k::CorrelateArgs{s, p}));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <auto Fn>
void sinc(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto s = noise(n, 4);
  const k::SincArgs a{s, 0, 8, 0, n * 8, 32};
  for (auto _ : st) benchmark::DoNotOptimize(Fn(a));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(a.out_count));
}

template <auto Fn>
void disk(benchmark::State& st) {
  const k::DiskArgs a{2.6, 2.78, 3, static_cast<std::uint64_t>(st.range(0)), 5};
  for (auto _ : st) benchmark::DoNotOptimize(Fn(a));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(shape<k::serial::shape>)->Name("shape/serial")->Arg(2000)->Arg(20000);
BENCHMARK(shape<k::omp::shape>)->Name("shape/omp")->Arg(2000)->Arg(20000);
BENCHMARK(correlate<k::serial::correlate>)->Name("correlate/serial")->Arg(4000)->Arg(40000);
BENCHMARK(correlate<k::omp::correlate>)->Name("correlate/omp")->Arg(4000)->Arg(40000);
BENCHMARK(sinc<k::serial::sinc_interpolate>)->Name("sinc/serial")->Arg(1000)->Arg(10000);
BENCHMARK(sinc<k::omp::sinc_interpolate>)->Name("sinc/omp")->Arg(1000)->Arg(10000);
BENCHMARK(disk<k::serial::disk_separation>)->Name("disk/serial")->Arg(100000)->Arg(1000000);
BENCHMARK(disk<k::omp::disk_separation>)->Name("disk/omp")->Arg(100000)->Arg(1000000);

BENCHMARK_MAIN();
