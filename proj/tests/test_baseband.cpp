#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "trean/baseband.hpp"
#include "trean/errors.hpp"
#include "trean/kernels.hpp"

using namespace trean::baseband;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

SymbolFrame random_frame(Modulation m, std::size_t data_symbols, std::uint64_t seed,
                         PilotOrder order = PilotOrder::Normal, std::size_t lp = 64) {
  const auto bits = random_bits(data_symbols * static_cast<std::size_t>(bits_per_symbol(m)), seed);
  return modulate(bits, m, make_pilot_pair(lp, seed + 1), order);
}

}  // namespace

TEST_CASE("pilot pairs are exactly orthogonal +-1 rows") {
  for (std::size_t lp : {8u, 16u, 64u, 256u}) {
    for (std::uint64_t seed : {0u, 7u, 99u}) {
      const auto p = make_pilot_pair(lp, seed);
      REQUIRE(p.preamble.size() == lp);
      REQUIRE(p.postamble.size() == lp);
      CHECK(dot(p.preamble, p.postamble) == 0.0);
      CHECK(dot(p.preamble, p.preamble) == static_cast<double>(lp));
      for (double v : p.postamble) CHECK(std::abs(v) == 1.0);
    }
  }
  CHECK_THROWS_AS(make_pilot_pair(6, 0), trean::ParameterError);
  CHECK_THROWS_AS(make_pilot_pair(4, 0), trean::ParameterError);
}

TEST_CASE("modulate maps bits and wraps pilots") {
  const auto pilots = make_pilot_pair(8, 3);
  const std::vector<std::uint8_t> two{0, 1};
  const auto f = modulate(two, Modulation::BPSK, pilots, PilotOrder::Normal);
  REQUIRE(f.length() == 18);
  CHECK(f.symbols[8] == Complex(1, 0));
  CHECK(f.symbols[9] == Complex(-1, 0));
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(f.symbols[i].real() == pilots.preamble[i]);
    CHECK(f.symbols[10 + i].real() == pilots.postamble[i]);
  }

  const auto s = modulate(two, Modulation::BPSK, pilots, PilotOrder::Swapped);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(s.symbols[i].real() == pilots.postamble[i]);
    CHECK(s.symbols[10 + i].real() == pilots.preamble[i]);
  }

  const auto q = modulate(random_bits(16, 5), Modulation::QPSK, pilots, PilotOrder::Normal);
  CHECK(q.data_symbols() == 8);
  for (std::size_t i = 8; i < 16; ++i) CHECK(std::abs(q.symbols[i]) == doctest::Approx(1.0));

  const auto seven = random_bits(7, 1);
  CHECK_THROWS_AS(modulate(seven, Modulation::QPSK, pilots, PilotOrder::Normal), trean::ParameterError);
}

TEST_CASE("constellations have unit energy and demap round trips") {
  for (auto m : {Modulation::BPSK, Modulation::QPSK, Modulation::QAM16, Modulation::QAM64}) {
    const auto c = constellation(m);
    REQUIRE(c.size() == (std::size_t{1} << bits_per_symbol(m)));
    double e = 0.0;
    for (auto z : c) e += std::norm(z);
    CHECK(e / static_cast<double>(c.size()) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t label = 0; label < c.size(); ++label) {
      std::vector<std::uint8_t> out;
      demap_symbol(c[label], m, out);
      std::size_t back = 0;
      for (auto b : out) back = (back << 1) | b;
      CHECK(back == label);
    }
    CHECK(modulation_from_string(to_string(m)) == m);
  }
}

TEST_CASE("synthesis is linear in the two packets") {
  const auto F = random_frame(Modulation::QPSK, 40, 11);
  const auto S = random_frame(Modulation::QPSK, 40, 12, PilotOrder::Swapped);
  const auto g = PulseShape::root_raised_cosine();
  const ChannelRealization chan{{0.8, 0.3}, {-0.2, 0.9}, 37, 3};
  const auto both = synthesize_received(F, S, g, g, chan);
  const auto only_f = synthesize_received(F, SymbolFrame{}, g, g, chan);
  const auto only_s = synthesize_received(SymbolFrame{}, S, g, g, chan);
  for (auto k = both.start_grid; k < both.end_grid(); ++k) {
    const auto sum = only_f.at_grid(k) + only_s.at_grid(k);
    CHECK(std::abs(both.at_grid(k) - sum) <= 1e-12 * (1.0 + std::abs(sum)));
  }

  ChannelRealization mute = chan;
  mute.h_S = 0.0;
  const auto muted = synthesize_received(F, S, g, g, mute);
  const auto single = synthesize_packet(F, g, chan.h_F);
  for (auto k = muted.start_grid; k < muted.end_grid(); ++k) CHECK(muted.at_grid(k) == single.at_grid(k));

  const ChannelRealization aligned{{1, 0}, {1, 0}, 0, 0};
  const auto twice = synthesize_received(F, F, g, g, aligned);
  const auto once = synthesize_packet(F, g, 1.0);
  for (auto k = twice.start_grid; k < twice.end_grid(); ++k) CHECK(std::abs(twice.at_grid(k) - 2.0 * once.at_grid(k)) < 1e-12);
}

TEST_CASE("one symbol through a rectangular pulse is flat over one period") {
  SymbolFrame f;
  f.symbols = {Complex(1, 0)};
  const auto y = synthesize_packet(f, PulseShape::rectangular(), 1.0);
  for (std::int64_t k = 0; k < kGridPerSymbol; ++k) CHECK(y.at_grid(k) == Complex(1, 0));
  CHECK(y.at_grid(kGridPerSymbol) == Complex(0, 0));
  CHECK(y.at_grid(-1) == Complex(0, 0));
}

TEST_CASE("awgn is deterministic and has the requested power") {
  ContinuousSignal s;
  s.values.assign(100000, Complex(1, 0));
  const auto clean = add_awgn(s, kNoNoise, 4);
  CHECK(clean.values == s.values);
  const auto a = add_awgn(s, 0.0, 4);
  const auto b = add_awgn(s, 0.0, 4);
  CHECK(a.values == b.values);
  double p = 0.0;
  for (std::size_t i = 0; i < s.values.size(); ++i) p += std::norm(a.values[i] - s.values[i]);
  CHECK(p / static_cast<double>(s.values.size()) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("half-symbol sampling") {
  ContinuousSignal c;
  c.values.assign(160, Complex(3, 0));
  const auto st = sample_half_symbol(c, 0.0);
  CHECK(st.size() == 20);
  for (auto v : st.samples) CHECK(v == Complex(3, 0));
  CHECK(st.offset == 0.0);
  CHECK_THROWS_AS(sample_half_symbol(c, 0.5), trean::ParameterError);
  CHECK_THROWS_AS(sample_half_symbol(c, 1.0 / 32), trean::ParameterError);
  CHECK_NOTHROW(sample_half_symbol(c, 3.0 / 16));

  const auto odd = st.odd();
  const auto even = st.even();
  CHECK(SampleStream::interleave(odd, even) == st.samples);
}

TEST_CASE("Nyquist pulse sampled at symbol centres recovers the symbols") {
  const auto F = random_frame(Modulation::QAM16, 50, 21);
  const auto g = PulseShape::raised_cosine();
  const auto st = sample_half_symbol(synthesize_packet(F, g, 1.0), 0.0);
  const auto centres = st.odd();
  const auto lag = static_cast<std::size_t>(g.peak_grid() / kGridPerSymbol);
  for (std::size_t n = 0; n < F.length(); ++n) {
    CHECK(std::abs(centres[n + lag] - F.symbols[n]) < 1e-12);
  }

  // end-to-end pilot orthogonality
  const auto& post = make_pilot_pair(64, 22).postamble;
  Complex corr{};
  for (std::size_t n = 0; n < 64; ++n) corr += centres[n + lag] * post[n];
  CHECK(std::abs(corr) < 1e-9);
}

TEST_CASE("stream power matches the pulse-energy constant") {
  for (const auto& g : {PulseShape::root_raised_cosine(), PulseShape::raised_cosine(), PulseShape::rectangular()}) {
    const auto F = random_frame(Modulation::QPSK, 4000, 31);
    const auto st = sample_half_symbol(synthesize_packet(F, g, 1.0), 0.0);
    double p = 0.0;
    const std::size_t lo = 2 * (64 + 8), hi = 2 * (64 + 3990);
    for (std::size_t i = lo; i < hi; ++i) p += std::norm(st.samples[i]);
    CHECK(p / static_cast<double>(hi - lo) == doctest::Approx(g.stream_power()).epsilon(0.01));
  }
}

TEST_CASE("channel realization derived delay quantities") {
  const ChannelRealization c{{1, 0}, {1, 0}, 16 * 3 + 5, 2};
  CHECK(c.symbol_shift() == 3);
  CHECK(c.residual_delay() == doctest::Approx(3.0 / 16));
  const ChannelRealization bad{{1, 0}, {1, 0}, 1, 2};
  CHECK_THROWS_AS(bad.symbol_shift(), trean::ParameterError);
}

TEST_CASE("serial and OpenMP kernels agree") {
  namespace k = trean::kernels;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::vector<k::Complex> sym(300), samples(900);
  for (auto& z : sym) z = {g(rng), g(rng)};
  for (auto& z : samples) z = {g(rng), g(rng)};
  std::vector<double> pulse(70), pilot(64);
  for (auto& x : pulse) x = g(rng);
  for (auto& x : pilot) x = (rng() & 1) ? 1.0 : -1.0;

  const k::ShapeArgs sa{sym, pulse, {0.3, -0.8}, -5, 16};
  std::vector<k::Complex> a(4900), b(4900);
  k::serial::shape(sa, a);
  k::omp::shape(sa, b);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  CHECK(worst < 1e-12);

  CHECK(k::serial::correlate({samples, pilot}) == k::omp::correlate({samples, pilot}));
  const k::SincArgs si{samples, 3, 8, 0, 2000, 32};
  CHECK(k::serial::sinc_interpolate(si) == k::omp::sinc_interpolate(si));
  const k::DiskArgs da{2.4, 2.0, 3, 50'000, 9};
  const auto s = k::serial::disk_separation(da), o = k::omp::disk_separation(da);
  CHECK(s.hits == o.hits);
  CHECK(s.trials == o.trials);
}
