#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "trean/errors.hpp"
#include "trean/phy_decoder.hpp"

using namespace trean::phy;
using namespace trean::baseband;

namespace {

struct Scenario {
  SampleStream stream;
  SymbolFrame known;
  std::vector<std::uint8_t> wanted;
  PilotPair pilots;
};

// Two frames from ends A (normal pilots) and B (swapped pilots), A first.
Scenario make_scenario(Modulation m, std::int64_t delay_grid, std::int64_t offset_grid, bool known_is_a,
                       std::uint64_t seed, double snr_db = kNoNoise, std::size_t data = 200) {
  Scenario s;
  s.pilots = make_pilot_pair(64, seed);
  const std::size_t nbits = data * static_cast<std::size_t>(bits_per_symbol(m));
  const auto bits_a = random_bits(nbits, seed * 3 + 1);
  const auto bits_b = random_bits(nbits, seed * 3 + 2);
  const auto fa = modulate(bits_a, m, s.pilots, PilotOrder::Normal);
  const auto fb = modulate(bits_b, m, s.pilots, PilotOrder::Swapped);
  const ChannelRealization ch{std::polar(1.0, 0.3 + 0.1 * static_cast<double>(seed)), std::polar(0.9, 2.1), delay_grid,
                              offset_grid};
  const DecoderConfig cfg;
  const auto y = add_awgn(synthesize_received(fa, fb, cfg.pulse, cfg.pulse, ch), snr_db, seed + 100);
  s.stream = sample_half_symbol(y, ch.offset());
  s.known = known_is_a ? fa : fb;
  s.wanted = known_is_a ? bits_b : bits_a;
  return s;
}

DecoderConfig config_for(Modulation m, std::size_t data = 200) {
  DecoderConfig c;
  c.modulation = m;
  c.frame_length = 2 * 64 + data;
  return c;
}

}  // namespace

TEST_CASE("measure_ber") {
  const std::vector<std::uint8_t> a(1000, 0);
  auto b = a;
  CHECK(measure_ber(a, b) == 0.0);
  b[17] = 1;
  CHECK(measure_ber(a, b) == doctest::Approx(0.001));
  const std::vector<std::uint8_t> ones(1000, 1);
  CHECK(measure_ber(a, ones) == 1.0);
  const std::vector<std::uint8_t> short_one(999, 0);
  CHECK_THROWS_AS(measure_ber(a, short_one), trean::ParameterError);
}

TEST_CASE("convolution matrices follow the banded layout") {
  const std::vector<Complex> cF{{1, 0}, {2, 0}, {3, 0}, {4, 0}};
  const std::vector<Complex> cS{{5, 0}, {6, 0}, {7, 0}, {8, 0}};

  const auto m1 = build_conv_matrices(cF, cS, 1, 0, 2);
  REQUIRE(m1.C_F.cols() == 1);
  for (int i = 0; i < 4; ++i) {
    CHECK(m1.C_F(i, 0) == cF[i]);
    CHECK(m1.C_S(i, 0) == cS[i]);
  }

  const auto m2 = build_conv_matrices(cF, cS, 2, 1, 2);
  CHECK(m2.C_S(0, 0) == Complex{});
  CHECK(m2.C_S(0, 1) == Complex{});
  CHECK(m2.C_S(1, 0) == cS[0]);
  CHECK(m2.C_S(1, 1) == Complex{});
  CHECK(m2.C_est.rows() == 4);
  CHECK(m2.C_est.cols() == 4);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t L = 8 + static_cast<std::size_t>(trial % 5), Lh = 1 + static_cast<std::size_t>(trial % 4);
    const std::size_t D = static_cast<std::size_t>(trial % 3);
    std::vector<Complex> a(L), b(L);
    for (auto& z : a) z = {n01(rng), n01(rng)};
    for (auto& z : b) z = {n01(rng), n01(rng)};
    const auto m = build_conv_matrices(a, b, Lh, D, 3);
    for (std::size_t j = 0; j < Lh; ++j) {
      Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(Lh));
      e(static_cast<Eigen::Index>(j)) = 1.0;
      const Eigen::VectorXcd colF = m.C_F * e;
      const Eigen::VectorXcd colS = m.C_S * e;
      for (std::size_t r = 0; r < m.rows(); ++r) {
        const Complex wantF = (r >= j && r - j < L) ? a[r - j] : Complex{};
        const Complex wantS = (r >= j + D && r - j - D < L) ? b[r - j - D] : Complex{};
        CHECK(colF(static_cast<Eigen::Index>(r)) == wantF);
        CHECK(colS(static_cast<Eigen::Index>(r)) == wantS);
      }
    }
  }
}

TEST_CASE("least squares matches brute-force normal equations") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> coin(0, 1);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t Lh = 1 + static_cast<std::size_t>(trial % 2);
    const std::size_t L = 6 + static_cast<std::size_t>(trial % 7);
    const std::size_t Lp = 2 + static_cast<std::size_t>(trial % 2);
    const std::size_t D = static_cast<std::size_t>(trial % 4);
    std::vector<Complex> a(L), b(L);
    for (auto& z : a) z = coin(rng) ? 1.0 : -1.0;
    for (auto& z : b) z = {n01(rng), n01(rng)};
    const auto m = build_conv_matrices(a, b, Lh, D, Lp);
    Eigen::VectorXcd h(static_cast<Eigen::Index>(2 * Lh));
    for (auto& z : h) z = {n01(rng), n01(rng)};
    const Eigen::VectorXcd y = m.C_est * h;

    oracle::cmat C(static_cast<std::size_t>(m.C_est.rows()), oracle::cvec(2 * Lh));
    oracle::cvec yy(C.size());
    for (std::size_t r = 0; r < C.size(); ++r) {
      for (std::size_t c = 0; c < 2 * Lh; ++c) C[r][c] = m.C_est(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      yy[r] = y(static_cast<Eigen::Index>(r));
    }
    LeastSquares ls;
    try {
      ls = solve_least_squares(m.C_est, y);
    } catch (const trean::RankDeficient&) {
      continue;
    }
    const auto ref = oracle::normal_equations(C, yy);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(ls.x(static_cast<Eigen::Index>(i)) - ref[i]) < 1e-9);
  }
}

TEST_CASE("duplicated columns are rank deficient") {
  const auto p = make_pilot_pair(8, 1);
  const auto bits = random_bits(8, 2);
  const auto f = modulate(bits, Modulation::BPSK, p, PilotOrder::Normal);
  const auto m = build_conv_matrices(f.symbols, f.symbols, 1, 0, 8);
  const Eigen::VectorXcd y = Eigen::VectorXcd::Ones(m.C_est.rows());
  CHECK_THROWS_AS(solve_least_squares(m.C_est, y), trean::RankDeficient);
}

TEST_CASE("swapped pilots keep the estimation matrix well conditioned for every delay") {
  const auto p = make_pilot_pair(64, 9);
  const std::size_t L = 2 * 64 + 300;
  std::vector<Complex> cF(L), cS(L);
  for (std::size_t k = 0; k < 64; ++k) {
    cF[k] = p.preamble[k];
    cF[L - 64 + k] = p.postamble[k];
    cS[k] = p.postamble[k];
    cS[L - 64 + k] = p.preamble[k];
  }
  for (std::size_t D = 0; D <= 8; ++D) {
    const auto m = build_conv_matrices(cF, cS, 6, D, 64);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m.C_est);
    const auto sv = svd.singularValues();
    CHECK(sv(0) / sv(sv.size() - 1) < 1e4);
  }
}

TEST_CASE("sinc reconstruction") {
  Residual zero{std::vector<Complex>(40), std::vector<Complex>(40)};
  const auto z = recover_waveform(zero, 0, 600);
  for (auto v : z.values) CHECK(v == Complex{});

  Residual r;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int i = 0; i < 60; ++i) {
    r.odd.emplace_back(n01(rng), n01(rng));
    r.even.emplace_back(n01(rng), n01(rng));
  }
  const auto w = recover_waveform(r, 0, 120 * kGridPerSample);
  for (std::size_t n = 0; n < 120; ++n) {
    const auto want = n % 2 ? r.even[n / 2] : r.odd[n / 2];
    CHECK(std::abs(w.at_grid(static_cast<std::int64_t>(n) * kGridPerSample) - want) < 1e-12);
  }

  // tone at 0.15 cycles per symbol, sampled at two samples per symbol
  const double f = 0.15;
  Residual tone;
  for (int i = 0; i < 400; ++i) {
    tone.odd.push_back(std::polar(1.0, 2 * std::numbers::pi * f * i));
    tone.even.push_back(std::polar(1.0, 2 * std::numbers::pi * f * (i + 0.5)));
  }
  const auto rec = recover_waveform(tone, 0, 800 * kGridPerSample);
  double err = 0.0;
  int count = 0;
  for (std::int64_t k = 100 * kGridPerSymbol; k < 300 * kGridPerSymbol; ++k) {
    err += std::norm(rec.at_grid(k) - std::polar(1.0, 2 * std::numbers::pi * f * static_cast<double>(k) / kGridPerSymbol));
    ++count;
  }
  CHECK(std::sqrt(err / count) < 1e-3);
}

TEST_CASE("boundary detection") {
  // sampling phase mid-way between grid samples so the start index is unambiguous
  const auto s = make_scenario(Modulation::BPSK, 5 * kGridPerSymbol, 4, true, 4);
  const auto rep = detect_boundaries(s.stream, s.pilots, config_for(Modulation::BPSK));
  REQUIRE(rep.has_S());
  CHECK(rep.sample_delay() == 10);
  CHECK(rep.symbol_delay() == 5);
  CHECK(rep.parity() == 0);
  CHECK(rep.order_F == PilotOrder::Normal);
  CHECK(rep.order_S == PilotOrder::Swapped);

  SampleStream silent;
  silent.samples.assign(2000, Complex{});
  CHECK_THROWS_AS(detect_boundaries(silent, s.pilots, config_for(Modulation::BPSK)), trean::DetectionFailure);
}

TEST_CASE("noiseless pipeline decodes every modulation and delay") {
  for (auto m : {Modulation::BPSK, Modulation::QPSK, Modulation::QAM16, Modulation::QAM64}) {
    for (std::int64_t d : {0, 7, 16, 35, 64, 100, 128}) {
      for (bool known_a : {true, false}) {
        const auto off = d % kGridPerSample;
        const auto s = make_scenario(m, d, off, known_a, static_cast<std::uint64_t>(d) + 1);
        const auto res = decode_superposed(s.stream, s.known, s.pilots, config_for(m));
        CHECK(measure_ber(s.wanted, res.bits) == 0.0);
        // below one sample apart either packet may be labelled F
        if (d >= 2 * kGridPerSample) CHECK(res.diagnostics.self == (known_a ? Packet::F : Packet::S));
        CHECK(res.estimate.h_F_odd.size() == 6);
      }
    }
  }
}

TEST_CASE("noise-only residual decodes at chance level") {
  Residual r;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  const std::size_t L = 2 * 64 + 10000;
  for (std::size_t i = 0; i < L + 8; ++i) {
    r.odd.emplace_back(n01(rng), n01(rng));
    r.even.emplace_back(n01(rng), n01(rng));
  }
  ChannelEstimate est;
  const auto g = PulseShape::raised_cosine();
  for (int j = 0; j < 6; ++j) {
    est.h_F_odd.emplace_back(g.at_grid(16 * j));
    est.h_F_even.emplace_back(g.at_grid(16 * j + 8));
  }
  est.h_S_odd = est.h_F_odd;
  est.h_S_even = est.h_F_even;
  const auto rec = recover_waveform(r, 0, (L + 6) * kGridPerSymbol);
  const auto out = demodulate(rec, est, Packet::F, 0, L, 64, Modulation::BPSK);
  const std::vector<std::uint8_t> zeros(out.bits.size(), 0);
  CHECK(out.bits.size() == 10000);
  CHECK(std::abs(measure_ber(zeros, out.bits) - 0.5) < 0.02);
}

TEST_CASE("baseline follows the BPSK error-rate curve") {
  const DecoderConfig cfg;
  const auto p = make_pilot_pair(64, 1);
  for (double snr : {0.0, 2.0, 4.0, 6.0, 8.0, 10.0, -10.0}) {
    std::size_t errors = 0, bits_total = 0;
    for (std::uint64_t f = 0; f < 10; ++f) {
      const auto bits = random_bits(10000, f + 50);
      const auto frame = modulate(bits, Modulation::BPSK, p, PilotOrder::Normal);
      const auto y = add_awgn(synthesize_packet(frame, cfg.pulse, 1.0), snr, f + 60);
      const auto out = ml_baseline_decode(y, 0, cfg.pulse, 1.0, frame.length(), 64, Modulation::BPSK);
      for (std::size_t i = 0; i < bits.size(); ++i) errors += bits[i] != out[i];
      bits_total += bits.size();
    }
    const double ber = static_cast<double>(errors) / static_cast<double>(bits_total);
    const double ref = oracle::q_function(std::sqrt(2.0 * std::pow(10.0, snr / 10.0)));
    if (snr < 0) {
      CHECK(ber > 0.2);
    } else {
      CHECK(std::abs(ber - ref) <= oracle::three_sigma(ref, static_cast<double>(bits_total)));
    }
  }
}

TEST_CASE("known side symmetry of the error rate") {
  // paired per-seed difference, two-sided at three standard errors
  std::vector<double> diff;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    double ber[2];
    for (int side = 0; side < 2; ++side) {
      const auto s = make_scenario(Modulation::BPSK, static_cast<std::int64_t>(seed * 5), 0, side == 0, seed + 200, 6.0, 500);
      const auto res = decode_superposed(s.stream, s.known, s.pilots, config_for(Modulation::BPSK, 500));
      ber[side] = measure_ber(s.wanted, res.bits);
    }
    diff.push_back(ber[0] - ber[1]);
  }
  double mean = 0.0, var = 0.0;
  for (double d : diff) mean += d / static_cast<double>(diff.size());
  for (double d : diff) var += (d - mean) * (d - mean) / static_cast<double>(diff.size() - 1);
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / static_cast<double>(diff.size())));
}
