#include "trean/baseband.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "trean/errors.hpp"
#include "trean/kernels.hpp"

namespace trean::baseband {

namespace {

using std::numbers::pi;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(pi * x) / (pi * x);
}

double raised_cosine_value(double x, double beta) {
  const double d = 1.0 - (2.0 * beta * x) * (2.0 * beta * x);
  if (std::abs(d) < 1e-12) return (pi / 4.0) * sinc(1.0 / (2.0 * beta));
  return sinc(x) * std::cos(pi * beta * x) / d;
}

double root_raised_cosine_value(double x, double beta) {
  if (x == 0.0) return 1.0 - beta + 4.0 * beta / pi;
  if (std::abs(std::abs(x) - 1.0 / (4.0 * beta)) < 1e-12) {
    return (beta / std::numbers::sqrt2) *
           ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) +
            (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
  }
  const double num = std::sin(pi * x * (1.0 - beta)) + 4.0 * beta * x * std::cos(pi * x * (1.0 + beta));
  const double den = pi * x * (1.0 - (4.0 * beta * x) * (4.0 * beta * x));
  return num / den;
}

double pulse_value(PulseKind kind, double rolloff, int support, double t) {
  if (t < 0.0 || t >= static_cast<double>(support)) return 0.0;
  const double x = t - static_cast<double>(support) / 2.0;
  switch (kind) {
    case PulseKind::RaisedCosine:
      return raised_cosine_value(x, rolloff);
    case PulseKind::RootRaisedCosine:
      return root_raised_cosine_value(x, rolloff) / root_raised_cosine_value(0.0, rolloff);
    case PulseKind::Rectangular:
      return 1.0;
  }
  return 0.0;
}

std::vector<double> tabulate(PulseKind kind, double rolloff, int support) {
  std::vector<double> table(static_cast<std::size_t>(support * kGridPerSymbol));
  for (std::size_t k = 0; k < table.size(); ++k) {
    table[k] = pulse_value(kind, rolloff, support, static_cast<double>(k) / kGridPerSymbol);
  }
  return table;
}

// Gray-coded PAM level for a label of `bits` bits, levels -(M-1) .. (M-1).
double pam_level(unsigned label, unsigned bits) {
  // Inverse Gray: index whose Gray code equals label.
  unsigned index = label;
  for (unsigned shift = 1; shift < bits; shift <<= 1) index ^= index >> shift;
  const int m = 1 << bits;
  return 2.0 * static_cast<double>(index) - static_cast<double>(m - 1);
}

std::vector<Complex> build_constellation(Modulation m) {
  switch (m) {
    case Modulation::BPSK:
      return {Complex{1.0, 0.0}, Complex{-1.0, 0.0}};
    case Modulation::QPSK: {
      std::vector<Complex> c(4);
      const double s = 1.0 / std::numbers::sqrt2;
      for (unsigned l = 0; l < 4; ++l) {
        c[l] = Complex{(l & 2) ? -s : s, (l & 1) ? -s : s};
      }
      return c;
    }
    case Modulation::QAM16:
    case Modulation::QAM64: {
      const unsigned axis_bits = (m == Modulation::QAM16) ? 2 : 3;
      const double norm = (m == Modulation::QAM16) ? std::sqrt(10.0) : std::sqrt(42.0);
      const unsigned count = 1u << (2 * axis_bits);
      std::vector<Complex> c(count);
      for (unsigned l = 0; l < count; ++l) {
        const unsigned i_bits = l >> axis_bits;
        const unsigned q_bits = l & ((1u << axis_bits) - 1);
        c[l] = Complex{pam_level(i_bits, axis_bits), pam_level(q_bits, axis_bits)} / norm;
      }
      return c;
    }
  }
  return {};
}

// Nearest PAM level index -> Gray label bits appended MSB first.
void demap_axis(double x, unsigned bits, double norm, std::vector<std::uint8_t>& out) {
  const int m = 1 << bits;
  const double level = x * norm;
  int index = static_cast<int>(std::lround((level + (m - 1)) / 2.0));
  index = std::clamp(index, 0, m - 1);
  const unsigned gray = static_cast<unsigned>(index) ^ (static_cast<unsigned>(index) >> 1);
  for (int b = static_cast<int>(bits) - 1; b >= 0; --b) out.push_back((gray >> b) & 1u);
}

}  // namespace

PilotPair make_pilot_pair(std::size_t length, std::uint64_t seed) {
  if (length < 8 || !std::has_single_bit(length)) {
    throw ParameterError("pilot length must be a power of two >= 8, got " + std::to_string(length));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(1, length - 1);
  const std::size_t row_a = pick(rng);
  std::size_t row_b = pick(rng);
  while (row_b == row_a) row_b = pick(rng);

  PilotPair p;
  p.preamble.resize(length);
  p.postamble.resize(length);
  for (std::size_t j = 0; j < length; ++j) {
    const double scramble = (rng() >> 63) ? -1.0 : 1.0;
    const double ha = (std::popcount(row_a & j) % 2) ? -1.0 : 1.0;
    const double hb = (std::popcount(row_b & j) % 2) ? -1.0 : 1.0;
    p.preamble[j] = scramble * ha;
    p.postamble[j] = scramble * hb;
  }
  return p;
}

int bits_per_symbol(Modulation m) {
  switch (m) {
    case Modulation::BPSK: return 1;
    case Modulation::QPSK: return 2;
    case Modulation::QAM16: return 4;
    case Modulation::QAM64: return 6;
  }
  return 1;
}

const char* to_string(Modulation m) {
  switch (m) {
    case Modulation::BPSK: return "BPSK";
    case Modulation::QPSK: return "QPSK";
    case Modulation::QAM16: return "16QAM";
    case Modulation::QAM64: return "64QAM";
  }
  return "?";
}

Modulation modulation_from_string(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (s == "BPSK") return Modulation::BPSK;
  if (s == "QPSK") return Modulation::QPSK;
  if (s == "16QAM" || s == "QAM16") return Modulation::QAM16;
  if (s == "64QAM" || s == "QAM64") return Modulation::QAM64;
  throw ParameterError("unknown modulation '" + name + "'");
}

std::span<const Complex> constellation(Modulation m) {
  static const std::array<std::vector<Complex>, 4> tables = {
      build_constellation(Modulation::BPSK), build_constellation(Modulation::QPSK),
      build_constellation(Modulation::QAM16), build_constellation(Modulation::QAM64)};
  return tables[static_cast<std::size_t>(m)];
}

void demap_symbol(Complex z, Modulation m, std::vector<std::uint8_t>& out) {
  switch (m) {
    case Modulation::BPSK:
      out.push_back(z.real() < 0.0 ? 1 : 0);
      return;
    case Modulation::QPSK:
      out.push_back(z.real() < 0.0 ? 1 : 0);
      out.push_back(z.imag() < 0.0 ? 1 : 0);
      return;
    case Modulation::QAM16:
      demap_axis(z.real(), 2, std::sqrt(10.0), out);
      demap_axis(z.imag(), 2, std::sqrt(10.0), out);
      return;
    case Modulation::QAM64:
      demap_axis(z.real(), 3, std::sqrt(42.0), out);
      demap_axis(z.imag(), 3, std::sqrt(42.0), out);
      return;
  }
}

SymbolFrame modulate(std::span<const std::uint8_t> bits, Modulation m, const PilotPair& pilots,
                     PilotOrder order) {
  const auto k = static_cast<std::size_t>(bits_per_symbol(m));
  if (bits.size() % k != 0) {
    throw ParameterError("bit count " + std::to_string(bits.size()) +
                         " is not a multiple of " + std::to_string(k));
  }
  if (pilots.preamble.size() != pilots.postamble.size()) {
    throw ParameterError("preamble and postamble lengths differ");
  }
  const auto& lead = order == PilotOrder::Normal ? pilots.preamble : pilots.postamble;
  const auto& trail = order == PilotOrder::Normal ? pilots.postamble : pilots.preamble;
  const auto table = constellation(m);

  SymbolFrame f;
  f.modulation = m;
  f.pilot_order = order;
  f.pilot_length = pilots.length();
  f.symbols.reserve(2 * pilots.length() + bits.size() / k);
  for (double p : lead) f.symbols.emplace_back(p, 0.0);
  for (std::size_t i = 0; i < bits.size(); i += k) {
    unsigned label = 0;
    for (std::size_t b = 0; b < k; ++b) label = (label << 1) | (bits[i + b] & 1u);
    f.symbols.push_back(table[label]);
  }
  for (double p : trail) f.symbols.emplace_back(p, 0.0);
  return f;
}

PulseShape PulseShape::raised_cosine(double rolloff, int support) {
  if (rolloff <= 0.0 || rolloff > 1.0 || support < 1) throw ParameterError("bad raised cosine parameters");
  return PulseShape(PulseKind::RaisedCosine, rolloff, support,
                    tabulate(PulseKind::RaisedCosine, rolloff, support));
}

PulseShape PulseShape::root_raised_cosine(double rolloff, int support) {
  if (rolloff <= 0.0 || rolloff > 1.0 || support < 1) throw ParameterError("bad root raised cosine parameters");
  return PulseShape(PulseKind::RootRaisedCosine, rolloff, support,
                    tabulate(PulseKind::RootRaisedCosine, rolloff, support));
}

PulseShape PulseShape::rectangular() {
  return PulseShape(PulseKind::Rectangular, 0.0, 1, tabulate(PulseKind::Rectangular, 0.0, 1));
}

double PulseShape::operator()(double t) const { return pulse_value(kind_, rolloff_, support_, t); }

double PulseShape::stream_power() const {
  double e = 0.0;
  for (double v : table_) e += v * v;
  return e / kGridPerSymbol;
}

std::int64_t PulseShape::peak_grid() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < table_.size(); ++k) {
    if (std::abs(table_[k]) > std::abs(table_[best])) best = k;
  }
  return static_cast<std::int64_t>(best);
}

std::int64_t ChannelRealization::symbol_shift() const {
  if (delay_grid < offset_grid) throw ParameterError("T_d must not precede the first sampling instant");
  return (delay_grid - offset_grid) / kGridPerSymbol;
}

double ChannelRealization::residual_delay() const {
  const std::int64_t d = symbol_shift();
  return static_cast<double>(delay_grid - offset_grid - d * kGridPerSymbol) / kGridPerSymbol;
}

std::vector<Complex> SampleStream::odd() const {
  std::vector<Complex> out;
  out.reserve((samples.size() + 1) / 2);
  for (std::size_t i = 0; i < samples.size(); i += 2) out.push_back(samples[i]);
  return out;
}

std::vector<Complex> SampleStream::even() const {
  std::vector<Complex> out;
  out.reserve(samples.size() / 2);
  for (std::size_t i = 1; i < samples.size(); i += 2) out.push_back(samples[i]);
  return out;
}

std::vector<Complex> SampleStream::interleave(std::span<const Complex> odd,
                                              std::span<const Complex> even) {
  std::vector<Complex> out;
  out.reserve(odd.size() + even.size());
  for (std::size_t k = 0; k < std::max(odd.size(), even.size()); ++k) {
    if (k < odd.size()) out.push_back(odd[k]);
    if (k < even.size()) out.push_back(even[k]);
  }
  return out;
}

namespace {

std::int64_t packet_end(const SymbolFrame& f, const PulseShape& g, std::int64_t start) {
  if (f.symbols.empty()) return start;
  return start + static_cast<std::int64_t>(f.symbols.size() - 1) * kGridPerSymbol +
         static_cast<std::int64_t>(g.table().size());
}

void add_packet(ContinuousSignal& out, const SymbolFrame& f, const PulseShape& g, Complex h,
                std::int64_t start) {
  if (f.symbols.empty() || h == Complex{}) return;
  kernels::ShapeArgs a{f.symbols, g.table(), h, start - out.start_grid, kGridPerSymbol};
  kernels::shape(a, out.values);
}

}  // namespace

ContinuousSignal synthesize_packet(const SymbolFrame& frame, const PulseShape& pulse, Complex h,
                                   std::int64_t start_grid) {
  ContinuousSignal s;
  s.start_grid = start_grid;
  s.values.assign(static_cast<std::size_t>(packet_end(frame, pulse, start_grid) - start_grid), Complex{});
  add_packet(s, frame, pulse, h, start_grid);
  return s;
}

ContinuousSignal synthesize_received(const SymbolFrame& frame_F, const SymbolFrame& frame_S,
                                     const PulseShape& pulse_F, const PulseShape& pulse_S,
                                     const ChannelRealization& chan) {
  if (chan.delay_grid < 0) throw ParameterError("T_d must be non-negative");
  ContinuousSignal s;
  s.start_grid = 0;
  const std::int64_t end = std::max(packet_end(frame_F, pulse_F, 0),
                                    packet_end(frame_S, pulse_S, chan.delay_grid));
  s.values.assign(static_cast<std::size_t>(end), Complex{});
  add_packet(s, frame_F, pulse_F, chan.h_F, 0);
  add_packet(s, frame_S, pulse_S, chan.h_S, chan.delay_grid);
  return s;
}

ContinuousSignal add_awgn(ContinuousSignal signal, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return signal;
  if (!std::isfinite(snr_db)) throw ParameterError("snr_db must be finite or +inf");
  const double variance = std::pow(10.0, -snr_db / 10.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  for (auto& v : signal.values) {
    const double re = n(rng);
    const double im = n(rng);
    v += Complex{re, im};
  }
  return signal;
}

SampleStream sample_half_symbol(const ContinuousSignal& signal, double offset) {
  const double g = offset * kGridPerSymbol;
  const double rounded = std::round(g);
  if (offset < 0.0 || offset >= 0.5) throw ParameterError("sampling offset must lie in [0, T/2)");
  if (std::abs(g - rounded) > 1e-9) throw ParameterError("sampling offset is not on the T/16 grid");
  const auto first = signal.start_grid + static_cast<std::int64_t>(rounded);
  SampleStream s;
  s.offset = offset;
  for (std::int64_t k = first; k < signal.end_grid(); k += kGridPerSample) {
    s.samples.push_back(signal.at_grid(k));
  }
  return s;
}

std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> bits(count);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 64 == 0) word = rng();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return bits;
}

}  // namespace trean::baseband
