#pragma once

// Physical-layer world for the asynchronous two-way relay: pilots, symbol
// frames, composite pulse shapes, the superposed waveform seen by an end node
// and half-symbol-rate sampling.
//
// Time is measured in symbol periods (T = 1). Continuous waveforms live on a
// dense grid of T/16 so that half-symbol sampling instants and quantized
// delays are exact grid shifts.

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trean::baseband {

using Complex = std::complex<double>;

inline constexpr int kGridPerSymbol = 16;
inline constexpr int kGridPerSample = kGridPerSymbol / 2;

struct PilotPair {
  std::vector<double> preamble;
  std::vector<double> postamble;

  std::size_t length() const { return preamble.size(); }
};

/// Two exactly orthogonal +-1 sequences of length `length` (a power of two,
/// at least 8). Rows of a Sylvester-Hadamard matrix, both multiplied by a
/// common seeded +-1 scrambler so that their aperiodic autocorrelation is
/// noise-like while the inner product stays exactly zero.
PilotPair make_pilot_pair(std::size_t length, std::uint64_t seed);

enum class Modulation { BPSK, QPSK, QAM16, QAM64 };

int bits_per_symbol(Modulation m);
const char* to_string(Modulation m);
Modulation modulation_from_string(const std::string& name);

/// Gray-mapped, unit-average-energy constellation indexed by the bit label
/// (first bit is the most significant).
std::span<const Complex> constellation(Modulation m);

/// Nearest constellation point decision, returning bits_per_symbol(m) bits.
void demap_symbol(Complex z, Modulation m, std::vector<std::uint8_t>& out);

/// NORMAL frames carry the preamble first; SWAPPED frames exchange the
/// preamble and postamble.
enum class PilotOrder { Normal, Swapped };

struct SymbolFrame {
  std::vector<Complex> symbols;
  Modulation modulation = Modulation::BPSK;
  PilotOrder pilot_order = PilotOrder::Normal;
  std::size_t pilot_length = 0;

  std::size_t length() const { return symbols.size(); }
  std::size_t data_symbols() const { return symbols.size() - 2 * pilot_length; }
  std::span<const Complex> leading_pilot() const {
    return {symbols.data(), pilot_length};
  }
  std::span<const Complex> trailing_pilot() const {
    return {symbols.data() + symbols.size() - pilot_length, pilot_length};
  }
};

/// BPSK maps bit 0 to +1 and bit 1 to -1; the other schemes are Gray coded
/// per axis. Throws ParameterError if the bit count is not a multiple of the
/// bits per symbol.
SymbolFrame modulate(std::span<const std::uint8_t> bits, Modulation m,
                     const PilotPair& pilots, PilotOrder order);

enum class PulseKind { RaisedCosine, RootRaisedCosine, Rectangular };

/// Composite pulse g(t) truncated to the half-open support [0, L_h).
/// Values are tabulated on the dense grid; evaluation off the grid is not
/// needed anywhere in the pipeline.
class PulseShape {
 public:
  static PulseShape raised_cosine(double rolloff = 0.35, int support = 6);
  static PulseShape root_raised_cosine(double rolloff = 0.35, int support = 6);
  static PulseShape rectangular();

  PulseKind kind() const { return kind_; }
  int support_symbols() const { return support_; }
  double rolloff() const { return rolloff_; }

  /// g at grid index k (time k/16); zero outside [0, 16 L_h).
  double at_grid(std::int64_t k) const {
    return (k < 0 || k >= static_cast<std::int64_t>(table_.size()))
               ? 0.0
               : table_[static_cast<std::size_t>(k)];
  }
  double operator()(double t) const;
  std::span<const double> table() const { return table_; }

  /// Mean of sum_n |g(t - n)|^2 over one symbol period: the average power
  /// of a unit-energy symbol stream shaped by this pulse.
  double stream_power() const;

  /// Grid index of the largest |g|.
  std::int64_t peak_grid() const;

 private:
  PulseShape(PulseKind kind, double rolloff, int support, std::vector<double> table)
      : kind_(kind), rolloff_(rolloff), support_(support), table_(std::move(table)) {}

  PulseKind kind_;
  double rolloff_;
  int support_;
  std::vector<double> table_;
};

/// Composite channel between the two end transmitters and the receiving end
/// node. Delay and sampling offset are expressed in dense-grid units (T/16).
struct ChannelRealization {
  Complex h_F{1.0, 0.0};
  Complex h_S{1.0, 0.0};
  std::int64_t delay_grid = 0;   // T_d, packet S behind packet F
  std::int64_t offset_grid = 0;  // Delta, first sampling instant, in [0, 8)

  double delay() const { return static_cast<double>(delay_grid) / kGridPerSymbol; }
  double offset() const { return static_cast<double>(offset_grid) / kGridPerSymbol; }
  /// floor((T_d - Delta) / T); throws ParameterError when T_d < Delta.
  std::int64_t symbol_shift() const;
  /// T_d - Delta - D T in symbol periods.
  double residual_delay() const;
};

/// Dense waveform: values[k] is the signal at time (start_grid + k) / 16.
struct ContinuousSignal {
  std::int64_t start_grid = 0;
  std::vector<Complex> values;

  std::int64_t end_grid() const {
    return start_grid + static_cast<std::int64_t>(values.size());
  }
  Complex at_grid(std::int64_t k) const {
    const auto i = k - start_grid;
    return (i < 0 || i >= static_cast<std::int64_t>(values.size()))
               ? Complex{}
               : values[static_cast<std::size_t>(i)];
  }
};

/// Samples at spacing T/2 starting at `offset` (symbol periods).
struct SampleStream {
  std::vector<Complex> samples;
  double offset = 0.0;

  std::size_t size() const { return samples.size(); }
  /// First sample of every pair (indices 0, 2, 4, ...).
  std::vector<Complex> odd() const;
  /// Second sample of every pair (indices 1, 3, 5, ...).
  std::vector<Complex> even() const;
  static std::vector<Complex> interleave(std::span<const Complex> odd,
                                         std::span<const Complex> even);
};

/// Shaped waveform of a single packet with fading h, starting at grid index
/// `start_grid`.
ContinuousSignal synthesize_packet(const SymbolFrame& frame, const PulseShape& pulse,
                                   Complex h, std::int64_t start_grid = 0);

/// Noiseless superposition y(t) of packet F (starting at t = 0) and packet S
/// (starting at t = T_d). Either frame may be empty.
ContinuousSignal synthesize_received(const SymbolFrame& frame_F, const SymbolFrame& frame_S,
                                     const PulseShape& pulse_F, const PulseShape& pulse_S,
                                     const ChannelRealization& chan);

/// Sentinel for a noiseless receiver.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Adds i.i.d. circular complex Gaussian noise of variance 10^(-snr_db/10)
/// to every grid point (unit symbol energy reference). snr_db = +inf leaves
/// the signal untouched.
ContinuousSignal add_awgn(ContinuousSignal signal, double snr_db, std::uint64_t seed);

/// Half-symbol-rate sampler: s[i] = y(i T/2 + offset) for i = 0, 1, ...
/// over the signal span. `offset` must lie in [0, T/2) on the T/16 grid.
SampleStream sample_half_symbol(const ContinuousSignal& signal, double offset);

/// Uniform random bits, deterministic per seed.
std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed);

}  // namespace trean::baseband
