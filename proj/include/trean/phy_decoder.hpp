#pragma once

// End-node decoder for a superposed, asynchronously received packet pair.
//
// Sample indices are 0-based and relative to the start of the SampleStream.
// Stream p (p = 0 "odd", p = 1 "even") holds the samples whose index has
// parity p once the stream is re-based at start_F. Packet F is the earlier
// packet, packet S the later one.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trean/baseband.hpp"

namespace trean::phy {

using baseband::Complex;

enum class Packet { F, S };

struct DecoderConfig {
  baseband::PulseShape pulse = baseband::PulseShape::raised_cosine();
  std::size_t frame_length = 0;       // L, symbols per frame including both pilots
  baseband::Modulation modulation = baseband::Modulation::BPSK;  // of the unknown packet
  double threshold_factor = 4.0;      // spike threshold over the local median score
  double ambiguity_ratio = 0.9;       // competing peak ratio that makes detection ambiguous
  int sinc_taps = 32;

  std::size_t taps_per_stream() const {
    return static_cast<std::size_t>(pulse.support_symbols());
  }
};

struct BoundaryReport {
  std::size_t start_F = 0;
  std::size_t end_F = 0;  // one past the last sample carrying packet F
  std::optional<std::size_t> start_S;
  std::optional<std::size_t> end_S;
  baseband::PilotOrder order_F = baseband::PilotOrder::Normal;
  baseband::PilotOrder order_S = baseband::PilotOrder::Swapped;
  double phase_F = 0.0;   // fitted pulse phase of the first sample, in [0, T/2)
  double phase_S = 0.0;
  // Structural scores |S_lead[i]| + |S_trail[i + 2(L - L_p)]| per order.
  std::vector<double> normal_score;
  std::vector<double> swapped_score;

  bool has_S() const { return start_S.has_value(); }
  /// start_S - start_F.
  std::size_t sample_delay() const;
  /// D, the whole symbols between the packets.
  std::size_t symbol_delay() const { return sample_delay() / 2; }
  /// 0 when the delay is an even number of samples, else 1.
  int parity() const { return static_cast<int>(sample_delay() % 2); }
};

/// Raw pilot correlation S[i] = sum_k s[i + 2k] * p[k].
std::vector<Complex> pilot_correlation(std::span<const Complex> samples,
                                       std::span<const double> pilot);

/// Finds both packets from the pilot structure. A single packet leaves
/// start_S empty. Throws DetectionFailure when nothing exceeds the threshold
/// and AmbiguousDetection when one pilot order peaks at two separated places.
BoundaryReport detect_boundaries(const baseband::SampleStream& stream,
                                 const baseband::PilotPair& pilots, const DecoderConfig& cfg);

/// Per-stream convolution matrices. C_F has rows L_F + D + L_h - 1 and
/// C_F[k][j] = c_F[k - j]; C_S is the same for c_S delayed by D rows.
/// C_est stacks the first and last L_p rows of [C_F C_S].
struct ConvMatrices {
  Eigen::MatrixXcd C_F;
  Eigen::MatrixXcd C_S;
  Eigen::MatrixXcd C_est;
  std::size_t pilot_length = 0;
  std::size_t delay = 0;

  std::size_t rows() const { return static_cast<std::size_t>(C_F.rows()); }
  /// The rows of y that C_est uses, in C_est order.
  std::vector<std::size_t> estimation_rows() const;
};

ConvMatrices build_conv_matrices(std::span<const Complex> c_F, std::span<const Complex> c_S,
                                 std::size_t L_h, std::size_t D, std::size_t L_p);

/// Least-squares solution of C x = y with its 2-norm condition number.
/// Throws RankDeficient when the condition number exceeds 1e8.
struct LeastSquares {
  Eigen::VectorXcd x;
  double condition_number = 0.0;
};
LeastSquares solve_least_squares(const Eigen::MatrixXcd& C, const Eigen::VectorXcd& y);

/// Composite channel taps. Odd/even refer to each packet's own sample
/// parity: h_F_odd[j] = h_F g(phase_F + j T), h_F_even[j] = h_F g(phase_F + j T + T/2).
struct ChannelEstimate {
  std::vector<Complex> h_F_odd, h_F_even, h_S_odd, h_S_even;
  double condition_number = 0.0;

  /// Half-symbol-spaced taps of one packet, odd and even interleaved.
  std::vector<Complex> half_taps(Packet which) const;
};

/// Stream layout of the two packets relative to start_F.
struct StreamGeometry {
  std::size_t sample_delay = 0;  // start_S - start_F
  std::size_t taps = 0;          // L_h

  /// Parity, within `which`, of the samples in global stream p.
  int local_parity(Packet which, int p) const;
  /// Symbol delay of `which` as seen from global stream p.
  std::size_t shift(Packet which, int p) const;
};

/// Samples of global stream p re-based at start_F, zero padded to `rows`.
std::vector<Complex> stream_samples(const baseband::SampleStream& stream, std::size_t start_F,
                                    int p, std::size_t rows);

/// Joint LS estimate of both packets' taps on both streams. `y` are the
/// re-based odd and even streams; `odd` and `even` the matching matrices.
ChannelEstimate joint_estimate(std::span<const Complex> y_odd, std::span<const Complex> y_even,
                               const ConvMatrices& odd, const ConvMatrices& even,
                               const StreamGeometry& geo);

struct DecodeDiagnostics {
  Packet self = Packet::F;
  std::vector<Complex> corr_F;  // one entry per half-sample lag
  std::vector<Complex> corr_S;
  double R_F = 0.0;
  double R_S = 0.0;
  double residual_power = 0.0;
  int tau_grid = 0;             // chosen sampling phase, dense-grid units from the unknown packet's first sample
  // The two packets peak within one sample of each other, so the
  // correlations cannot tell them apart and the pilot order decided.
  bool decided_by_pilot_order = false;
  double condition_number = 0.0;
};

/// Correlates the stream with the known symbols aligned at both packets,
/// at the two half-sample lags around each pulse peak; self is F when
/// R_F >= R_S. When the two packets peak within one sample of each other
/// both correlations see the same samples; `known_order` then decides.
DecodeDiagnostics identify_self(const baseband::SampleStream& stream,
                                std::span<const Complex> known_symbols,
                                const BoundaryReport& report, const baseband::PulseShape& pulse,
                                std::optional<baseband::PilotOrder> known_order = std::nullopt);

struct Residual {
  std::vector<Complex> odd;
  std::vector<Complex> even;
};

/// y_p - C_self h_self,p for both streams, with C_self built from the full
/// known symbol sequence.
Residual cancel_known(std::span<const Complex> y_odd, std::span<const Complex> y_even,
                      std::span<const Complex> known_symbols, const ChannelEstimate& est,
                      Packet self, const StreamGeometry& geo);

/// Sinc reconstruction of the interleaved residual on the dense grid.
/// Grid index 0 is the instant of residual sample 0; the output covers
/// [first_grid, first_grid + count).
baseband::ContinuousSignal recover_waveform(const Residual& residual, std::int64_t first_grid,
                                            std::size_t count, int taps = 32);

struct Demodulated {
  std::vector<std::uint8_t> bits;
  int tau_grid = 0;
};

/// Symbol decisions for the unknown packet whose first sample is residual
/// sample `first_sample`, then pilot stripping.
Demodulated demodulate(const baseband::ContinuousSignal& recovered, const ChannelEstimate& est,
                       Packet unknown, std::size_t first_sample, std::size_t frame_length,
                       std::size_t pilot_length, baseband::Modulation m, int taps = 32);

struct DecodeResult {
  std::vector<std::uint8_t> bits;
  BoundaryReport boundaries;
  ChannelEstimate estimate;
  DecodeDiagnostics diagnostics;
};

/// Full pipeline: detect, estimate, identify, cancel, recover, demodulate.
DecodeResult decode_superposed(const baseband::SampleStream& stream,
                               const baseband::SymbolFrame& known_frame,
                               const baseband::PilotPair& pilots, const DecoderConfig& cfg);

/// Reference decoder for a packet received alone: samples the waveform at
/// the pulse peak with genie knowledge of h and the packet start.
std::vector<std::uint8_t> ml_baseline_decode(const baseband::ContinuousSignal& received,
                                             std::int64_t packet_start_grid,
                                             const baseband::PulseShape& pulse, Complex h,
                                             std::size_t frame_length, std::size_t pilot_length,
                                             baseband::Modulation m);

/// Fraction of differing bits. Throws ParameterError on length mismatch.
double measure_ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx);

struct BerPoint {
  baseband::Modulation modulation = baseband::Modulation::BPSK;
  double snr_db = 10.0;
  std::size_t max_delay_symbols = 8;
  std::size_t data_symbols = 1000;
  std::size_t pilot_length = 64;
  std::size_t frames = 100;
  std::uint64_t seed = 1;
};

struct BerResult {
  BerPoint point;
  std::size_t trials = 0;
  std::size_t bits = 0;
  std::size_t bit_errors = 0;
  std::size_t baseline_errors = 0;
  std::size_t failures = 0;  // frames where detection or estimation threw

  double ber() const { return bits ? static_cast<double>(bit_errors) / bits : 0.0; }
  double baseline_ber() const { return bits ? static_cast<double>(baseline_errors) / bits : 0.0; }
};

/// Monte-Carlo BER of the pipeline and of the baseline on the same bits.
/// Each frame draws a random delay up to max_delay_symbols on the T/16 grid,
/// a random sampling offset, random channel phases and a random known side.
/// Frames whose decoding throws count all their bits as errors.
BerResult run_ber_point(const BerPoint& point, const DecoderConfig& base);

std::string ber_csv_header();
std::string ber_csv_row(const BerResult& r);

}  // namespace trean::phy
