#include <algorithm>
#include <cmath>

#include "trean/errors.hpp"
#include "trean/kernels.hpp"
#include "trean/phy_decoder.hpp"

namespace trean::phy {

using baseband::kGridPerSample;
using baseband::kGridPerSymbol;

namespace {

std::vector<Complex> lag_correlations(std::span<const Complex> s, std::size_t start,
                                      std::span<const Complex> known,
                                      std::span<const std::size_t> lags) {
  std::vector<Complex> out;
  for (std::size_t m : lags) {
    Complex acc{};
    for (std::size_t n = 0; n < known.size(); ++n) {
      const std::size_t i = start + m + 2 * n;
      if (i >= s.size()) break;
      acc += s[i] * std::conj(known[n]);
    }
    out.push_back(acc);
  }
  return out;
}

// The half-sample lag where |g| peaks for a packet whose first sample sits
// at `phase`, followed by its larger neighbour.
std::vector<std::size_t> peak_lags(const baseband::PulseShape& pulse, double phase) {
  const auto ph = static_cast<std::int64_t>(std::lround(phase * kGridPerSymbol));
  const auto n = static_cast<std::size_t>(2 * pulse.support_symbols());
  auto mag = [&](std::size_t m) {
    return m < n ? std::abs(pulse.at_grid(ph + static_cast<std::int64_t>(m) * kGridPerSample)) : -1.0;
  };
  std::size_t best = 0;
  for (std::size_t m = 1; m < n; ++m) {
    if (mag(m) > mag(best)) best = m;
  }
  const double left = best > 0 ? mag(best - 1) : -1.0;
  const std::size_t second = left > mag(best + 1) ? best - 1 : best + 1;
  return {best, second};
}

double max_abs(std::span<const Complex> v) {
  double m = 0.0;
  for (auto z : v) m = std::max(m, std::abs(z));
  return m;
}

const std::vector<Complex>& stream_taps(const ChannelEstimate& est, Packet which, int parity) {
  if (which == Packet::F) return parity == 0 ? est.h_F_odd : est.h_F_even;
  return parity == 0 ? est.h_S_odd : est.h_S_even;
}

// Frame of length L with only the pilots filled in.
std::vector<Complex> pilot_skeleton(const baseband::PilotPair& pilots, baseband::PilotOrder order,
                                    std::size_t L) {
  const auto& lead = order == baseband::PilotOrder::Normal ? pilots.preamble : pilots.postamble;
  const auto& trail = order == baseband::PilotOrder::Normal ? pilots.postamble : pilots.preamble;
  std::vector<Complex> c(L);
  const std::size_t Lp = pilots.length();
  for (std::size_t k = 0; k < Lp; ++k) {
    c[k] = lead[k];
    c[L - Lp + k] = trail[k];
  }
  return c;
}

}  // namespace

DecodeDiagnostics identify_self(const baseband::SampleStream& stream,
                                std::span<const Complex> known_symbols,
                                const BoundaryReport& report, const baseband::PulseShape& pulse,
                                std::optional<baseband::PilotOrder> known_order) {
  DecodeDiagnostics d;
  const auto lags_F = peak_lags(pulse, report.phase_F);
  d.corr_F = lag_correlations(stream.samples, report.start_F, known_symbols, lags_F);
  d.R_F = max_abs(d.corr_F);
  if (report.start_S) {
    const auto lags_S = peak_lags(pulse, report.phase_S);
    d.corr_S = lag_correlations(stream.samples, *report.start_S, known_symbols, lags_S);
    d.R_S = max_abs(d.corr_S);
    const auto pos_F = static_cast<std::int64_t>(report.start_F + lags_F[0]);
    const auto pos_S = static_cast<std::int64_t>(*report.start_S + lags_S[0]);
    if (known_order && std::abs(pos_S - pos_F) <= 1 && report.order_F != report.order_S) {
      d.decided_by_pilot_order = true;
      d.self = *known_order == report.order_F ? Packet::F : Packet::S;
      return d;
    }
  }
  d.self = d.R_F >= d.R_S ? Packet::F : Packet::S;
  return d;
}

Residual cancel_known(std::span<const Complex> y_odd, std::span<const Complex> y_even,
                      std::span<const Complex> known_symbols, const ChannelEstimate& est,
                      Packet self, const StreamGeometry& geo) {
  Residual r;
  for (int p = 0; p < 2; ++p) {
    const auto y = p == 0 ? y_odd : y_even;
    const auto& taps = stream_taps(est, self, geo.local_parity(self, p));
    const std::size_t shift = geo.shift(self, p);
    std::vector<Complex> out(y.begin(), y.end());
    for (std::size_t k = 0; k < out.size(); ++k) {
      Complex acc{};
      for (std::size_t j = 0; j < taps.size(); ++j) {
        if (k < shift + j) break;
        const std::size_t n = k - shift - j;
        if (n < known_symbols.size()) acc += taps[j] * known_symbols[n];
      }
      out[k] -= acc;
    }
    (p == 0 ? r.odd : r.even) = std::move(out);
  }
  return r;
}

baseband::ContinuousSignal recover_waveform(const Residual& residual, std::int64_t first_grid,
                                            std::size_t count, int taps) {
  const auto merged = baseband::SampleStream::interleave(residual.odd, residual.even);
  baseband::ContinuousSignal out;
  out.start_grid = first_grid;
  out.values = kernels::sinc_interpolate({merged, 0, kGridPerSample, first_grid, count, taps});
  return out;
}

Demodulated demodulate(const baseband::ContinuousSignal& recovered, const ChannelEstimate& est,
                       Packet unknown, std::size_t first_sample, std::size_t frame_length,
                       std::size_t pilot_length, baseband::Modulation m, int taps) {
  const auto half = est.half_taps(unknown);
  const auto span = static_cast<std::size_t>(half.size() * kGridPerSample);
  const auto gain = kernels::sinc_interpolate({half, 0, kGridPerSample, 0, span, taps});

  std::size_t peak = 0;
  for (std::size_t i = 1; i < half.size(); ++i) {
    if (std::abs(half[i]) > std::abs(half[peak])) peak = i;
  }
  const auto centre = static_cast<std::int64_t>(peak) * kGridPerSample;
  const std::int64_t lo = std::max<std::int64_t>(0, centre - kGridPerSample);
  const std::int64_t hi = std::min<std::int64_t>(static_cast<std::int64_t>(span) - 1,
                                                 centre + kGridPerSample);
  const auto base = static_cast<std::int64_t>(first_sample) * kGridPerSample;

  int best_tau = static_cast<int>(centre);
  double best_energy = -1.0;
  for (std::int64_t tau = lo; tau <= hi; ++tau) {
    double e = 0.0;
    for (std::size_t n = 0; n < frame_length; ++n) {
      e += std::norm(recovered.at_grid(base + static_cast<std::int64_t>(n) * kGridPerSymbol + tau));
    }
    if (e > best_energy) {
      best_energy = e;
      best_tau = static_cast<int>(tau);
    }
  }

  Demodulated out;
  out.tau_grid = best_tau;
  const Complex g = gain[static_cast<std::size_t>(best_tau)];
  const Complex inv = std::abs(g) > 0.0 ? 1.0 / g : Complex{};
  for (std::size_t n = pilot_length; n + pilot_length < frame_length; ++n) {
    const Complex z = recovered.at_grid(base + static_cast<std::int64_t>(n) * kGridPerSymbol + best_tau);
    baseband::demap_symbol(z * inv, m, out.bits);
  }
  return out;
}

DecodeResult decode_superposed(const baseband::SampleStream& stream,
                               const baseband::SymbolFrame& known_frame,
                               const baseband::PilotPair& pilots, const DecoderConfig& cfg_in) {
  DecoderConfig cfg = cfg_in;
  if (cfg.frame_length == 0) cfg.frame_length = known_frame.length();
  const std::size_t L = cfg.frame_length;
  const std::size_t Lp = pilots.length();
  const std::size_t L_h = cfg.taps_per_stream();

  DecodeResult res;
  res.boundaries = detect_boundaries(stream, pilots, cfg);
  const auto& rep = res.boundaries;
  if (!rep.has_S()) throw DetectionFailure("only one packet found in the stream");

  StreamGeometry geo{rep.sample_delay(), L_h};
  const auto c_F = pilot_skeleton(pilots, rep.order_F, L);
  const auto c_S = pilot_skeleton(pilots, rep.order_S, L);
  const auto odd = build_conv_matrices(c_F, c_S, L_h, geo.shift(Packet::S, 0), Lp);
  const auto even = build_conv_matrices(c_F, c_S, L_h, geo.shift(Packet::S, 1), Lp);
  const auto y_odd = stream_samples(stream, rep.start_F, 0, odd.rows());
  const auto y_even = stream_samples(stream, rep.start_F, 1, even.rows());
  res.estimate = joint_estimate(y_odd, y_even, odd, even, geo);

  res.diagnostics = identify_self(stream, known_frame.symbols, rep, cfg.pulse, known_frame.pilot_order);
  res.diagnostics.condition_number = res.estimate.condition_number;
  const Packet self = res.diagnostics.self;
  const Packet unknown = self == Packet::F ? Packet::S : Packet::F;

  const auto residual = cancel_known(y_odd, y_even, known_frame.symbols, res.estimate, self, geo);
  double power = 0.0;
  for (auto z : residual.odd) power += std::norm(z);
  for (auto z : residual.even) power += std::norm(z);
  res.diagnostics.residual_power =
      power / static_cast<double>(std::max<std::size_t>(1, residual.odd.size() + residual.even.size()));

  const std::size_t first = unknown == Packet::F ? 0 : geo.sample_delay;
  const auto first_grid = static_cast<std::int64_t>(first) * kGridPerSample;
  const auto count = static_cast<std::size_t>((L + L_h) * kGridPerSymbol);
  const auto recovered = recover_waveform(residual, first_grid, count, cfg.sinc_taps);
  auto demod = demodulate(recovered, res.estimate, unknown, first, L, Lp, cfg.modulation,
                          cfg.sinc_taps);
  res.bits = std::move(demod.bits);
  res.diagnostics.tau_grid = demod.tau_grid;
  return res;
}

std::vector<std::uint8_t> ml_baseline_decode(const baseband::ContinuousSignal& received,
                                             std::int64_t packet_start_grid,
                                             const baseband::PulseShape& pulse, Complex h,
                                             std::size_t frame_length, std::size_t pilot_length,
                                             baseband::Modulation m) {
  const std::int64_t peak = pulse.peak_grid();
  const Complex inv = 1.0 / (h * pulse.at_grid(peak));
  std::vector<std::uint8_t> bits;
  for (std::size_t n = pilot_length; n + pilot_length < frame_length; ++n) {
    const auto k = packet_start_grid + static_cast<std::int64_t>(n) * kGridPerSymbol + peak;
    baseband::demap_symbol(received.at_grid(k) * inv, m, bits);
  }
  return bits;
}

double measure_ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx) {
  if (tx.size() != rx.size()) {
    throw ParameterError("bit sequences differ in length: " + std::to_string(tx.size()) + " vs " +
                         std::to_string(rx.size()));
  }
  if (tx.empty()) return 0.0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < tx.size(); ++i) errors += (tx[i] & 1u) != (rx[i] & 1u);
  return static_cast<double>(errors) / static_cast<double>(tx.size());
}

}  // namespace trean::phy
