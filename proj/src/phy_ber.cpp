#include <cstdio>
#include <numbers>
#include <random>

#include "trean/errors.hpp"
#include "trean/phy_decoder.hpp"
#include "trean/rng.hpp"

namespace trean::phy {

namespace {

std::size_t count_errors(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx) {
  if (tx.size() != rx.size()) return tx.size();
  std::size_t e = 0;
  for (std::size_t i = 0; i < tx.size(); ++i) e += (tx[i] & 1u) != (rx[i] & 1u);
  return e;
}

struct FrameOutcome {
  std::size_t bits = 0;
  std::size_t errors = 0;
  std::size_t baseline_errors = 0;
  bool failed = false;
};

FrameOutcome run_frame(const BerPoint& pt, const DecoderConfig& cfg,
                       const baseband::PilotPair& pilots, std::uint64_t frame) {
  using namespace baseband;
  std::mt19937_64 rng(derive_seed(pt.seed, {frame, 0}));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<std::int64_t> delay(0, static_cast<std::int64_t>(pt.max_delay_symbols) * kGridPerSymbol);
  std::uniform_int_distribution<std::int64_t> offset(0, kGridPerSample - 1);
  std::bernoulli_distribution coin(0.5);

  const std::size_t nbits = pt.data_symbols * static_cast<std::size_t>(bits_per_symbol(pt.modulation));
  const auto bits_a = random_bits(nbits, derive_seed(pt.seed, {frame, 1}));
  const auto bits_b = random_bits(nbits, derive_seed(pt.seed, {frame, 2}));
  const auto frame_a = modulate(bits_a, pt.modulation, pilots, PilotOrder::Normal);
  const auto frame_b = modulate(bits_b, pt.modulation, pilots, PilotOrder::Swapped);

  const bool a_first = coin(rng);
  const bool receiver_is_a = coin(rng);
  ChannelRealization ch;
  ch.h_F = std::polar(1.0, phase(rng));
  ch.h_S = std::polar(1.0, phase(rng));
  ch.delay_grid = delay(rng);
  ch.offset_grid = offset(rng);

  const auto& first = a_first ? frame_a : frame_b;
  const auto& second = a_first ? frame_b : frame_a;
  const auto& known = receiver_is_a ? frame_a : frame_b;
  const auto& wanted_bits = receiver_is_a ? bits_b : bits_a;
  const bool unknown_is_first = (a_first != receiver_is_a);
  const auto& unknown_frame = unknown_is_first ? first : second;
  const Complex h_unknown = unknown_is_first ? ch.h_F : ch.h_S;

  FrameOutcome out;
  out.bits = nbits;
  const auto clean = synthesize_received(first, second, cfg.pulse, cfg.pulse, ch);
  const auto noisy = add_awgn(clean, pt.snr_db, derive_seed(pt.seed, {frame, 3}));
  const auto stream = sample_half_symbol(noisy, ch.offset());
  try {
    const auto res = decode_superposed(stream, known, pilots, cfg);
    out.errors = count_errors(wanted_bits, res.bits);
  } catch (const std::runtime_error&) {
    out.failed = true;
    out.errors = nbits;
  }

  const auto alone = synthesize_packet(unknown_frame, cfg.pulse, h_unknown, 0);
  const auto alone_noisy = add_awgn(alone, pt.snr_db, derive_seed(pt.seed, {frame, 4}));
  const auto base_bits = ml_baseline_decode(alone_noisy, 0, cfg.pulse, h_unknown,
                                            unknown_frame.length(), pilots.length(), pt.modulation);
  out.baseline_errors = count_errors(wanted_bits, base_bits);
  return out;
}

}  // namespace

BerResult run_ber_point(const BerPoint& pt, const DecoderConfig& base) {
  if (pt.data_symbols == 0 || pt.frames == 0) throw ParameterError("empty BER point");
  DecoderConfig cfg = base;
  cfg.modulation = pt.modulation;
  cfg.frame_length = pt.data_symbols + 2 * pt.pilot_length;
  const auto pilots = baseband::make_pilot_pair(pt.pilot_length, derive_seed(pt.seed, {~0ULL}));

  std::size_t bits = 0, errors = 0, baseline = 0, failures = 0;
  const auto frames = static_cast<std::int64_t>(pt.frames);
#pragma omp parallel for schedule(dynamic) reduction(+ : bits, errors, baseline, failures)
  for (std::int64_t f = 0; f < frames; ++f) {
    const auto o = run_frame(pt, cfg, pilots, static_cast<std::uint64_t>(f));
    bits += o.bits;
    errors += o.errors;
    baseline += o.baseline_errors;
    failures += o.failed ? 1 : 0;
  }

  BerResult r;
  r.point = pt;
  r.trials = pt.frames;
  r.bits = bits;
  r.bit_errors = errors;
  r.baseline_errors = baseline;
  r.failures = failures;
  return r;
}

std::string ber_csv_header() {
  return "modulation,snr_db,delay_symbols,trials,bit_errors,ber,baseline_ber";
}

std::string ber_csv_row(const BerResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.3f,%zu,%zu,%zu,%.8g,%.8g", baseband::to_string(r.point.modulation),
                r.point.snr_db, r.point.max_delay_symbols, r.trials, r.bit_errors, r.ber(),
                r.baseline_ber());
  return buf;
}

}  // namespace trean::phy
