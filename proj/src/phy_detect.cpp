#include <algorithm>
#include <cmath>

#include "trean/errors.hpp"
#include "trean/kernels.hpp"
#include "trean/phy_decoder.hpp"

namespace trean::phy {

using baseband::PilotOrder;

std::size_t BoundaryReport::sample_delay() const {
  if (!start_S) throw DetectionFailure("no second packet in the report");
  return *start_S - start_F;
}

std::vector<Complex> pilot_correlation(std::span<const Complex> samples,
                                       std::span<const double> pilot) {
  return kernels::correlate({samples, pilot});
}

namespace {

struct Peak {
  std::size_t index = 0;
  double value = 0.0;
  bool found = false;
};

double median_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  std::vector<double> tmp(v.begin(), v.end());
  auto mid = tmp.begin() + static_cast<std::ptrdiff_t>(tmp.size() / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  return *mid;
}

// Median of the score over a window of `width` entries around i.
double local_median(const std::vector<double>& score, std::size_t i, std::size_t width) {
  const std::size_t n = score.size();
  width = std::min(width, n);
  std::size_t lo = i >= width / 2 ? i - width / 2 : 0;
  if (lo + width > n) lo = n - width;
  return median_of(std::span<const double>(score).subspan(lo, width));
}

Peak find_peak(const std::vector<double>& score, std::size_t window, double kappa,
               std::size_t separation, double ambiguity_ratio, const char* label) {
  Peak p;
  if (score.empty()) return p;
  const auto it = std::max_element(score.begin(), score.end());
  p.index = static_cast<std::size_t>(it - score.begin());
  p.value = *it;
  if (!(p.value > 0.0)) return p;
  const double threshold = kappa * local_median(score, p.index, window);
  const double left = p.index > 0 ? score[p.index - 1] : 0.0;
  const double right = p.index + 1 < score.size() ? score[p.index + 1] : 0.0;
  if (p.value <= threshold || std::max(left, right) <= threshold) return p;
  p.found = true;

  for (std::size_t i = 0; i < score.size(); ++i) {
    const std::size_t gap = i > p.index ? i - p.index : p.index - i;
    if (gap > separation && score[i] >= ambiguity_ratio * p.value && score[i] > threshold) {
      throw AmbiguousDetection(std::string("second ") + label + " pilot peak at sample " +
                               std::to_string(i) + " next to " + std::to_string(p.index));
    }
  }
  return p;
}

// Fits the nominal |g(phase + m T/2)| profile to the score around `peak`.
// Returns the first-sample index and the fitted phase in grid units.
std::pair<std::size_t, int> fit_start(const std::vector<double>& score, std::size_t peak,
                                      const baseband::PulseShape& pulse) {
  const auto half_taps = static_cast<std::size_t>(2 * pulse.support_symbols());
  std::size_t best_start = peak;
  int best_phase = 0;
  double best = -1.0;
  const std::size_t lo = peak + 1 >= half_taps ? peak + 1 - half_taps : 0;
  for (int phase = 0; phase < baseband::kGridPerSample; ++phase) {
    std::vector<double> profile(half_taps);
    double norm = 0.0;
    for (std::size_t m = 0; m < half_taps; ++m) {
      profile[m] = std::abs(pulse.at_grid(phase + static_cast<std::int64_t>(m) * baseband::kGridPerSample));
      norm += profile[m] * profile[m];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    for (std::size_t a = lo; a <= peak; ++a) {
      double dot = 0.0;
      for (std::size_t m = 0; m < half_taps && a + m < score.size(); ++m) dot += score[a + m] * profile[m];
      dot /= norm;
      if (dot > best + 1e-12 * std::abs(best)) {
        best = dot;
        best_start = a;
        best_phase = phase;
      }
    }
  }
  return {best_start, best_phase};
}

}  // namespace

BoundaryReport detect_boundaries(const baseband::SampleStream& stream,
                                 const baseband::PilotPair& pilots, const DecoderConfig& cfg) {
  const std::size_t L = cfg.frame_length;
  const std::size_t Lp = pilots.length();
  if (L <= 2 * Lp) throw ParameterError("frame length must exceed both pilots");
  const auto& s = stream.samples;
  const std::size_t n = s.size();

  const auto SP = pilot_correlation(s, pilots.preamble);
  const auto SQ = pilot_correlation(s, pilots.postamble);
  const std::size_t E = 2 * (L - Lp);

  BoundaryReport r;
  r.normal_score.assign(n, 0.0);
  r.swapped_score.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double trail_q = i + E < n ? std::abs(SQ[i + E]) : 0.0;
    const double trail_p = i + E < n ? std::abs(SP[i + E]) : 0.0;
    r.normal_score[i] = std::abs(SP[i]) + trail_q;
    r.swapped_score[i] = std::abs(SQ[i]) + trail_p;
  }

  const std::size_t half_taps = 2 * cfg.taps_per_stream();
  const std::size_t separation = 2 * half_taps + 2;
  const Peak pn = find_peak(r.normal_score, 4 * Lp, cfg.threshold_factor, separation,
                            cfg.ambiguity_ratio, "NORMAL");
  const Peak ps = find_peak(r.swapped_score, 4 * Lp, cfg.threshold_factor, separation,
                            cfg.ambiguity_ratio, "SWAPPED");
  if (!pn.found && !ps.found) throw DetectionFailure("no pilot spike above threshold");

  struct Found {
    std::size_t start;
    int phase;
    PilotOrder order;
  };
  std::vector<Found> found;
  if (pn.found) {
    auto [a, ph] = fit_start(r.normal_score, pn.index, cfg.pulse);
    found.push_back({a, ph, PilotOrder::Normal});
  }
  if (ps.found) {
    auto [a, ph] = fit_start(r.swapped_score, ps.index, cfg.pulse);
    found.push_back({a, ph, PilotOrder::Swapped});
  }
  if (found.size() == 2 && found[1].start < found[0].start) std::swap(found[0], found[1]);

  const std::size_t span = 2 * (L - 1) + half_taps;
  r.start_F = found[0].start;
  r.end_F = std::min(n, r.start_F + span);
  r.order_F = found[0].order;
  r.phase_F = static_cast<double>(found[0].phase) / baseband::kGridPerSymbol;
  if (found.size() == 2) {
    r.start_S = found[1].start;
    r.end_S = std::min(n, found[1].start + span);
    r.order_S = found[1].order;
    r.phase_S = static_cast<double>(found[1].phase) / baseband::kGridPerSymbol;
  } else {
    r.order_S = r.order_F == PilotOrder::Normal ? PilotOrder::Swapped : PilotOrder::Normal;
  }
  return r;
}

}  // namespace trean::phy
