// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is 0 unless a criterion throws; --strict also fails on FAIL.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "trean/analytic.hpp"
#include "trean/baseband.hpp"
#include "trean/config.hpp"
#include "trean/errors.hpp"
#include "trean/experiments.hpp"
#include "trean/phy_decoder.hpp"

using namespace trean;
using baseband::Complex;
using baseband::Modulation;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1. noiseless PHY ----------------------------------------------------

Outcome phy_noiseless() {
  const Modulation mods[] = {Modulation::BPSK, Modulation::QPSK, Modulation::QAM16, Modulation::QAM64};
  constexpr int kSeeds = 50, kDelays = 9;
  const int total = 4 * kDelays * kSeeds;
  std::vector<double> ber(static_cast<std::size_t>(total), 1.0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < total; ++i) {
    const auto m = mods[i / (kDelays * kSeeds)];
    const int D = (i / kSeeds) % kDelays;
    const auto seed = static_cast<std::uint64_t>(i) + 1000;
    std::mt19937_64 rng(seed);
    const std::int64_t frac = std::uniform_int_distribution<int>(0, baseband::kGridPerSymbol - 1)(rng);
    const std::int64_t offset = std::uniform_int_distribution<int>(0, baseband::kGridPerSample - 1)(rng);
    const bool known_a = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    const double phase_a = std::uniform_real_distribution<double>(0, 6.28)(rng);
    const double phase_b = std::uniform_real_distribution<double>(0, 6.28)(rng);

    phy::DecoderConfig cfg;
    cfg.modulation = m;
    cfg.frame_length = 2 * 64 + 200;
    const auto pilots = baseband::make_pilot_pair(64, seed);
    const std::size_t nbits = 200 * static_cast<std::size_t>(baseband::bits_per_symbol(m));
    const auto bits_a = baseband::random_bits(nbits, seed * 7 + 1);
    const auto bits_b = baseband::random_bits(nbits, seed * 7 + 2);
    const auto fa = baseband::modulate(bits_a, m, pilots, baseband::PilotOrder::Normal);
    const auto fb = baseband::modulate(bits_b, m, pilots, baseband::PilotOrder::Swapped);
    const baseband::ChannelRealization ch{std::polar(1.0, phase_a), std::polar(0.8, phase_b),
                                          D * baseband::kGridPerSymbol + frac, offset};
    const auto y = baseband::synthesize_received(fa, fb, cfg.pulse, cfg.pulse, ch);
    const auto stream = baseband::sample_half_symbol(y, ch.offset());
    try {
      const auto res = phy::decode_superposed(stream, known_a ? fa : fb, pilots, cfg);
      ber[static_cast<std::size_t>(i)] = phy::measure_ber(known_a ? bits_b : bits_a, res.bits);
    } catch (const std::exception&) {
    }
  }
  const auto bad = std::count_if(ber.begin(), ber.end(), [](double b) { return b != 0.0; });
  return {bad == 0, fmt("%ld of %d frames with BER > 0 (want 0)", static_cast<long>(bad), total)};
}

// ---- 2. PHY against the single-user baseline -----------------------------

Outcome phy_vs_baseline() {
  const std::vector<double> snrs{4, 6, 8, 10, 12};
  std::vector<phy::BerResult> res(snrs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < snrs.size(); ++i) {
    phy::BerPoint p;
    p.snr_db = snrs[i];
    p.data_symbols = 1000;
    p.frames = 100;  // 1e5 bits
    p.seed = 500 + i;
    res[i] = phy::run_ber_point(p, phy::DecoderConfig{});
  }
  bool ok = true;
  std::string d;
  for (const auto& r : res) {
    const double base = r.baseline_ber();
    const double bound = std::min(2.0 * base, base + oracle::three_sigma(base, static_cast<double>(r.bits)));
    const bool good = r.ber() <= bound;
    ok = ok && good;
    d += fmt("%s%gdB %.2e/%.2e%s", d.empty() ? "" : ", ", r.point.snr_db, r.ber(), base, good ? "" : "*");
  }
  return {ok, "pipeline/baseline BER " + d + " (* exceeds min(2x, +3 sigma))"};
}

// ---- 3. least squares against normal equations ---------------------------

Outcome ls_oracle() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n01;
  std::uniform_int_distribution<int> coin(0, 1);
  double worst = 0.0;
  int solved = 0, redrawn = 0;
  while (solved < 200) {
    const std::size_t Lh = 1 + static_cast<std::size_t>(coin(rng));
    const std::size_t L = std::uniform_int_distribution<std::size_t>(5, 12)(rng);
    const std::size_t Lp = std::uniform_int_distribution<std::size_t>(2, L / 2)(rng);
    const std::size_t D = std::uniform_int_distribution<std::size_t>(0, L - 1)(rng);
    std::vector<Complex> a(L), b(L);
    for (auto& z : a) z = {n01(rng), n01(rng)};
    for (auto& z : b) z = {n01(rng), n01(rng)};
    const auto m = phy::build_conv_matrices(a, b, Lh, D, Lp);
    Eigen::VectorXcd h(static_cast<Eigen::Index>(2 * Lh));
    for (auto& z : h) z = {n01(rng), n01(rng)};
    const Eigen::VectorXcd y = m.C_est * h;
    oracle::cmat C(static_cast<std::size_t>(m.C_est.rows()), oracle::cvec(2 * Lh));
    oracle::cvec yy(C.size());
    for (std::size_t r = 0; r < C.size(); ++r) {
      for (std::size_t c = 0; c < 2 * Lh; ++c) {
        C[r][c] = m.C_est(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
      yy[r] = y(static_cast<Eigen::Index>(r));
    }
    phy::LeastSquares ls;
    try {
      ls = phy::solve_least_squares(m.C_est, y);
    } catch (const RankDeficient&) {
      ++redrawn;
      continue;
    }
    const auto ref = oracle::normal_equations(C, yy);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(ls.x(static_cast<Eigen::Index>(i)) - ref[i]));
    }
    ++solved;
  }
  return {worst <= 1e-9, fmt("max |x_ls - x_ne| = %.2e over 200 instances, %d rank-deficient redrawn (tol 1e-9)",
                             worst, redrawn)};
}

// ---- 4. backoff chain against the explicit transition matrix -------------

Outcome markov_oracle() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.02, 0.9);
  const int w0s[] = {2, 4, 8};
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int w0 = w0s[k % 3], m = (k / 3) % 3;
    const double pf = u(rng), pc = 0.5 * u(rng);
    const auto ref = oracle::markov_stationary(pf, pc, w0, m);
    const auto got = analytic::stationary_distribution(pf, pc, w0, m);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      for (std::size_t j = 0; j < ref[i].size(); ++j) worst = std::max(worst, std::abs(got.v[i][j] - ref[i][j]));
    }
  }
  return {worst <= 1e-6, fmt("max |v - v_ref| = %.2e over 20 points (tol 1e-6)", worst)};
}

// ---- 5, 6. small scale ---------------------------------------------------

const exp::Table& small_runs() {
  static const exp::Table t = [] {
    auto e = config::Experiment::small_scale();
    e.sweep.n = {5, 10, 20, 40};
    e.repetitions = 10;
    e.sim.duration_s = 2.0;
    e.sim.mode = mac::Mode::Basic;
    e.seed = 51;
    return exp::sim_small(e);
  }();
  return t;
}

std::vector<double> column_where(const exp::Table& t, const std::string& col,
                                 const std::function<bool(std::size_t)>& keep) {
  std::vector<double> v;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (keep(r)) v.push_back(t.number(r, col));
  }
  return v;
}

double mean_where(const exp::Table& t, const std::string& col, const std::function<bool(std::size_t)>& keep) {
  return exp::describe(column_where(t, col, keep)).mean;
}

Outcome small_model_vs_sim() {
  const auto& t = small_runs();
  bool ok = true;
  std::string d;
  for (int n : {5, 10, 20, 40}) {
    const double sim = mean_where(t, "throughput_mbps", [&](std::size_t r) {
      return t.number(r, "n") == n && t.text(r, "mode") == "basic";
    });
    analytic::SmallScaleParams p;
    p.n = n;
    const double model = analytic::small_scale_fixed_point(p).throughput.bits_per_s / 1e6;
    const double err = std::abs(model - sim) / sim;
    ok = ok && err <= 0.03;
    d += fmt("%sn=%d %.2f/%.2f (%.1f%%)", d.empty() ? "" : ", ", n, model, sim, 100 * err);
  }
  return {ok, "model/sim Mb/s " + d + " (tol 3%)"};
}

Outcome throughput_gain() {
  const auto& t = small_runs();
  auto at = [&](const char* mode) {
    return mean_where(t, "throughput_mbps", [&](std::size_t r) { return t.number(r, "n") == 20 && t.text(r, "mode") == mode; });
  };
  const double trean = at("basic"), csma = at("csma");
  return {trean >= 1.8 * csma, fmt("n=20 basic %.2f vs CSMA/CA %.2f Mb/s, gain %.2fx (want >= 1.8x)", trean, csma,
                                   trean / csma)};
}

// ---- 7. large scale ------------------------------------------------------

bool unimodal(const std::vector<double>& v) {
  std::size_t i = 1;
  while (i < v.size() && v[i] >= v[i - 1]) ++i;
  while (i < v.size() && v[i] <= v[i - 1]) ++i;
  return i == v.size();
}

Outcome large_model_vs_sim() {
  auto e = config::Experiment::large_scale();
  e.sweep.r_s = {2.2, 2.4, 2.6, 2.8, 3.0};
  e.repetitions = 5;
  e.sim.duration_s = 2.0;
  e.seed = 71;
  const auto sim = exp::sim_large(e);
  const auto model = exp::analytic_large(e);
  bool ok = true;
  std::string d;
  std::vector<double> sims, models;
  for (std::size_t i = 0; i < e.sweep.r_s.size(); ++i) {
    const double rs = e.sweep.r_s[i];
    const double s = mean_where(sim, "throughput_mbps", [&](std::size_t r) { return sim.number(r, "r_s") == rs; });
    const double m = model.number(i, "throughput_mbps");
    const double err = std::abs(m - s) / s;
    ok = ok && err <= 0.10;
    sims.push_back(s);
    models.push_back(m);
    d += fmt("%s%.1f %.0f/%.0f (%.0f%%)", d.empty() ? "" : ", ", rs, m, s, 100 * err);
  }
  const bool shape = unimodal(sims) && unimodal(models);
  return {ok && shape, "model/sim Mb/s " + d + (shape ? ", both unimodal" : ", NOT unimodal") + " (tol 10%)"};
}

// ---- 8. modes ------------------------------------------------------------

Outcome mode_comparison() {
  auto e = config::Experiment::small_scale();
  e.topology.n = 40;
  e.sweep.atc_probability = {0.0, 0.1, 0.2, 0.3};
  e.sweep.modes = {mac::Mode::Basic, mac::Mode::Extended, mac::Mode::ExtendedPlus};
  e.repetitions = 5;
  e.sim.duration_s = 2.0;
  e.seed = 81;
  const auto t = exp::modes_compare(e);
  auto phi = [&](double a, const std::string& mode) {
    return mean_where(t, "throughput_mbps", [&](std::size_t r) {
      return t.number(r, "atc_probability") == a && t.text(r, "mode") == mode;
    });
  };
  bool ok = true;
  std::string d;
  for (double a : {0.1, 0.2, 0.3}) {
    const double ext = phi(a, "extended"), basic = phi(a, "basic");
    ok = ok && ext > basic;
    d += fmt("atc %.1f ext %.1f basic %.1f; ", a, ext, basic);
  }
  const double csma = phi(0.0, "csma");
  double worst = 0.0;
  for (const char* m : {"basic", "extended", "extended_plus"}) worst = std::max(worst, phi(0.0, m));
  ok = ok && worst < csma;
  d += fmt("atc 0 best TREAN %.2f vs CSMA/CA %.2f Mb/s", worst, csma);
  return {ok, d};
}

// ---- 9. CPP fairness -----------------------------------------------------

Outcome cpp_fairness() {
  auto e = config::Experiment::fairness();
  e.repetitions = 5;
  e.seed = 91;
  const auto t = exp::cpp_fairness(e);
  auto avg = [&](int cpp, const char* col) {
    return mean_where(t, col, [&](std::size_t r) { return t.number(r, "cpp_enabled") == cpp; });
  };
  const double on = avg(1, "ratio"), off = avg(0, "ratio");
  const double tot_on = avg(1, "total_mbps"), tot_off = avg(0, "total_mbps");
  const double change = std::abs(tot_off - tot_on) / tot_on;
  return {on >= 0.5 && off < 0.2 && change < 0.10,
          fmt("min/max ratio with CPP %.3f (want >= 0.5), without %.3f (want < 0.2), total change %.1f%% (want < 10%%)",
              on, off, 100 * change)};
}

// ---- 10. ACK robustness --------------------------------------------------

Outcome ack_robustness() {
  auto e = config::Experiment::large_scale();
  e.sweep.r_s = {2.2, 2.4, 2.6, 2.8, 3.0};
  e.repetitions = 3;
  e.sim.duration_s = 2.0;
  e.seed = 101;
  const auto t = exp::ack_loss(e);
  bool decreasing = true;
  std::string d;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (r > 0) decreasing = decreasing && t.number(r, "immediate_loss") < t.number(r - 1, "immediate_loss");
    d += fmt("%s%.1f %.2f%%", d.empty() ? "" : ", ", t.number(r, "r_s"), 100 * t.number(r, "immediate_loss"));
  }
  const double fin = t.number(0, "final_unacked");
  return {decreasing && fin < 0.001, "immediate loss " + d + (decreasing ? " (decreasing)" : " (NOT decreasing)") +
                                          fmt("; final unacked at 2.2 %.3f%% (want < 0.1%%)", 100 * fin)};
}

// ---- 11. disk geometry ---------------------------------------------------

Outcome geometry_oracle() {
  double worst = 0.0;
  std::string d;
  for (auto [rs, thr] : {std::pair{2.2, 2.78}, std::pair{2.6, 2.78}, std::pair{3.0, 1.5}}) {
    const double mc = analytic::disk_pair_prob(rs, thr, 1'000'000, 17).p;
    const double exact = 1.0 - oracle::disk_distance_cdf(thr, rs);
    worst = std::max(worst, std::abs(mc - exact));
    d += fmt("%s%.4f/%.4f", d.empty() ? "" : ", ", mc, exact);
  }
  return {worst <= 1e-3, "p_2c MC/exact " + d + fmt(", max diff %.1e (tol 1e-3)", worst)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  const std::vector<Criterion> all{
      {1, "phy-noiseless", 120, phy_noiseless},          {2, "phy-vs-baseline", 600, phy_vs_baseline},
      {3, "ls-oracle", 60, ls_oracle},                   {4, "markov-oracle", 60, markov_oracle},
      {5, "small-model-vs-sim", 900, small_model_vs_sim}, {6, "throughput-gain", 300, throughput_gain},
      {7, "large-model-vs-sim", 2700, large_model_vs_sim}, {8, "mode-comparison", 900, mode_comparison},
      {9, "cpp-fairness", 300, cpp_fairness},            {10, "ack-robustness", 600, ack_robustness},
      {11, "geometry-oracle", 60, geometry_oracle},
  };
  int failed = 0, errors = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = s < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s %2d %-19s %s [%.1f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s,
                c.limit_s, in_time ? "" : ", OVER");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return errors > 0 || (strict && failed > 0) ? 1 : 0;
}
