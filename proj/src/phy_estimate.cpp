#include <algorithm>
#include <cmath>
#include <limits>

#include "trean/errors.hpp"
#include "trean/phy_decoder.hpp"

namespace trean::phy {

namespace {
constexpr double kMaxCondition = 1e8;
}

std::vector<std::size_t> ConvMatrices::estimation_rows() const {
  const std::size_t R = rows();
  std::vector<std::size_t> idx;
  idx.reserve(2 * pilot_length);
  for (std::size_t k = 0; k < pilot_length; ++k) idx.push_back(k);
  for (std::size_t k = R - pilot_length; k < R; ++k) idx.push_back(k);
  return idx;
}

ConvMatrices build_conv_matrices(std::span<const Complex> c_F, std::span<const Complex> c_S,
                                 std::size_t L_h, std::size_t D, std::size_t L_p) {
  if (L_h == 0) throw ParameterError("L_h must be at least 1");
  const std::size_t R = std::max(c_F.size(), D + c_S.size()) + L_h - 1;
  if (R < L_p) throw ParameterError("frames shorter than the pilot length");
  ConvMatrices m;
  m.pilot_length = L_p;
  m.delay = D;
  const auto rows = static_cast<Eigen::Index>(R);
  const auto cols = static_cast<Eigen::Index>(L_h);
  m.C_F = Eigen::MatrixXcd::Zero(rows, cols);
  m.C_S = Eigen::MatrixXcd::Zero(rows, cols);
  for (std::size_t k = 0; k < R; ++k) {
    for (std::size_t j = 0; j < L_h && j <= k; ++j) {
      const std::size_t f = k - j;
      if (f < c_F.size()) m.C_F(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = c_F[f];
      if (f >= D && f - D < c_S.size()) {
        m.C_S(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = c_S[f - D];
      }
    }
  }
  const auto est = m.estimation_rows();
  m.C_est.resize(static_cast<Eigen::Index>(est.size()), 2 * cols);
  for (std::size_t r = 0; r < est.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(est[r]);
    const auto dst = static_cast<Eigen::Index>(r);
    m.C_est.row(dst).head(cols) = m.C_F.row(src);
    m.C_est.row(dst).tail(cols) = m.C_S.row(src);
  }
  return m;
}

LeastSquares solve_least_squares(const Eigen::MatrixXcd& C, const Eigen::VectorXcd& y) {
  if (C.rows() != y.size()) throw ParameterError("LS dimension mismatch");
  if (C.rows() < C.cols()) throw RankDeficient("fewer equations than unknowns",
                                               std::numeric_limits<double>::infinity());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCondition)) {
    throw RankDeficient("pilot matrix condition number " + std::to_string(cond) + " exceeds 1e8",
                        cond);
  }
  return {svd.solve(y), cond};
}

std::vector<Complex> ChannelEstimate::half_taps(Packet which) const {
  const auto& odd = which == Packet::F ? h_F_odd : h_S_odd;
  const auto& even = which == Packet::F ? h_F_even : h_S_even;
  return baseband::SampleStream::interleave(odd, even);
}

int StreamGeometry::local_parity(Packet which, int p) const {
  if (which == Packet::F) return p;
  return static_cast<int>((static_cast<std::size_t>(p) + sample_delay) % 2);
}

std::size_t StreamGeometry::shift(Packet which, int p) const {
  if (which == Packet::F) return 0;
  const int q = local_parity(which, p);
  return (sample_delay + static_cast<std::size_t>(q) - static_cast<std::size_t>(p)) / 2;
}

std::vector<Complex> stream_samples(const baseband::SampleStream& stream, std::size_t start_F,
                                    int p, std::size_t rows) {
  std::vector<Complex> y(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const std::size_t i = start_F + 2 * k + static_cast<std::size_t>(p);
    if (i < stream.samples.size()) y[k] = stream.samples[i];
  }
  return y;
}

ChannelEstimate joint_estimate(std::span<const Complex> y_odd, std::span<const Complex> y_even,
                               const ConvMatrices& odd, const ConvMatrices& even,
                               const StreamGeometry& geo) {
  ChannelEstimate est;
  const auto L_h = static_cast<std::size_t>(odd.C_F.cols());
  for (int p = 0; p < 2; ++p) {
    const auto& mats = p == 0 ? odd : even;
    const auto y = p == 0 ? y_odd : y_even;
    const auto rows = mats.estimation_rows();
    Eigen::VectorXcd ye(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      ye(static_cast<Eigen::Index>(r)) = rows[r] < y.size() ? y[rows[r]] : Complex{};
    }
    const auto ls = solve_least_squares(mats.C_est, ye);
    est.condition_number = std::max(est.condition_number, ls.condition_number);
    std::vector<Complex> f(L_h), s(L_h);
    for (std::size_t j = 0; j < L_h; ++j) {
      f[j] = ls.x(static_cast<Eigen::Index>(j));
      s[j] = ls.x(static_cast<Eigen::Index>(L_h + j));
    }
    (p == 0 ? est.h_F_odd : est.h_F_even) = std::move(f);
    (geo.local_parity(Packet::S, p) == 0 ? est.h_S_odd : est.h_S_even) = std::move(s);
  }
  return est;
}

}  // namespace trean::phy
