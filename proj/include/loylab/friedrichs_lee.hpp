#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "symmetry.hpp"

namespace loylab {

// Lowest nontrivial sector of the generalized Friedrichs-Lee Hamiltonian:
// two unstable levels |V1>, |V2> over channels |n, omega> with energies
// mu_n + omega and couplings g_jn(omega) = gamma_jn * u_n(omega).

enum class FLShape { flat, inverse_sqrt_density, lorentzian };

struct FLChannel {
  std::string label;
  double mu = 0.0;  // channel threshold mass
  Complex g1{0.0, 0.0}, g2{0.0, 0.0};
  double span = 0.0;  // coupling support [0, span] in omega
  Eigen::Index points = 0;
  FLShape shape = FLShape::inverse_sqrt_density;
  double center = 0.0, width = 0.0;  // lorentzian parameters (omega units)

  double shape_value(double omega) const {
    switch (shape) {
      case FLShape::flat:
        return 1.0;
      case FLShape::inverse_sqrt_density:
        if (!(omega > 0.0))
          throw std::invalid_argument("inverse sqrt shape needs omega > 0");
        return std::pow(omega, -0.25);
      case FLShape::lorentzian: {
        const double d = omega - center;
        return width / std::sqrt(d * d + width * width);
      }
    }
    throw std::invalid_argument("unknown coupling shape");
  }

  ContinuumGrid make_grid() const {
    if (shape == FLShape::inverse_sqrt_density)
      return ContinuumGrid::sqrt_spaced(mu, span, points);
    return ContinuumGrid::uniform(mu, mu + span, points);
  }
};

struct FLParams {
  Matrix mass;  // 2x2 Hermitian PHP block; state 1 is the K0-like level
  std::vector<FLChannel> channels;
};

inline FullModel build_fl_sector(const FLParams& p) {
  require_hermitian(p.mass, "FL mass matrix");
  if (p.mass.rows() != 2)
    throw std::invalid_argument("FL sector has a 2x2 mass matrix");
  if (p.channels.empty())
    throw std::invalid_argument("FL sector needs at least one channel");
  const double m0 = 0.5 * std::real(p.mass(0, 0) + p.mass(1, 1));
  const Matrix h1 = p.mass - m0 * Matrix::Identity(2, 2);
  std::vector<Channel> chans;
  chans.reserve(p.channels.size());
  for (const auto& c : p.channels) {
    Channel ch;
    ch.label = c.label;
    ch.grid = c.make_grid();
    ch.couplings.resize(2, ch.grid.size());
    for (Eigen::Index i = 0; i < ch.grid.size(); ++i) {
      const double u = c.shape_value(ch.grid.energies[i] - c.mu);
      ch.couplings(0, i) = c.g1 * u;
      ch.couplings(1, i) = c.g2 * u;
    }
    chans.push_back(std::move(ch));
  }
  return build_model(m0, h1, chans,
                     "lowest Friedrichs-Lee sector; state 1 = K0-like, "
                     "state 2 = K0bar-like");
}

// Width matrix Gamma_jk f(lambda) = pi sum_n g*_nj(lambda) g_nk(lambda) with
// g_nj = conj(g_jn). f defaults to 1; channels whose support ends below
// lambda contribute nothing.
inline Matrix fl_gamma(const FLParams& p, double lambda,
                       const std::function<double(double)>& f = {}) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("fl_gamma needs lambda > 0");
  const double fv = f ? f(lambda) : 1.0;
  if (!(fv > 0.0))
    throw std::invalid_argument("weight f(lambda) must be positive");
  Matrix g = Matrix::Zero(2, 2);
  for (const auto& c : p.channels) {
    if (lambda > c.span) continue;
    const double u = c.shape_value(lambda);
    const Complex gj[2] = {c.g1 * u, c.g2 * u};
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        g(j, k) += M_PI * gj[j] * std::conj(gj[k]) / fv;
  }
  return g;
}

// Closed-form estimates of the improved diagonal splitting for the CPT
// sector (equal channel thresholds, m11 = m22 = m0). The widths entering
// them carry the golden-rule normalization Gamma_jk = 2 pi sum_n g_jn g*_kn
// at the on-shell point m0 - mu, which matches the decay matrix of the
// resolvent route.
struct FLAnalytic {
  Complex exact;    // the square-root bracket form
  Complex approx2;  // leading order in |m12|/(m0 - mu)
  double approx3;   // same, split into Re/Im parts of m12 and Gamma12
  double approx4;   // with gamma_s - gamma_l = 2 Re Gamma_12
  Matrix gamma;     // on-shell width matrix
  double gamma_s = 0.0, gamma_l = 0.0;
  double mass_gap = 0.0;  // m0 - mu
};

inline FLAnalytic fl_diag_difference_analytic(const FLParams& p) {
  require_hermitian(p.mass, "FL mass matrix");
  if (p.channels.empty())
    throw std::invalid_argument("FL sector needs at least one channel");
  const double mu = p.channels.front().mu;
  for (const auto& c : p.channels)
    if (std::abs(c.mu - mu) > 1e-12 * std::max(1.0, std::abs(mu)))
      throw std::invalid_argument(
          "analytic estimates need one common channel threshold");
  const Complex m12 = p.mass(0, 1);
  const Complex m21 = p.mass(1, 0);
  const double m0 = std::real(p.mass(0, 0));
  if (std::abs(p.mass(0, 0) - p.mass(1, 1)) >
      1e-12 * std::max(1.0, p.mass.norm()))
    throw std::invalid_argument("analytic estimates assume m11 = m22");
  const double gap = m0 - mu;
  const double kappa = std::abs(m12);
  if (!(gap > kappa))
    throw std::domain_error(
        "square-root branch needs m0 - mu > |m12|; regime rejected");

  FLAnalytic out;
  out.mass_gap = gap;
  out.gamma = fl_gamma(p, gap, [](double) { return 0.5; });
  const Complex g12 = out.gamma(0, 1);
  const Complex g21 = out.gamma(1, 0);
  out.gamma_s = std::real(out.gamma(0, 0)) + std::real(g12);
  out.gamma_l = std::real(out.gamma(0, 0)) - std::real(g12);
  out.approx2 = ii * (m21 * g12 - m12 * g21) / (4.0 * gap);
  out.approx3 = (-std::real(m12) * std::imag(g12) +
                 std::imag(m12) * std::real(g12)) /
                (2.0 * gap);
  out.approx4 = std::imag(m12) * (out.gamma_s - out.gamma_l) / (4.0 * gap);
  if (kappa == 0.0) {
    out.exact = 0.0;
    return out;
  }
  const double bracket = std::sqrt(gap) * (1.0 / std::sqrt(gap - kappa) -
                                           1.0 / std::sqrt(gap + kappa));
  out.exact = (ii / 4.0) * (m21 * g12 - m12 * g21) / kappa * bracket;
  return out;
}

// Neutral-kaon magnitude of the splitting per unit Im(m12):
// gamma_s / (4 (m0 - mu)) with gamma_s = hbar / tau_s, tau_s = 0.89e-10 s,
// m0 - mu = m_K - 2 m_pi ~ 200 MeV. Inputs and output in MeV.
inline double fl_estimate_kaon(double im_m12_mev) {
  constexpr double hbar_mev_s = 6.582e-22;
  constexpr double tau_s_s = 0.89e-10;
  constexpr double mass_gap_mev = 200.0;
  constexpr double gamma_s_mev = hbar_mev_s / tau_s_s;
  return im_m12_mev * gamma_s_mev / (4.0 * mass_gap_mev);
}

struct FLCrossValidation {
  Complex numeric;   // diag_difference of the improved Hamiltonian
  Complex analytic;  // square-root bracket estimate
  double relative_gap = 0.0;
  double eta = 0.0;
  Eigen::Index grid_points = 0;
};

inline FLCrossValidation fl_cross_validate(const FLParams& p,
                                           std::optional<double> eta = {}) {
  const FullModel model = build_fl_sector(p);
  const EffectiveHamiltonian h = h_loy_imp(model, eta);
  FLCrossValidation out;
  out.numeric = diag_difference(h);
  out.analytic = fl_diag_difference_analytic(p).exact;
  out.eta = h.eta;
  out.grid_points = model.q_dim();
  const double scale = std::abs(out.analytic);
  out.relative_gap = scale > 0.0 ? std::abs(out.numeric - out.analytic) / scale
                                 : std::abs(out.numeric);
  return out;
}

}  // namespace loylab
