#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"

namespace loylab {

// Quadrature view of one decay channel: sum_i w_i f(e_i) approximates the
// channel integral of f over the energy band.
struct ContinuumGrid {
  RealVector energies;
  RealVector weights;

  Eigen::Index size() const { return energies.size(); }

  void validate() const {
    if (energies.size() == 0 || energies.size() != weights.size())
      throw std::invalid_argument(
          "continuum grid needs matching, nonempty nodes and weights");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
      if (!(weights[i] > 0.0))
        throw std::invalid_argument("grid weights must be positive");
    for (Eigen::Index i = 1; i < energies.size(); ++i)
      if (!(energies[i] > energies[i - 1]))
        throw std::invalid_argument("grid energies must be strictly increasing");
  }

  double median_spacing() const {
    if (energies.size() < 2) return 0.0;
    std::vector<double> d(static_cast<size_t>(energies.size() - 1));
    for (size_t i = 0; i < d.size(); ++i)
      d[i] = energies[static_cast<Eigen::Index>(i) + 1] -
             energies[static_cast<Eigen::Index>(i)];
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
  }

  // Midpoint rule on [lo, hi].
  static ContinuumGrid uniform(double lo, double hi, Eigen::Index n) {
    if (!(hi > lo) || n < 1)
      throw std::invalid_argument("uniform grid needs hi > lo and n >= 1");
    ContinuumGrid g;
    g.energies.resize(n);
    g.weights.resize(n);
    const double h = (hi - lo) / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      g.energies[i] = lo + (static_cast<double>(i) + 0.5) * h;
      g.weights[i] = h;
    }
    return g;
  }

  // Nodes uniform in x = sqrt(e - threshold), e in (threshold, threshold+span].
  // Resolves integrable 1/sqrt(e - threshold) densities at the threshold.
  static ContinuumGrid sqrt_spaced(double threshold, double span, Eigen::Index n) {
    if (!(span > 0.0) || n < 1)
      throw std::invalid_argument("sqrt grid needs span > 0 and n >= 1");
    ContinuumGrid g;
    g.energies.resize(n);
    g.weights.resize(n);
    const double dx = std::sqrt(span) / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = (static_cast<double>(i) + 0.5) * dx;
      g.energies[i] = threshold + x * x;
      g.weights[i] = 2.0 * x * dx;
    }
    return g;
  }
};

// Tabulated coupling families. Values are g(e_i) before the sqrt-weight
// embedding into the Hamiltonian.

inline Vector flat_coupling(const ContinuumGrid& grid, Complex amplitude) {
  return Vector::Constant(grid.size(), amplitude);
}

// |g(e)|^2 is a Lorentzian of half-width `width` centred at `center`,
// peaking at |amplitude|^2.
inline Vector lorentzian_coupling(const ContinuumGrid& grid, Complex amplitude,
                                  double center, double width) {
  if (!(width > 0.0))
    throw std::invalid_argument("lorentzian coupling needs width > 0");
  Vector g(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double d = grid.energies[i] - center;
    g[i] = amplitude * width / std::sqrt(d * d + width * width);
  }
  return g;
}

// |g(e)|^2 = |amplitude|^2 / sqrt(e - threshold). Pair with sqrt_spaced grids
// so the embedded matrix elements stay uniform across the band.
inline Vector inverse_sqrt_density_coupling(const ContinuumGrid& grid,
                                            Complex amplitude, double threshold) {
  Vector g(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double w = grid.energies[i] - threshold;
    if (!(w > 0.0))
      throw std::invalid_argument(
          "inverse sqrt coupling needs all grid energies above the threshold");
    g[i] = amplitude * std::pow(w, -0.25);
  }
  return g;
}

// One decay channel: a grid plus the coupling row g_k(e_i) for every parallel
// state k.
struct Channel {
  std::string label;
  ContinuumGrid grid;
  Matrix couplings;  // (parallel dim) x (grid size)
};

}  // namespace loylab
