#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "symmetry.hpp"

namespace loylab {

// Seeded generator with explicit transforms, so sweeps reproduce
// byte-identically across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Complex phase() {
    const double a = uniform(0.0, 2.0 * M_PI);
    return {std::cos(a), std::sin(a)};
  }
  Complex complex_in_disc(double radius) {
    return radius * std::sqrt(uniform()) * phase();
  }
  std::uint64_t integer(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

inline Matrix random_hermitian(Rng& rng, Eigen::Index n, double scale) {
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  Matrix h = 0.5 * (a + a.adjoint());
  return scale * h;
}

// Weakly coupled two-level model: m0 inside a flat band, smooth Lorentzian
// couplings, coupling scale well below the internal level splitting.
inline FullModel random_weak_two_level(Rng& rng, Eigen::Index grid_points = 60) {
  const double m0 = rng.uniform(8.0, 12.0);
  const double half_band = rng.uniform(5.0, 8.0);
  Matrix h1 = random_hermitian(rng, 2, rng.uniform(0.05, 0.25));
  const int n_channels = 1 + static_cast<int>(rng.integer(2));
  std::vector<Channel> chans;
  for (int c = 0; c < n_channels; ++c) {
    Channel ch;
    ch.label = "ch" + std::to_string(c);
    ch.grid = ContinuumGrid::uniform(m0 - half_band, m0 + half_band, grid_points);
    ch.couplings.resize(2, ch.grid.size());
    for (int k = 0; k < 2; ++k) {
      const Complex amp = rng.complex_in_disc(0.12);
      const double center = rng.uniform(m0 - 2.0, m0 + 2.0);
      const double width = rng.uniform(1.0, 3.0);
      ch.couplings.row(k) =
          lorentzian_coupling(ch.grid, amp, center, width).transpose();
    }
    chans.push_back(std::move(ch));
  }
  return build_two_level_model(m0, h1, chans);
}

// CPT-invariant family: random complex m12 and random smooth first-row
// couplings; the second row is the forced conjugate.
inline FullModel random_cpt_model(Rng& rng, Eigen::Index grid_points = 40) {
  const double m0 = rng.uniform(5.0, 15.0);
  const double half_band = rng.uniform(4.0, 7.0);
  const Complex m12 = rng.complex_in_disc(0.3);
  const int n_channels = 1 + static_cast<int>(rng.integer(2));
  std::vector<CptChannelSpec> chans;
  for (int c = 0; c < n_channels; ++c) {
    CptChannelSpec spec;
    spec.label = "ch" + std::to_string(c);
    spec.grid = ContinuumGrid::uniform(m0 - half_band, m0 + half_band, grid_points);
    const Complex amp = rng.complex_in_disc(0.15);
    const double center = rng.uniform(m0 - 2.0, m0 + 2.0);
    const double width = rng.uniform(0.8, 2.5);
    const double ripple = rng.uniform(0.0, 0.5);
    const double period = rng.uniform(0.5, 2.0);
    spec.row1.resize(spec.grid.size());
    for (Eigen::Index i = 0; i < spec.grid.size(); ++i) {
      const double e = spec.grid.energies[i];
      const double d = e - center;
      const double env = width / std::sqrt(d * d + width * width);
      spec.row1[i] = amp * env * (1.0 + ripple * std::cos(period * e));
    }
    chans.push_back(std::move(spec));
  }
  return make_cpt_invariant(m0, m12, chans);
}

}  // namespace loylab
