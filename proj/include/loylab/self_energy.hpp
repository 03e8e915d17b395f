#pragma once

#include <optional>

#include "model.hpp"

namespace loylab {

// Resolvent sandwiches on the parallel subspace:
//   sigma(x)  = PHQ (QHQ  - x - i eta)^{-1} QHP
//   sigma0(x) = PHQ (QH0Q - x - i eta)^{-1} QHP
// The finite eta > 0 realizes the outgoing (-i0) prescription; with it
// Im sigma is positive semidefinite, so the induced decay matrix
// i(sigma^+ - sigma) is physical.
class SelfEnergyEvaluator {
 public:
  explicit SelfEnergyEvaluator(const FullModel& model)
      : SelfEnergyEvaluator(model, model.default_eta()) {}

  SelfEnergyEvaluator(const FullModel& model, double eta)
      : phq_(model.phq()),
        q_energies_(model.q_energies()),
        eta_(eta),
        grid_spacing_(model.median_grid_spacing()) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (!model.q_diagonal()) q_dense_ = model.q_block();
  }

  double eta() const { return eta_; }
  double grid_spacing() const { return grid_spacing_; }

  Matrix sigma(double x) const { return sandwich(Complex(x, 0.0), false); }

  Matrix sigma0(double x) const { return sandwich(Complex(x, 0.0), true); }

  // Resolvent shifted to z + i eta; coincides with sigma(x) for real z.
  Matrix sigma_at(Complex z) const { return sandwich(z, false); }

 private:
  Matrix sandwich(Complex z, bool free_resolvent) const {
    const Complex shift = z + ii * eta_;
    if (free_resolvent || !q_dense_) {
      Vector inv(q_energies_.size());
      for (Eigen::Index q = 0; q < q_energies_.size(); ++q) {
        const Complex den = q_energies_[q] - shift;
        if (den == Complex(0.0, 0.0))
          throw NumericalError("resolvent shift hits a Q-sector level exactly");
        inv[q] = 1.0 / den;
      }
      return phq_ * inv.asDiagonal() * phq_.adjoint();
    }
    Matrix shifted = *q_dense_;
    shifted.diagonal().array() -= shift;
    Matrix x = Eigen::PartialPivLU<Matrix>(shifted).solve(phq_.adjoint());
    if (!x.allFinite())
      throw NumericalError("singular shifted Q block in resolvent solve");
    return phq_ * x;
  }

  Matrix phq_;
  RealVector q_energies_;
  std::optional<Matrix> q_dense_;
  double eta_;
  double grid_spacing_;
};

}  // namespace loylab
