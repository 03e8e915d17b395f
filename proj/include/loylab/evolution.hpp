#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "effective.hpp"
#include "model.hpp"

namespace loylab {

struct Trajectory {
  RealVector times;
  std::vector<Vector> states;
  RealVector norm_track;  // ||state||^2 per time
  std::string warning;
};

namespace detail {

struct ComplexModes {
  Vector eigenvalues;
  Matrix right;      // right eigenvectors as columns
  Matrix right_inv;  // rows = bi-orthogonal left eigenvectors
};

inline ComplexModes complex_modes(const Matrix& m, const char* what) {
  Eigen::ComplexEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": eigensolver failed");
  const Matrix v = es.eigenvectors();
  Eigen::JacobiSVD<Matrix> svd(v);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0)))
    throw NumericalError(std::string(what) +
                         ": not diagonalizable within tolerance");
  return {es.eigenvalues(), v, v.inverse()};
}

}  // namespace detail

// state(t) = exp(-i t H) psi0 through the Hermitian eigendecomposition of the
// assembled H; negative times are allowed. t = 0 returns psi0 bit-exactly.
inline Trajectory evolve_exact(const FullModel& model, const Vector& psi0,
                               const RealVector& times) {
  if (psi0.size() != model.full_dim())
    throw std::invalid_argument("psi0 must live in the full space");
  Trajectory tr;
  tr.times = times;
  const double norm0 = psi0.norm();
  if (std::abs(norm0 - 1.0) > 1e-10)
    tr.warning = "initial state norm " + std::to_string(norm0) +
                 " differs from 1; proceeding unnormalized";
  Eigen::SelfAdjointEigenSolver<Matrix> es(model.full_h());
  if (es.info() != Eigen::Success)
    throw NumericalError("exact evolution: eigensolver failed");
  const Matrix& u = es.eigenvectors();
  const RealVector& e = es.eigenvalues();
  const Vector coef = u.adjoint() * psi0;
  tr.states.reserve(static_cast<size_t>(times.size()));
  tr.norm_track.resize(times.size());
  for (Eigen::Index it = 0; it < times.size(); ++it) {
    const double t = times[it];
    Vector state;
    if (t == 0.0) {
      state = psi0;
    } else {
      Vector phased(coef.size());
      for (Eigen::Index j = 0; j < coef.size(); ++j)
        phased[j] = std::exp(-ii * t * e[j]) * coef[j];
      state = u * phased;
    }
    tr.norm_track[it] = state.squaredNorm();
    tr.states.push_back(std::move(state));
  }
  return tr;
}

// a(t) = exp(-i t H_par) a0 through the bi-orthogonal eigendecomposition of a
// (generally non-Hermitian) effective Hamiltonian. t >= 0 only: the reduced
// description starts at the preparation instant.
inline Trajectory evolve_effective(const EffectiveHamiltonian& heff,
                                   const Vector& a0, const RealVector& times) {
  if (a0.size() != heff.dim())
    throw std::invalid_argument("a0 must match the effective dimension");
  for (Eigen::Index i = 0; i < times.size(); ++i)
    if (times[i] < 0.0)
      throw std::invalid_argument(
          "effective evolution is defined for t >= 0 only");
  const auto modes = detail::complex_modes(heff.matrix, "effective Hamiltonian");
  const Vector c = modes.right_inv * a0;
  Trajectory tr;
  tr.times = times;
  tr.states.reserve(static_cast<size_t>(times.size()));
  tr.norm_track.resize(times.size());
  for (Eigen::Index it = 0; it < times.size(); ++it) {
    const double t = times[it];
    Vector phased(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j)
      phased[j] = std::exp(-ii * t * modes.eigenvalues[j]) * c[j];
    Vector state = modes.right * phased;
    tr.norm_track[it] = state.squaredNorm();
    tr.states.push_back(std::move(state));
  }
  return tr;
}

// Decay-product amplitudes driven by the effective parallel evolution:
//   F_J(e; t) = -i sum_k integral_0^t exp(-i e (t - tau)) (QHP)_{ek} a_k(tau) dtau
// evaluated in closed form from the effective modes. Amplitudes are in the
// discrete (sqrt-weight embedded) basis; divide by sqrt(w_i) to compare with
// continuum densities.
struct ChannelAmplitudes {
  std::string label;
  RealVector energies;
  Matrix f;  // (grid points) x (times)
};

inline std::vector<ChannelAmplitudes> decay_product_amplitudes(
    const EffectiveHamiltonian& heff, const FullModel& model, const Vector& a0,
    const RealVector& times) {
  if (heff.dim() != model.parallel_dim())
    throw std::invalid_argument("effective dimension must match the model");
  if (a0.size() != heff.dim())
    throw std::invalid_argument("a0 must match the effective dimension");
  for (Eigen::Index i = 0; i < times.size(); ++i)
    if (times[i] < 0.0)
      throw std::invalid_argument("decay amplitudes defined for t >= 0 only");
  const auto modes = detail::complex_modes(heff.matrix, "effective Hamiltonian");
  const Vector c = modes.right_inv * a0;
  const Matrix w = model.phq().adjoint() * modes.right;  // QHP in mode basis
  std::vector<ChannelAmplitudes> out;
  out.reserve(model.channels().size());
  for (const auto& slot : model.channels()) {
    ChannelAmplitudes ca;
    ca.label = slot.label;
    ca.energies = slot.grid.energies;
    ca.f.resize(slot.grid.size(), times.size());
    for (Eigen::Index q = 0; q < slot.grid.size(); ++q) {
      const double e = slot.grid.energies[q];
      for (Eigen::Index it = 0; it < times.size(); ++it) {
        const double t = times[it];
        Complex acc = 0.0;
        for (Eigen::Index mno = 0; mno < c.size(); ++mno)
          acc += w(slot.offset + q, mno) * c[mno] *
                 phase_integral(modes.eigenvalues[mno] - e, t);
        ca.f(q, it) = -ii * std::exp(-ii * e * t) * acc;
      }
    }
    out.push_back(std::move(ca));
  }
  return out;
}

// First-order time-dependent correction
//   V(t) = -i integral_0^t PHQ exp(-i(t-tau) QHQ) QHP exp(+i(t-tau) PHP) dtau,
// closed form over the eigenmodes of QHQ and PHP: every matrix element is a
// sum of (1 - exp(-i t (E_q - lambda_p - i damping))) / (i (E_q - lambda_p
// - i damping)) kernels. damping > 0 gives the regulated variant whose
// t -> infinity limit is v_spectral(PHP) at eta = damping.
inline Matrix v_of_t(const FullModel& model, double t, double damping = 0.0) {
  if (t < 0.0) throw std::invalid_argument("v_of_t is defined for t >= 0");
  if (damping < 0.0) throw std::invalid_argument("damping must be >= 0");
  const Eigen::Index n = model.parallel_dim();
  Eigen::SelfAdjointEigenSolver<Matrix> ap(model.php());
  if (ap.info() != Eigen::Success)
    throw NumericalError("v_of_t: PHP eigensolver failed");
  const Matrix& u = ap.eigenvectors();
  const RealVector& lam = ap.eigenvalues();

  Matrix bt;          // PHQ in the (PHP, QHQ) eigenbases
  RealVector q_eigs;  // QHQ eigenvalues
  if (model.q_diagonal()) {
    bt = u.adjoint() * model.phq();
    q_eigs = model.q_energies();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> aq(model.q_block());
    if (aq.info() != Eigen::Success)
      throw NumericalError("v_of_t: QHQ eigensolver failed");
    bt = u.adjoint() * model.phq() * aq.eigenvectors();
    q_eigs = aq.eigenvalues();
  }

  Matrix vt = Matrix::Zero(n, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q) {
      Complex acc = 0.0;
      for (Eigen::Index d = 0; d < q_eigs.size(); ++d)
        acc += bt(p, d) * std::conj(bt(q, d)) *
               phase_integral(Complex(q_eigs[d] - lam[q], -damping), t);
      vt(p, q) = -ii * acc;
    }
  return u * vt * u.adjoint();
}

struct ComparisonRow {
  double time = 0.0;
  double amplitude_error = 0.0;  // ||a_exact - a_eff||_2 on the parallel block
  double decay_law_error = 0.0;  // |p_exact - p_eff|
};

struct ComparisonMetrics {
  double max_amplitude_error = 0.0;
  double max_decay_law_error = 0.0;
  std::vector<ComparisonRow> rows;
};

// The exact trajectory is projected onto the parallel subspace; the decay law
// p(t) is the survival probability against each trajectory's own first state.
inline ComparisonMetrics compare_trajectories(const Trajectory& exact,
                                              const Trajectory& effective,
                                              const SubspacePartition& part) {
  if (exact.times.size() != effective.times.size() ||
      (exact.times - effective.times).cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("trajectories must share one time grid");
  if (exact.states.empty()) throw std::invalid_argument("empty trajectories");
  const Eigen::Index n = part.n();
  auto project = [&](const Vector& state) {
    if (state.size() == n) return state;  // already on the parallel subspace
    if (state.size() != part.full_dim)
      throw std::invalid_argument("trajectory state dimension mismatch");
    Vector a(n);
    for (Eigen::Index i = 0; i < n; ++i)
      a[i] = state[part.parallel[static_cast<size_t>(i)]];
    return a;
  };
  const Vector ref_exact = project(exact.states.front());
  const Vector ref_eff = project(effective.states.front());
  ComparisonMetrics out;
  out.rows.reserve(exact.states.size());
  for (size_t i = 0; i < exact.states.size(); ++i) {
    const Vector a_ex = project(exact.states[i]);
    const Vector a_ef = project(effective.states[i]);
    ComparisonRow row;
    row.time = exact.times[static_cast<Eigen::Index>(i)];
    row.amplitude_error = (a_ex - a_ef).norm();
    const double p_ex = std::norm(ref_exact.dot(a_ex));
    const double p_ef = std::norm(ref_eff.dot(a_ef));
    row.decay_law_error = std::abs(p_ex - p_ef);
    out.max_amplitude_error = std::max(out.max_amplitude_error, row.amplitude_error);
    out.max_decay_law_error = std::max(out.max_decay_law_error, row.decay_law_error);
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace loylab
