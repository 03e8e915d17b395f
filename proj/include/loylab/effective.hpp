#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "self_energy.hpp"

namespace loylab {

// Non-Hermitian generator of the reduced evolution, H = M - (i/2) Gamma.
// M (mass) and Gamma (decay) are Hermitian by construction and reassemble
// the stored matrix exactly.
struct EffectiveHamiltonian {
  Matrix matrix;
  std::string method;
  double eta = 0.0;

  Eigen::Index dim() const { return matrix.rows(); }
  Matrix mass_part() const { return 0.5 * (matrix + matrix.adjoint()); }
  Matrix decay_part() const { return ii * (matrix - matrix.adjoint()); }
};

inline Complex diag_difference(const EffectiveHamiltonian& h) {
  if (h.dim() != 2)
    throw std::invalid_argument("diag_difference needs a two-level Hamiltonian");
  return h.matrix(0, 0) - h.matrix(1, 1);
}

// 2x2 Hermitian m = h0 I + hx sx + hy sy + hz sz, kappa = |h|.
struct PauliDecomposition {
  double h0 = 0.0, hx = 0.0, hy = 0.0, hz = 0.0, kappa = 0.0;

  Matrix reconstruct() const {
    Matrix m(2, 2);
    m << Complex(h0 + hz, 0.0), Complex(hx, -hy), Complex(hx, hy),
        Complex(h0 - hz, 0.0);
    return m;
  }
};

inline PauliDecomposition pauli_decompose(const Matrix& m) {
  if (m.rows() != 2 || m.cols() != 2)
    throw std::invalid_argument("pauli_decompose needs a 2x2 matrix");
  require_hermitian(m, "pauli_decompose");
  PauliDecomposition d;
  d.h0 = 0.5 * std::real(m(0, 0) + m(1, 1));
  d.hz = 0.5 * std::real(m(0, 0) - m(1, 1));
  d.hx = 0.5 * std::real(m(0, 1) + m(1, 0));
  d.hy = 0.5 * std::imag(m(1, 0) - m(0, 1));
  d.kappa = std::sqrt(d.hx * d.hx + d.hy * d.hy + d.hz * d.hz);
  return d;
}

// exp(+-i t (h0 I + h.s)) through the two spectral projectors
// (I +- h.s/kappa)/2; kappa = 0 collapses both onto the pure phase.
inline Matrix exp_php(double t, const PauliDecomposition& d, int sign) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("exp_php sign must be +1 or -1");
  const double s = static_cast<double>(sign);
  const Matrix id = Matrix::Identity(2, 2);
  if (d.kappa == 0.0) return std::exp(s * ii * t * d.h0) * id;
  const Matrix hsig = d.reconstruct() - d.h0 * id;
  const Matrix p_plus = 0.5 * (id + hsig / d.kappa);
  const Matrix p_minus = 0.5 * (id - hsig / d.kappa);
  return std::exp(s * ii * t * (d.h0 + d.kappa)) * p_plus +
         std::exp(s * ii * t * (d.h0 - d.kappa)) * p_minus;
}

inline EffectiveHamiltonian h_loy0(const FullModel& model,
                                   std::optional<double> eta = {}) {
  SelfEnergyEvaluator se(model, eta.value_or(model.default_eta()));
  const Eigen::Index n = model.parallel_dim();
  Matrix m = model.m0() * Matrix::Identity(n, n) - se.sigma0(model.m0());
  return {std::move(m), "loy0", se.eta()};
}

inline EffectiveHamiltonian h_loy(const FullModel& model,
                                  std::optional<double> eta = {}) {
  SelfEnergyEvaluator se(model, eta.value_or(model.default_eta()));
  const Eigen::Index n = model.parallel_dim();
  Matrix m = model.m0() * Matrix::Identity(n, n) - se.sigma(model.m0());
  return {std::move(m), "loy", se.eta()};
}

// Spectral projector of K for each eigenvalue cluster. Eigenvalues closer
// than gap_tol are merged and their projectors summed, which keeps the
// near-degenerate limit finite.
struct SpectralCluster {
  Complex lambda;    // cluster mean
  Matrix projector;  // P_j P_k = delta_jk P_j, sum_j P_j = I
};

inline double default_gap_tol(const Matrix& k) {
  return 1e-8 * (k.norm() + std::numeric_limits<double>::min());
}

namespace detail {

inline std::vector<std::vector<int>> cluster_by_distance(
    const std::vector<Complex>& vals, double gap_tol) {
  const int n = static_cast<int>(vals.size());
  std::vector<int> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<size_t>(a)] != a) a = parent[static_cast<size_t>(a)];
    return a;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(vals[static_cast<size_t>(i)] - vals[static_cast<size_t>(j)]) <=
          gap_tol) {
        parent[static_cast<size_t>(find(j))] = find(i);
      }
  std::vector<std::vector<int>> groups;
  std::vector<int> group_of(static_cast<size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (group_of[static_cast<size_t>(r)] < 0) {
      group_of[static_cast<size_t>(r)] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<size_t>(group_of[static_cast<size_t>(r)])].push_back(i);
  }
  return groups;
}

}  // namespace detail

inline std::vector<SpectralCluster> spectral_projectors(const Matrix& k,
                                                        double gap_tol) {
  const Eigen::Index n = k.rows();
  if (n == 0 || k.cols() != n)
    throw std::invalid_argument("spectral_projectors needs a square matrix");
  std::vector<SpectralCluster> out;

  if (hermiticity_residual(k) <= 1e-12) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    if (es.info() != Eigen::Success)
      throw NumericalError("Hermitian eigensolver failed");
    const auto& w = es.eigenvalues();  // ascending
    const Matrix& v = es.eigenvectors();
    Eigen::Index a = 0;
    while (a < n) {
      Eigen::Index b = a + 1;
      while (b < n && w[b] - w[b - 1] <= gap_tol) ++b;
      const Matrix cols = v.middleCols(a, b - a);
      out.push_back({Complex(w.segment(a, b - a).mean(), 0.0),
                     cols * cols.adjoint()});
      a = b;
    }
    return out;
  }

  Eigen::ComplexEigenSolver<Matrix> es(k);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  const Matrix v = es.eigenvectors();
  Eigen::JacobiSVD<Matrix> svd(v);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-10 * sv(0)))
    throw NumericalError(
        "matrix is not diagonalizable within tolerance; spectral projectors "
        "are undefined");
  // Rows of v^{-1} are the bi-orthogonal left eigenvectors, <L_j|R_k> = d_jk.
  const Matrix w = v.inverse();
  std::vector<Complex> vals(static_cast<size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j)
    vals[static_cast<size_t>(j)] = es.eigenvalues()[j];
  for (const auto& g : detail::cluster_by_distance(vals, gap_tol)) {
    Complex mean = 0.0;
    Matrix p = Matrix::Zero(n, n);
    for (int j : g) {
      mean += vals[static_cast<size_t>(j)];
      p += v.col(j) * w.row(j);
    }
    mean /= static_cast<double>(g.size());
    out.push_back({mean, std::move(p)});
  }
  return out;
}

// V = -sum_j sigma(lambda_j) P_j over the spectral clusters of K.
inline Matrix v_spectral(const FullModel& model, const Matrix& k,
                         std::optional<double> eta = {}) {
  if (k.rows() != model.parallel_dim() || k.cols() != model.parallel_dim())
    throw std::invalid_argument("K must act on the parallel subspace");
  SelfEnergyEvaluator se(model, eta.value_or(model.default_eta()));
  Matrix v = Matrix::Zero(k.rows(), k.cols());
  for (const auto& c : spectral_projectors(k, default_gap_tol(k)))
    v -= se.sigma_at(c.lambda) * c.projector;
  return v;
}

// Two-level closed form of the first-iterate correction: sigma evaluated at
// the two PHP eigenvalues m0 + h0 +- kappa, weighted by their projectors.
// Near-degenerate kappa routes through the single-cluster limit.
inline EffectiveHamiltonian h_loy_imp(const FullModel& model,
                                      std::optional<double> eta = {}) {
  if (model.parallel_dim() != 2)
    throw std::invalid_argument("h_loy_imp is the two-level closed form");
  SelfEnergyEvaluator se(model, eta.value_or(model.default_eta()));
  const Matrix h1 = model.h1_parallel();
  const PauliDecomposition d = pauli_decompose(h1);
  const double kappa_tol =
      1e-8 * (h1.norm() + std::numeric_limits<double>::min());
  Matrix v(2, 2);
  if (d.kappa < kappa_tol) {
    v = -se.sigma(model.m0() + d.h0);
  } else {
    const Matrix id = Matrix::Identity(2, 2);
    const Matrix plus = (1.0 - d.h0 / d.kappa) * id + h1 / d.kappa;
    const Matrix minus = (1.0 + d.h0 / d.kappa) * id - h1 / d.kappa;
    v = -0.5 * se.sigma(model.m0() + d.h0 + d.kappa) * plus -
        0.5 * se.sigma(model.m0() + d.h0 - d.kappa) * minus;
  }
  Matrix m = model.php() + v;
  return {std::move(m), "improved", se.eta()};
}

enum class IterationStatus { converged, max_iterations, failed };

struct IterationResult {
  Matrix v;
  std::vector<double> history;  // ||V^(n+1) - V^(n)||_F per iteration
  IterationStatus status = IterationStatus::max_iterations;
  int iterations = 0;
  std::string message;
};

// Fixed-point iteration V^(n+1) = v_spectral(PHP + V^(n)) from V^(0) = 0.
// Non-convergence is reported in the status, not thrown; a defective iterate
// aborts with the diagnostic message.
inline IterationResult iterate_v(const FullModel& model, int max_iter,
                                 double tol, std::optional<double> eta = {}) {
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const Eigen::Index n = model.parallel_dim();
  IterationResult r;
  r.v = Matrix::Zero(n, n);
  for (int it = 1; it <= max_iter; ++it) {
    Matrix next;
    try {
      next = v_spectral(model, model.php() + r.v, eta);
    } catch (const NumericalError& e) {
      r.status = IterationStatus::failed;
      r.message = e.what();
      return r;
    }
    const double step = (next - r.v).norm();
    r.history.push_back(step);
    r.v = std::move(next);
    r.iterations = it;
    if (step <= tol * r.v.norm()) {
      r.status = IterationStatus::converged;
      return r;
    }
  }
  r.status = IterationStatus::max_iterations;
  r.message = "no convergence within max_iter";
  return r;
}

// One-dimensional subspace spanned by psi: scalar <psi|H|psi> minus the
// resolvent sandwich over the orthogonal complement of psi.
inline EffectiveHamiltonian h_1d(const FullModel& model, const Vector& psi,
                                 std::optional<double> eta = {}) {
  if (psi.size() != model.full_dim())
    throw std::invalid_argument("psi must live in the full space");
  if (std::abs(psi.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("psi must be normalized");
  const double et = eta.value_or(model.default_eta());
  if (!(et > 0.0)) throw std::invalid_argument("eta must be positive");
  const Matrix h = model.full_h();
  const Eigen::Index nf = model.full_dim();
  Eigen::HouseholderQR<Matrix> qr(psi);
  const Matrix q = qr.householderQ();
  const Matrix w = q.rightCols(nf - 1);  // orthonormal complement of psi
  const Vector hpsi = h * psi;
  const Complex m = psi.dot(hpsi);
  const Vector c = w.adjoint() * hpsi;
  Matrix shifted = w.adjoint() * h * w;
  shifted.diagonal().array() -= (std::real(m) + ii * et);
  const Vector sol = Eigen::PartialPivLU<Matrix>(shifted).solve(c);
  if (!sol.allFinite())
    throw NumericalError("singular complement resolvent in h_1d");
  const Complex sigma_psi = c.dot(sol);
  Matrix out(1, 1);
  out(0, 0) = m - sigma_psi;
  return {std::move(out), "onedim", et};
}

}  // namespace loylab
