#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace loylab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex ii{0.0, 1.0};

// Thrown when a computation (not its inputs) goes bad: singular resolvent
// shifts, defective eigenvector bases, failed eigensolves.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double hermiticity_residual(const Matrix& a) {
  const double scale = a.norm();
  if (scale == 0.0) return 0.0;
  return (a - a.adjoint()).norm() / scale;
}

inline void require_hermitian(const Matrix& a, const std::string& what,
                              double tol = 1e-12) {
  if (a.rows() != a.cols())
    throw std::invalid_argument(what + ": matrix must be square");
  if (hermiticity_residual(a) > tol)
    throw std::invalid_argument(what + ": matrix is not Hermitian");
}

// integral_0^t exp(-i s z) ds = (1 - exp(-i t z)) / (i z), with the removable
// singularity at z t -> 0 handled by its series. The crossover sits where the
// series truncation (~|zt|^4/120) meets the cancellation loss of the closed
// form (~eps/|zt|), keeping both branches at <= 1e-12 relative.
inline Complex phase_integral(Complex z, double t) {
  const Complex zt = z * t;
  if (std::abs(zt) < 1e-4) {
    return t * (1.0 - ii * zt / 2.0 - zt * zt / 6.0 + ii * zt * zt * zt / 24.0);
  }
  return (1.0 - std::exp(-ii * zt)) / (ii * z);
}

}  // namespace loylab
