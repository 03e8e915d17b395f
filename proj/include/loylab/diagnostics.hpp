#pragma once

#include <limits>
#include <vector>

#include "evolution.hpp"

namespace loylab {

// Per-time check of the inequality that justifies dropping the internal
// PH1P term from the reduced evolution: it needs
//   ||PH1P psi_par(t)|| << ||PH1Q psi_perp(t)||.
// The perpendicular component vanishes at t = 0, so the condition fails
// there whenever PH1P psi0 != 0. The companion pair compares the full PHP
// term against the same leakage term.
struct LoyConditionRow {
  double time = 0.0;
  double parallel_term = 0.0;       // ||PH1P psi_par||
  double perpendicular_term = 0.0;  // ||PH1Q psi_perp||
  double ratio = 0.0;               // parallel/perpendicular, inf if perp = 0
  bool violated = false;            // ratio >= 1 with a nonzero parallel term
  double php_term = 0.0;            // ||PHP psi_par||
  double phq_term = 0.0;            // ||PHQ psi_perp|| (== perpendicular_term)
};

struct LoyConditionReport {
  std::vector<LoyConditionRow> rows;
};

inline LoyConditionReport diagnose_loy_conditions(const FullModel& model,
                                                  const Vector& psi0,
                                                  const RealVector& times) {
  const Eigen::Index n = model.parallel_dim();
  const Eigen::Index nf = model.full_dim();
  Vector full;
  if (psi0.size() == n) {
    full = Vector::Zero(nf);
    full.head(n) = psi0;
  } else if (psi0.size() == nf) {
    if (psi0.tail(nf - n).norm() > 1e-12)
      throw std::invalid_argument(
          "psi0 must be supported on the parallel subspace");
    full = psi0;
  } else {
    throw std::invalid_argument("psi0 dimension mismatch");
  }
  if (std::abs(full.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("psi0 must be normalized");
  for (Eigen::Index i = 0; i < times.size(); ++i)
    if (times[i] < 0.0)
      throw std::invalid_argument("the condition is probed for t >= 0 only");

  const Trajectory tr = evolve_exact(model, full, times);
  const Matrix h1p = model.h1_parallel();
  LoyConditionReport report;
  report.rows.reserve(tr.states.size());
  for (size_t i = 0; i < tr.states.size(); ++i) {
    const Vector a = tr.states[i].head(n);
    const Vector b = tr.states[i].tail(nf - n);
    LoyConditionRow row;
    row.time = tr.times[static_cast<Eigen::Index>(i)];
    row.parallel_term = (h1p * a).norm();
    row.perpendicular_term = (model.phq() * b).norm();  // PH1Q == PHQ
    row.php_term = (model.php() * a).norm();
    row.phq_term = row.perpendicular_term;
    if (row.perpendicular_term == 0.0) {
      row.ratio = row.parallel_term > 0.0
                      ? std::numeric_limits<double>::infinity()
                      : 0.0;
    } else {
      row.ratio = row.parallel_term / row.perpendicular_term;
    }
    row.violated = row.parallel_term > 0.0 && row.ratio >= 1.0;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace loylab
