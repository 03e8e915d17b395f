#pragma once

#include <map>
#include <string>
#include <vector>

#include "effective.hpp"
#include "model.hpp"

namespace loylab {

// Antiunitary operator Theta = U o K, with K entrywise conjugation in the
// model basis and U unitary.
struct AntiUnitaryOp {
  Matrix unitary_part;
  std::string basis_tag;

  Vector apply(const Vector& v) const { return unitary_part * v.conjugate(); }
};

// CPT-style operator for a two-level model: U acts as -swap on the parallel
// pair and maps each channel grid point onto -1 times the paired channel's
// point. Default pairing is every channel with itself.
inline AntiUnitaryOp build_cpt(
    const FullModel& model,
    const std::map<std::string, std::string>& channel_pairing = {}) {
  if (model.parallel_dim() != 2)
    throw std::invalid_argument("build_cpt needs a two-level parallel block");
  const auto& slots = model.channels();
  std::map<std::string, const ChannelSlot*> by_label;
  for (const auto& s : slots) by_label[s.label] = &s;
  auto partner_of = [&](const std::string& label) -> const std::string& {
    auto it = channel_pairing.find(label);
    return it == channel_pairing.end() ? label : it->second;
  };
  for (const auto& s : slots) {
    const std::string& p = partner_of(s.label);
    auto it = by_label.find(p);
    if (it == by_label.end())
      throw std::invalid_argument("pairing names unknown channel: " + p);
    if (partner_of(p) != s.label)
      throw std::invalid_argument("channel pairing must be an involution");
    const ChannelSlot& other = *it->second;
    if (other.grid.size() != s.grid.size() ||
        (other.grid.energies - s.grid.energies).cwiseAbs().maxCoeff() > 0.0 ||
        (other.grid.weights - s.grid.weights).cwiseAbs().maxCoeff() > 0.0)
      throw std::invalid_argument("paired channels must share one grid: " +
                                  s.label + " <-> " + p);
  }
  const Eigen::Index nf = model.full_dim();
  Matrix u = Matrix::Zero(nf, nf);
  u(0, 1) = -1.0;
  u(1, 0) = -1.0;
  for (const auto& s : slots) {
    const ChannelSlot& other = *by_label[partner_of(s.label)];
    for (Eigen::Index i = 0; i < s.grid.size(); ++i)
      u(2 + s.offset + i, 2 + other.offset + i) = -1.0;
  }
  return {std::move(u), "model basis"};
}

// Frobenius norm of the conjugate-linear commutator: zero iff Theta H
// Theta^{-1} = H.
inline double cpt_residual(const AntiUnitaryOp& theta, const Matrix& h) {
  if (theta.unitary_part.rows() != h.rows() || h.rows() != h.cols())
    throw std::invalid_argument("cpt_residual dimension mismatch");
  return (theta.unitary_part * h.conjugate() - h * theta.unitary_part).norm();
}

inline double cpt_residual(const AntiUnitaryOp& theta, const FullModel& model) {
  return cpt_residual(theta, model.full_h());
}

// Two-level model that commutes with the self-paired CPT operator by
// construction: equal diagonal masses, H21 = conj(H12), and second-row
// couplings the conjugates of the first row. CP violation enters through
// Im(m12) and complex couplings.
struct CptChannelSpec {
  std::string label;
  ContinuumGrid grid;
  Vector row1;  // g_1(e_i); row 2 is forced to conj(row 1)
};

inline FullModel make_cpt_invariant(double m0, Complex m12,
                                    const std::vector<CptChannelSpec>& channels) {
  Matrix h1(2, 2);
  h1 << Complex(0.0, 0.0), m12, std::conj(m12), Complex(0.0, 0.0);
  std::vector<Channel> chans;
  chans.reserve(channels.size());
  for (const auto& c : channels) {
    if (c.row1.size() != c.grid.size())
      throw std::invalid_argument("row1 must match the grid size");
    Channel ch;
    ch.label = c.label;
    ch.grid = c.grid;
    ch.couplings.resize(2, c.grid.size());
    ch.couplings.row(0) = c.row1.transpose();
    ch.couplings.row(1) = c.row1.conjugate().transpose();
    chans.push_back(std::move(ch));
  }
  return build_two_level_model(m0, h1, chans);
}

}  // namespace loylab
