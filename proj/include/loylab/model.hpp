#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "grid.hpp"
#include "linalg.hpp"

namespace loylab {

// Index sets defining the projectors P (parallel, unstable states) and
// Q = I - P (decay products).
struct SubspacePartition {
  std::vector<Eigen::Index> parallel;
  Eigen::Index full_dim = 0;

  Eigen::Index n() const { return static_cast<Eigen::Index>(parallel.size()); }

  void validate() const {
    if (parallel.empty())
      throw std::invalid_argument("partition needs at least one parallel index");
    if (full_dim < n())
      throw std::invalid_argument("partition larger than the full basis");
    std::vector<char> seen(static_cast<size_t>(full_dim), 0);
    for (auto i : parallel) {
      if (i < 0 || i >= full_dim)
        throw std::invalid_argument("partition index out of range");
      if (seen[static_cast<size_t>(i)]++)
        throw std::invalid_argument("partition indices must be distinct");
    }
  }

  std::vector<Eigen::Index> perpendicular() const {
    std::vector<char> is_par(static_cast<size_t>(full_dim), 0);
    for (auto i : parallel) is_par[static_cast<size_t>(i)] = 1;
    std::vector<Eigen::Index> out;
    out.reserve(static_cast<size_t>(full_dim - n()));
    for (Eigen::Index i = 0; i < full_dim; ++i)
      if (!is_par[static_cast<size_t>(i)]) out.push_back(i);
    return out;
  }

  Matrix projector() const {
    Matrix p = Matrix::Zero(full_dim, full_dim);
    for (auto i : parallel) p(i, i) = 1.0;
    return p;
  }
};

struct Blocks {
  Matrix php, phq, qhp, qhq;
};

inline Blocks split_blocks(const Matrix& h, const SubspacePartition& part) {
  part.validate();
  if (h.rows() != part.full_dim || h.cols() != part.full_dim)
    throw std::invalid_argument("matrix does not match the partition dimension");
  const auto par = part.parallel;
  const auto perp = part.perpendicular();
  const Eigen::Index n = part.n();
  const Eigen::Index m = part.full_dim - n;
  Blocks b;
  b.php.resize(n, n);
  b.phq.resize(n, m);
  b.qhp.resize(m, n);
  b.qhq.resize(m, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) b.php(i, j) = h(par[i], par[j]);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) b.phq(i, j) = h(par[i], perp[j]);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) b.qhp(i, j) = h(perp[i], par[j]);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) b.qhq(i, j) = h(perp[i], perp[j]);
  return b;
}

inline Matrix assemble_blocks(const Blocks& b, const SubspacePartition& part) {
  part.validate();
  const auto par = part.parallel;
  const auto perp = part.perpendicular();
  Matrix h = Matrix::Zero(part.full_dim, part.full_dim);
  for (Eigen::Index i = 0; i < b.php.rows(); ++i)
    for (Eigen::Index j = 0; j < b.php.cols(); ++j) h(par[i], par[j]) = b.php(i, j);
  for (Eigen::Index i = 0; i < b.phq.rows(); ++i)
    for (Eigen::Index j = 0; j < b.phq.cols(); ++j) h(par[i], perp[j]) = b.phq(i, j);
  for (Eigen::Index i = 0; i < b.qhp.rows(); ++i)
    for (Eigen::Index j = 0; j < b.qhp.cols(); ++j) h(perp[i], par[j]) = b.qhp(i, j);
  for (Eigen::Index i = 0; i < b.qhq.rows(); ++i)
    for (Eigen::Index j = 0; j < b.qhq.cols(); ++j) h(perp[i], perp[j]) = b.qhq(i, j);
  return h;
}

struct ChannelSlot {
  std::string label;
  Eigen::Index offset = 0;  // first Q index of this channel
  ContinuumGrid grid;
};

// Finite Hermitian total Hamiltonian with a distinguished unstable subspace.
// Canonical layout: parallel states first, then the concatenated channel
// grids. H0 is m0 on the parallel block and the grid energies on Q, so
// H1 = H - H0 is never stored separately. The perpendicular block of H is
// diagonal unless an explicit QH1Q perturbation is attached.
class FullModel {
 public:
  FullModel(double m0, Matrix php, Matrix phq, RealVector q_energies,
            std::vector<ChannelSlot> channels,
            std::optional<Matrix> q_perturbation = {}, std::string note = {})
      : m0_(m0),
        php_(std::move(php)),
        phq_(std::move(phq)),
        q_energies_(std::move(q_energies)),
        channels_(std::move(channels)),
        q_perturbation_(std::move(q_perturbation)),
        note_(std::move(note)) {
    require_hermitian(php_, "FullModel parallel block");
    if (phq_.rows() != php_.rows() || phq_.cols() != q_energies_.size())
      throw std::invalid_argument("FullModel block dimensions do not match");
    Eigen::Index covered = 0;
    for (const auto& c : channels_) {
      c.grid.validate();
      if (c.offset != covered)
        throw std::invalid_argument("channel slots must tile the Q sector");
      covered += c.grid.size();
    }
    if (covered != q_energies_.size())
      throw std::invalid_argument("channel slots must cover the Q sector");
    if (q_perturbation_) {
      if (q_perturbation_->rows() != q_energies_.size() ||
          q_perturbation_->cols() != q_energies_.size())
        throw std::invalid_argument("QH1Q perturbation dimension mismatch");
      require_hermitian(*q_perturbation_, "QH1Q perturbation");
    }
    partition_.full_dim = full_dim();
    partition_.parallel.resize(static_cast<size_t>(parallel_dim()));
    for (Eigen::Index i = 0; i < parallel_dim(); ++i)
      partition_.parallel[static_cast<size_t>(i)] = i;
  }

  Eigen::Index parallel_dim() const { return php_.rows(); }
  Eigen::Index q_dim() const { return q_energies_.size(); }
  Eigen::Index full_dim() const { return parallel_dim() + q_dim(); }

  double m0() const { return m0_; }
  const Matrix& php() const { return php_; }
  const Matrix& phq() const { return phq_; }
  Matrix qhp() const { return phq_.adjoint(); }
  const RealVector& q_energies() const { return q_energies_; }
  const std::optional<Matrix>& q_perturbation() const { return q_perturbation_; }
  bool q_diagonal() const { return !q_perturbation_.has_value(); }
  const std::vector<ChannelSlot>& channels() const { return channels_; }
  const SubspacePartition& partition() const { return partition_; }
  const std::string& note() const { return note_; }

  Matrix h1_parallel() const {
    return php_ - m0_ * Matrix::Identity(parallel_dim(), parallel_dim());
  }

  Matrix q_block() const {
    Matrix q = Matrix::Zero(q_dim(), q_dim());
    q.diagonal() = q_energies_.cast<Complex>();
    if (q_perturbation_) q += *q_perturbation_;
    return q;
  }

  double median_grid_spacing() const {
    std::vector<double> d;
    for (const auto& c : channels_)
      for (Eigen::Index i = 1; i < c.grid.size(); ++i)
        d.push_back(c.grid.energies[i] - c.grid.energies[i - 1]);
    if (d.empty()) return 0.0;
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
  }

  // Regulator default: 3x the median grid spacing; single-point grids fall
  // back to a fixed fraction of the mass scale.
  double default_eta() const {
    const double med = median_grid_spacing();
    if (med > 0.0) return 3.0 * med;
    return 1e-3 * std::max(1.0, std::abs(m0_));
  }

  Matrix full_h() const {
    const Eigen::Index n = parallel_dim();
    const Eigen::Index nf = full_dim();
    Matrix h = Matrix::Zero(nf, nf);
    h.topLeftCorner(n, n) = php_;
    h.topRightCorner(n, q_dim()) = phq_;
    h.bottomLeftCorner(q_dim(), n) = phq_.adjoint();
    h.bottomRightCorner(q_dim(), q_dim()) = q_block();
    return h;
  }

  Matrix full_h0() const {
    const Eigen::Index nf = full_dim();
    Matrix h0 = Matrix::Zero(nf, nf);
    for (Eigen::Index i = 0; i < parallel_dim(); ++i) h0(i, i) = m0_;
    for (Eigen::Index q = 0; q < q_dim(); ++q)
      h0(parallel_dim() + q, parallel_dim() + q) = q_energies_[q];
    return h0;
  }

  FullModel with_q_perturbation(Matrix qh1q) const {
    return FullModel(m0_, php_, phq_, q_energies_, channels_, std::move(qh1q),
                     note_);
  }

 private:
  double m0_;
  Matrix php_;
  Matrix phq_;
  RealVector q_energies_;
  std::vector<ChannelSlot> channels_;
  std::optional<Matrix> q_perturbation_;
  std::string note_;
  SubspacePartition partition_;
};

// n-level constructor; the coupling rows are embedded with sqrt weights so
// the discrete Q sums track the channel integrals.
inline FullModel build_model(double m0, const Matrix& h1_parallel,
                             const std::vector<Channel>& channels,
                             std::string note = {}) {
  require_hermitian(h1_parallel, "h1_parallel");
  if (channels.empty())
    throw std::invalid_argument("model needs at least one decay channel");
  const Eigen::Index n = h1_parallel.rows();
  std::set<std::string> labels;
  Eigen::Index total = 0;
  for (const auto& c : channels) {
    c.grid.validate();
    if (!labels.insert(c.label).second)
      throw std::invalid_argument("channel labels must be distinct: " + c.label);
    if (c.couplings.rows() != n || c.couplings.cols() != c.grid.size())
      throw std::invalid_argument("channel couplings must be n x (grid size)");
    total += c.grid.size();
  }
  Matrix php = m0 * Matrix::Identity(n, n) + h1_parallel;
  Matrix phq(n, total);
  RealVector qe(total);
  std::vector<ChannelSlot> slots;
  Eigen::Index off = 0;
  for (const auto& c : channels) {
    for (Eigen::Index i = 0; i < c.grid.size(); ++i) {
      const double sw = std::sqrt(c.grid.weights[i]);
      qe[off + i] = c.grid.energies[i];
      for (Eigen::Index k = 0; k < n; ++k)
        phq(k, off + i) = c.couplings(k, i) * sw;
    }
    slots.push_back({c.label, off, c.grid});
    off += c.grid.size();
  }
  return FullModel(m0, std::move(php), std::move(phq), std::move(qe),
                   std::move(slots), {}, std::move(note));
}

inline FullModel build_two_level_model(double m0, const Matrix& h1_parallel,
                                       const std::vector<Channel>& channels) {
  if (h1_parallel.rows() != 2 || h1_parallel.cols() != 2)
    throw std::invalid_argument("two-level model needs a 2x2 parallel block");
  return build_model(m0, h1_parallel, channels);
}

inline Blocks split_blocks(const FullModel& model) {
  Blocks b;
  b.php = model.php();
  b.phq = model.phq();
  b.qhp = model.qhp();
  b.qhq = model.q_block();
  return b;
}

}  // namespace loylab
