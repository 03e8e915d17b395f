#include <catch_amalgamated.hpp>

#include <loylab/effective.hpp>
#include <loylab/random_models.hpp>

#include "support/oracles.hpp"

using namespace loylab;

namespace {

Channel flat_channel(const std::string& label, double lo, double hi,
                     Eigen::Index n, Complex g1, Complex g2) {
  Channel ch;
  ch.label = label;
  ch.grid = ContinuumGrid::uniform(lo, hi, n);
  ch.couplings.resize(2, ch.grid.size());
  ch.couplings.row(0) = flat_coupling(ch.grid, g1).transpose();
  ch.couplings.row(1) = flat_coupling(ch.grid, g2).transpose();
  return ch;
}

Channel single_level(const std::string& label, double e, Complex g1, Complex g2) {
  Channel ch;
  ch.label = label;
  ch.grid.energies = RealVector::Constant(1, e);
  ch.grid.weights = RealVector::Constant(1, 1.0);
  ch.couplings.resize(2, 1);
  ch.couplings(0, 0) = g1;
  ch.couplings(1, 0) = g2;
  return ch;
}

// Damped time-integration reference for the stationary correction:
//   V = -i sum_j [ integral_0^T B exp(-i s (D - lambda_j)) B^+ exp(-eta s) ds ] P_j
// over the spectral clusters of K, composite Simpson in s. Independent of the
// resolvent code path.
Matrix v_time_integrated(const FullModel& model, const Matrix& k, double eta) {
  const auto clusters = spectral_projectors(k, default_gap_tol(k));
  const Eigen::Index n = k.rows();
  const double t_max = 40.0 / eta;
  const int steps = 2 * static_cast<int>(t_max * 200.0);
  const double h = t_max / steps;
  Matrix v = Matrix::Zero(n, n);
  for (const auto& c : clusters) {
    Matrix acc = Matrix::Zero(n, n);
    for (int i = 0; i <= steps; ++i) {
      const double s = i * h;
      Vector kernel(model.q_dim());
      for (Eigen::Index q = 0; q < model.q_dim(); ++q)
        kernel[q] = std::exp(-ii * s * (model.q_energies()[q] - c.lambda)) *
                    std::exp(-eta * s);
      const Matrix integrand =
          model.phq() * kernel.asDiagonal() * model.phq().adjoint();
      const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * integrand;
    }
    acc *= h / 3.0;
    v += -ii * acc * c.projector;
  }
  return v;
}

// The improved correction assembled entry by entry from sigma matrix
// elements, following the two-level component formulas; an independent route
// to the same object as the operator form.
Matrix v_improved_elementwise(const FullModel& model, double eta) {
  SelfEnergyEvaluator se(model, eta);
  const Matrix h1 = model.h1_parallel();
  const PauliDecomposition d = pauli_decompose(h1);
  REQUIRE(d.kappa > 0.0);
  const Matrix sp = se.sigma(model.m0() + d.h0 + d.kappa);
  const Matrix sm = se.sigma(model.m0() + d.h0 - d.kappa);
  Matrix v(2, 2);
  for (int j = 0; j < 2; ++j) {
    v(j, 0) = -0.5 * (1.0 + d.hz / d.kappa) * sp(j, 0) -
              0.5 * (1.0 - d.hz / d.kappa) * sm(j, 0) -
              h1(1, 0) / (2.0 * d.kappa) * sp(j, 1) +
              h1(1, 0) / (2.0 * d.kappa) * sm(j, 1);
    v(j, 1) = -0.5 * (1.0 - d.hz / d.kappa) * sp(j, 1) -
              0.5 * (1.0 + d.hz / d.kappa) * sm(j, 1) -
              h1(0, 1) / (2.0 * d.kappa) * sp(j, 0) +
              h1(0, 1) / (2.0 * d.kappa) * sm(j, 0);
  }
  return v;
}

}  // namespace

TEST_CASE("pauli decomposition") {
  SECTION("identity") {
    auto d = pauli_decompose(Matrix::Identity(2, 2));
    CHECK(d.h0 == 1.0);
    CHECK(d.kappa == 0.0);
  }
  SECTION("sigma_x") {
    Matrix sx(2, 2);
    sx << 0, 1, 1, 0;
    auto d = pauli_decompose(sx);
    CHECK(d.h0 == 0.0);
    CHECK(d.hx == 1.0);
    CHECK(d.kappa == 1.0);
  }
  SECTION("eigenvalues are h0 +- kappa and reconstruction is exact") {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix m = random_hermitian(rng, 2, 1.5);
      const auto d = pauli_decompose(m);
      CHECK((d.reconstruct() - m).norm() < 1e-14 * std::max(1.0, m.norm()));
      Eigen::SelfAdjointEigenSolver<Matrix> es(m);
      CHECK(std::abs(es.eigenvalues()[0] - (d.h0 - d.kappa)) < 1e-13);
      CHECK(std::abs(es.eigenvalues()[1] - (d.h0 + d.kappa)) < 1e-13);
      CHECK(d.kappa * d.kappa ==
            Catch::Approx(std::real(m(0, 1) * m(1, 0)) + d.hz * d.hz)
                .margin(1e-13));
    }
  }
  SECTION("rejects non-Hermitian input") {
    Matrix m(2, 2);
    m << 0, Complex(0, 1), Complex(0, 1), 0;
    CHECK_THROWS_AS(pauli_decompose(m), std::invalid_argument);
  }
}

TEST_CASE("exp_php") {
  SECTION("t = 0 is the identity") {
    Rng rng(2);
    const auto d = pauli_decompose(random_hermitian(rng, 2, 1.0));
    CHECK((exp_php(0.0, d, +1) - Matrix::Identity(2, 2)).norm() < 1e-15);
  }
  SECTION("pure phase when h = 0") {
    PauliDecomposition d;
    d.h0 = 0.7;
    const Matrix e = exp_php(2.0, d, -1);
    CHECK((e - std::exp(-ii * 1.4) * Matrix::Identity(2, 2)).norm() < 1e-15);
  }
  SECTION("matches the eigendecomposition exponential and stays unitary") {
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
      const Matrix m = random_hermitian(rng, 2, 2.0);
      const auto d = pauli_decompose(m);
      Eigen::SelfAdjointEigenSolver<Matrix> es(m);
      for (int sign : {+1, -1}) {
        Matrix expected = Matrix::Zero(2, 2);
        for (int j = 0; j < 2; ++j)
          expected += std::exp(Complex(0.0, sign * 1.7 * es.eigenvalues()[j])) *
                      es.eigenvectors().col(j) *
                      es.eigenvectors().col(j).adjoint();
        const Matrix got = exp_php(1.7, d, sign);
        CHECK((got - expected).norm() < 1e-12);
        CHECK((got * got.adjoint() - Matrix::Identity(2, 2)).norm() < 1e-12);
      }
    }
  }
  SECTION("sign validation") {
    PauliDecomposition d;
    CHECK_THROWS_AS(exp_php(1.0, d, 0), std::invalid_argument);
  }
}

TEST_CASE("mass/decay split reassembles the matrix") {
  Rng rng(31);
  auto model = random_weak_two_level(rng);
  for (const auto& h : {h_loy0(model), h_loy(model), h_loy_imp(model)}) {
    CHECK(hermiticity_residual(h.mass_part()) < 1e-12);
    CHECK(hermiticity_residual(h.decay_part()) < 1e-12);
    const Matrix rebuilt = h.mass_part() - 0.5 * ii * h.decay_part();
    CHECK((rebuilt - h.matrix).norm() < 1e-14 * h.matrix.norm());
  }
}

TEST_CASE("loy0: zero coupling gives m0 I") {
  auto model = build_two_level_model(
      3.0, Matrix::Zero(2, 2), {flat_channel("a", 0.0, 4.0, 12, 0.0, 0.0)});
  const auto h = h_loy0(model, 0.1);
  CHECK((h.matrix - 3.0 * Matrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("loy0 golden rule: width approaches 2 pi |g(m0)|^2") {
  const double g = 0.1;
  double prev_err = 1e300;
  for (auto [n, eta] : {std::pair<int, double>{1000, 0.2},
                        {4000, 0.05},
                        {16000, 0.0125}}) {
    auto model = build_two_level_model(
        10.0, Matrix::Zero(2, 2), {flat_channel("a", 4.0, 16.0, n, g, 0.0)});
    const auto h = h_loy0(model, eta);
    const double width = std::real(h.decay_part()(0, 0));
    const double err = std::abs(width - 2.0 * M_PI * g * g);
    CHECK(err < prev_err + 1e-14);
    prev_err = err;
  }
  CHECK(prev_err < 0.01 * 2.0 * M_PI * g * g);
}

TEST_CASE("loy equals loy0 when the Q sector is free, differs otherwise") {
  auto model = build_two_level_model(
      10.0, Matrix::Zero(2, 2),
      {flat_channel("a", 4.0, 16.0, 40, Complex(0.2, 0.1), 0.1)});
  CHECK((h_loy(model, 0.5).matrix - h_loy0(model, 0.5).matrix).norm() == 0.0);

  Matrix pat = Matrix::Zero(model.q_dim(), model.q_dim());
  pat(0, 1) = 0.3;
  pat(1, 0) = 0.3;
  auto perturbed = model.with_q_perturbation(pat);
  CHECK((h_loy(perturbed, 0.5).matrix - h_loy0(perturbed, 0.5).matrix).norm() >
        1e-6);
}

TEST_CASE("loy agrees with the damped time-integration oracle") {
  auto model = build_two_level_model(
      10.0, Matrix::Zero(2, 2),
      {flat_channel("a", 4.0, 16.0, 160, 0.15, Complex(0.1, 0.04))});
  const double eta = 0.5;
  const Matrix m0_only = model.m0() * Matrix::Identity(2, 2);
  const Matrix oracle = v_time_integrated(model, m0_only, eta);
  const Matrix v = h_loy(model, eta).matrix - m0_only;
  CHECK((v - oracle).norm() < 1e-6 * oracle.norm());
}

TEST_CASE("improved form: limits and equivalences") {
  SECTION("PH1P = 0 collapses onto the LOY form") {
    auto model = build_two_level_model(
        10.0, Matrix::Zero(2, 2),
        {flat_channel("a", 4.0, 16.0, 60, 0.2, Complex(0.05, 0.1))});
    CHECK((h_loy_imp(model, 0.4).matrix - h_loy(model, 0.4).matrix).norm() <
          1e-14);
  }

  SECTION("operator form matches the elementwise component formulas") {
    Rng rng(13);
    for (int rep = 0; rep < 10; ++rep) {
      auto model = random_weak_two_level(rng);
      const double eta = model.default_eta();
      const Matrix v_elem = v_improved_elementwise(model, eta);
      const Matrix v_op = h_loy_imp(model, eta).matrix - model.php();
      CHECK((v_op - v_elem).norm() < 1e-13 * std::max(1.0, v_elem.norm()));
    }
  }

  SECTION("pauli closed form equals the spectral form") {
    Rng rng(17);
    for (int rep = 0; rep < 25; ++rep) {
      auto model = random_weak_two_level(rng);
      const double eta = model.default_eta();
      const Matrix lhs = h_loy_imp(model, eta).matrix;
      const Matrix rhs = model.php() + v_spectral(model, model.php(), eta);
      CHECK((lhs - rhs).norm() < 1e-10 * model.php().norm());
    }
  }

  SECTION("near-degenerate kappa routes through the clustered limit") {
    Matrix h1(2, 2);
    h1 << 0.05, 1e-12, 1e-12, 0.05;  // kappa ~ 1e-12 under a 0.05 scale
    auto model = build_two_level_model(
        10.0, h1, {flat_channel("a", 4.0, 16.0, 60, 0.2, 0.1)});
    const auto h = h_loy_imp(model, 0.4);
    const Matrix expected =
        model.php() - SelfEnergyEvaluator(model, 0.4).sigma(10.05);
    CHECK((h.matrix - expected).norm() < 1e-12);
  }

  SECTION("requires a two-level parallel block") {
    Matrix h1 = Matrix::Zero(1, 1);
    Channel ch;
    ch.label = "a";
    ch.grid = ContinuumGrid::uniform(0.0, 4.0, 8);
    ch.couplings = Matrix::Constant(1, 8, Complex(0.1, 0.0));
    auto model = build_model(2.0, h1, {ch});
    CHECK_THROWS_AS(h_loy_imp(model), std::invalid_argument);
  }
}

TEST_CASE("spectral projectors") {
  SECTION("hermitian: orthogonal projectors, completeness") {
    Rng rng(41);
    const Matrix k = random_hermitian(rng, 3, 1.0);
    const auto clusters = spectral_projectors(k, default_gap_tol(k));
    Matrix sum = Matrix::Zero(3, 3);
    Matrix rebuilt = Matrix::Zero(3, 3);
    for (const auto& c : clusters) {
      CHECK((c.projector * c.projector - c.projector).norm() < 1e-12);
      CHECK(hermiticity_residual(c.projector) < 1e-12);
      sum += c.projector;
      rebuilt += c.lambda * c.projector;
    }
    CHECK((sum - Matrix::Identity(3, 3)).norm() < 1e-12);
    CHECK((rebuilt - k).norm() < 1e-12 * k.norm());
  }

  SECTION("exact degeneracy merges into one projector") {
    Matrix k = Matrix::Zero(3, 3);
    k.diagonal() << 1.0, 1.0, 2.0;
    const auto clusters = spectral_projectors(k, default_gap_tol(k));
    REQUIRE(clusters.size() == 2);
  }

  SECTION("non-Hermitian: bi-orthogonal projectors reassemble K") {
    Rng rng(43);
    Matrix k = random_hermitian(rng, 3, 1.0);
    k += Complex(0.0, -0.2) * random_hermitian(rng, 3, 1.0);  // decaying part
    const auto clusters = spectral_projectors(k, default_gap_tol(k));
    Matrix sum = Matrix::Zero(3, 3), rebuilt = Matrix::Zero(3, 3);
    for (const auto& c : clusters) {
      CHECK((c.projector * c.projector - c.projector).norm() < 1e-10);
      sum += c.projector;
      rebuilt += c.lambda * c.projector;
    }
    CHECK((sum - Matrix::Identity(3, 3)).norm() < 1e-10);
    CHECK((rebuilt - k).norm() < 1e-10 * k.norm());
  }

  SECTION("defective matrices are rejected") {
    Matrix jordan(2, 2);
    jordan << 1.0, 1.0, 0.0, 1.0;
    CHECK_THROWS_AS(spectral_projectors(jordan, 1e-10), NumericalError);
  }
}

TEST_CASE("v_spectral") {
  SECTION("n = 1: single projector, sigma at the expectation value") {
    Matrix h1 = Matrix::Zero(1, 1);
    Channel ch;
    ch.label = "a";
    ch.grid = ContinuumGrid::uniform(4.0, 16.0, 80);
    ch.couplings = Matrix::Constant(1, 80, Complex(0.12, 0.03));
    auto model = build_model(10.0, h1, {ch});
    const Matrix v = v_spectral(model, model.php(), 0.5);
    const Complex expected = -SelfEnergyEvaluator(model, 0.5).sigma(10.0)(0, 0);
    CHECK(std::abs(v(0, 0) - expected) < 1e-14);
  }

  SECTION("n = 3 random Hermitian K matches the damped time integral") {
    Rng rng(47);
    Matrix h1 = random_hermitian(rng, 3, 0.4);
    Channel ch;
    ch.label = "a";
    ch.grid = ContinuumGrid::uniform(4.0, 16.0, 60);
    ch.couplings.resize(3, 60);
    for (int k = 0; k < 3; ++k)
      ch.couplings.row(k) =
          lorentzian_coupling(ch.grid, rng.complex_in_disc(0.2),
                              rng.uniform(8.0, 12.0), rng.uniform(1.0, 2.0))
              .transpose();
    auto model = build_model(10.0, h1, {ch});
    const double eta = 0.5;
    const Matrix v = v_spectral(model, model.php(), eta);
    const Matrix oracle = v_time_integrated(model, model.php(), eta);
    CHECK((v - oracle).norm() < 1e-4 * oracle.norm());
  }
}

TEST_CASE("fixed-point iteration") {
  SECTION("zero coupling converges immediately to V = 0") {
    auto model = build_two_level_model(
        3.0, Matrix::Zero(2, 2), {flat_channel("a", 0.0, 4.0, 12, 0.0, 0.0)});
    const auto r = iterate_v(model, 10, 1e-12, 0.1);
    CHECK(r.status == IterationStatus::converged);
    CHECK(r.iterations == 1);
    CHECK(r.v.norm() == 0.0);
  }

  SECTION("first iterate is the spectral correction at PHP") {
    Rng rng(53);
    auto model = random_weak_two_level(rng);
    const double eta = model.default_eta();
    const auto r = iterate_v(model, 1, 1e-30, eta);
    CHECK(r.status == IterationStatus::max_iterations);  // one step, no tol hit
    CHECK((r.v - v_spectral(model, model.php(), eta)).norm() == 0.0);
  }

  SECTION("weak-coupling contraction across a coupling sweep") {
    for (double g : {0.02, 0.05, 0.1}) {
      Matrix h1(2, 2);
      h1 << 0.25, 0.1, 0.1, -0.25;  // gap well above the coupling scale
      auto model = build_two_level_model(
          10.0, h1, {flat_channel("a", 4.0, 16.0, 120, g, 0.6 * g)});
      const double eta = 0.3;
      const auto r = iterate_v(model, 2, 1e-30, eta);
      REQUIRE(r.history.size() == 2);
      const double v1 = v_spectral(model, model.php(), eta).norm();
      const auto d = pauli_decompose(model.h1_parallel());
      const double gap = 2.0 * d.kappa;
      CHECK(r.history[1] < v1 * (v1 / gap));
    }
  }

  SECTION("input validation and convergence flagging") {
    auto model = build_two_level_model(
        3.0, Matrix::Zero(2, 2), {flat_channel("a", 0.0, 4.0, 12, 0.3, 0.0)});
    CHECK_THROWS_AS(iterate_v(model, 0, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(iterate_v(model, 5, 0.0), std::invalid_argument);
    const auto r = iterate_v(model, 1, 1e-30, 0.2);
    CHECK(r.status == IterationStatus::max_iterations);
    CHECK_FALSE(r.message.empty());
  }
}

TEST_CASE("one-dimensional reduction") {
  SECTION("decoupled eigenvector: real value, zero width") {
    auto model = build_two_level_model(
        5.0, Matrix::Zero(2, 2),
        {flat_channel("a", 0.0, 4.0, 20, 0.0, Complex(0.2, 0.1))});
    Vector psi = Vector::Zero(model.full_dim());
    psi[0] = 1.0;  // state 1 has no coupling and no internal mixing
    const auto h = h_1d(model, psi, 0.2);
    CHECK(std::abs(std::imag(h.matrix(0, 0))) < 1e-15);
    CHECK(std::real(h.matrix(0, 0)) == Catch::Approx(5.0));
  }

  SECTION("single Q level: scalar resolvent") {
    const Complex g{0.3, 0.1};
    const double e = 2.0, eta = 0.05;
    auto model = build_two_level_model(1.0, Matrix::Zero(2, 2),
                                       {single_level("a", e, g, 0.0)});
    Vector psi = Vector::Zero(3);
    psi[0] = 1.0;
    const auto h = h_1d(model, psi, eta);
    const Complex expected = 1.0 - std::norm(g) / (e - 1.0 - ii * eta);
    CHECK(std::abs(h.matrix(0, 0) - expected) < 1e-13);
  }

  SECTION("block consistency with the improved two-level form") {
    // H12 = 0 and a decoupled second row: the psi = |1> reduction and the
    // (1,1) element of the improved Hamiltonian describe the same problem
    Matrix h1(2, 2);
    h1 << 0.08, 0.0, 0.0, -0.05;
    auto model = build_two_level_model(
        10.0, h1, {flat_channel("a", 4.0, 16.0, 100, 0.15, 0.0)});
    Vector psi = Vector::Zero(model.full_dim());
    psi[0] = 1.0;
    const double eta = 0.4;
    const auto h1d = h_1d(model, psi, eta);
    const auto himp = h_loy_imp(model, eta);
    CHECK(std::abs(h1d.matrix(0, 0) - himp.matrix(0, 0)) <
          1e-12 * std::abs(himp.matrix(0, 0)));
  }

  SECTION("rejects unnormalized psi") {
    auto model = build_two_level_model(
        5.0, Matrix::Zero(2, 2), {flat_channel("a", 0.0, 4.0, 8, 0.1, 0.0)});
    Vector psi = Vector::Zero(model.full_dim());
    psi[0] = 2.0;
    CHECK_THROWS_AS(h_1d(model, psi), std::invalid_argument);
  }
}

TEST_CASE("method collapse when PH1P = 0") {
  Rng rng(59);
  for (int rep = 0; rep < 5; ++rep) {
    auto base = random_weak_two_level(rng);
    // rebuild with the same channels but a vanishing parallel perturbation
    std::vector<Channel> chans;
    for (const auto& slot : base.channels()) {
      Channel ch;
      ch.label = slot.label;
      ch.grid = slot.grid;
      ch.couplings.resize(2, slot.grid.size());
      for (Eigen::Index i = 0; i < slot.grid.size(); ++i) {
        const double sw = std::sqrt(slot.grid.weights[i]);
        ch.couplings(0, i) = base.phq()(0, slot.offset + i) / sw;
        ch.couplings(1, i) = base.phq()(1, slot.offset + i) / sw;
      }
      chans.push_back(std::move(ch));
    }
    auto model = build_two_level_model(base.m0(), Matrix::Zero(2, 2), chans);
    const double eta = model.default_eta();
    const Matrix a = h_loy(model, eta).matrix;
    const Matrix b = h_loy_imp(model, eta).matrix;
    const Matrix c = model.php() + iterate_v(model, 1, 1e-30, eta).v;
    CHECK((a - b).norm() < 1e-12 * a.norm());
    CHECK((a - c).norm() < 1e-12 * a.norm());
  }
}

TEST_CASE("decay positivity of the LOY forms") {
  Rng rng(61);
  for (int rep = 0; rep < 10; ++rep) {
    auto model = random_weak_two_level(rng);
    for (const auto& h : {h_loy0(model), h_loy(model)}) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(h.decay_part());
      CHECK(es.eigenvalues().minCoeff() > -1e-12 * h.decay_part().norm());
    }
  }
}
