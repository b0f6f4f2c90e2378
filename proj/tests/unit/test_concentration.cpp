#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace ipest;
using namespace ipest::testing;

TEST_CASE("eta is the norm of A eps") {
  CHECK(eta(Matrix::Identity(3, 3), vec({3.0, 4.0, 0.0})) == doctest::Approx(5.0));
  Matrix row(1, 2);
  row << 1.0, 1.0;
  CHECK(eta(row, vec({1.0, 2.0})) == doctest::Approx(3.0));
  CHECK(eta(Matrix::Zero(2, 4), vec({1.0, -1.0, 2.0, 5.0})) == 0.0);
  CHECK_THROWS_AS(eta(row, vec({1.0, 2.0, 3.0})), DimensionError);
}

TEST_CASE("random directions approach eta from below") {
  Rng rng(17);
  const Matrix A = random_matrix(2, 12, rng);
  const Vector e = random_vector(12, rng);
  const double exact = eta(A, e);
  const double rough = eta_random_sup(A, e, 20, 5);
  const double fine = eta_random_sup(A, e, 20000, 5);
  CHECK(rough <= exact * (1 + 1e-12));
  CHECK(fine <= exact * (1 + 1e-12));
  CHECK(fine >= rough);
  CHECK(fine == doctest::Approx(exact).epsilon(1e-4));
}

TEST_CASE("projection identity on the cosine ladder") {
  const DesignGrid g = DesignGrid::uniform(64);
  const SubspaceLadder ladder = SubspaceLadder::from_basis(empirical_cosine_system(g, 16), {2, 4, 8, 16});
  Rng rng(3);
  const Vector e = random_vector(64, rng);
  for (std::size_t m = 0; m < 4; ++m) {
    const ProjectionIdentity pi = projection_identity_check(ladder, m, g, e);
    CHECK(pi.lhs == doctest::Approx(pi.rhs).epsilon(1e-10));
    CHECK(pi.gap <= 1e-10 * (1.0 + pi.rhs));
    CHECK(pi.rhs <= std::sqrt(e.squaredNorm() / 64.0) + 1e-12);
  }
}

TEST_CASE("tail threshold and bound formulas") {
  // sigma^2 (Tr + rho)(r/2)(1 + L) + sigma^2 u
  CHECK(tail_threshold(4.0, 1.0, 2.5, 0.5, 2.0, 1.0) == doctest::Approx(4.0 * (5.0 * 1.25 * 1.5 + 1.0)));
  const double k = 1.7 * (2.0 / 1.0 + 1.25 * 0.5 * (4.0 / 1.0 + 1.0));
  CHECK(tail_bound(4.0, 1.0, 2.5, 0.5, 1.7, 2.0) == doctest::Approx(std::exp(-std::sqrt(k))));
  CHECK(tail_bound(4.0, 1.0, 2.5, 0.5, 1.7, 8.0) < tail_bound(4.0, 1.0, 2.5, 0.5, 1.7, 2.0));
}

TEST_CASE("zero matrix never exceeds the threshold") {
  TailSettings s;
  s.n_trials = 2000;
  s.d = kCalibratedD;
  const ConcentrationReport rep = tail_experiment(Matrix::Zero(3, 5), "zero", {NoiseKind::gaussian, 1.0, 11}, s);
  for (double t : rep.empirical_tail) CHECK(t == 0.0);
  CHECK_FALSE(rep.any_flag);
}

TEST_CASE("identity-4 stays under the calibrated bound") {
  const NamedMatrix I4 = reference_matrix("identity-4");
  CHECK(I4.A.isApprox(Matrix::Identity(4, 4)));
  TailSettings s;
  s.d = kCalibratedD;
  s.n_trials = 20000;
  for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::bounded_uniform}) {
    const ConcentrationReport rep = tail_experiment(I4.A, I4.id, {kind, 1.0, 0x1234}, s);
    CHECK(rep.trace_ata == doctest::Approx(4.0));
    CHECK(rep.rho_ata == doctest::Approx(1.0));
    CHECK_FALSE(rep.any_flag);
    for (std::size_t k = 0; k < rep.u_grid.size(); ++k)
      CHECK(rep.empirical_tail[k] <= rep.analytic_bound[k] + 3 * rep.standard_error[k]);
  }
}

TEST_CASE("first moment matches the Gaussian quadrature") {
  // A = [1]: eta^2 = Z^2 and the offset is (1 + 1)(2.5/2)(1.5) = 3.75, so
  // E[(Z^2 - c)_+] = 2 [a phi(a) + (1 - c)(1 - Phi(a))] with a = sqrt(c).
  const double c = 3.75;
  const double a = std::sqrt(c);
  const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
  const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));
  const double exact = 2.0 * (a * phi + (1.0 - c) * tail);
  MomentSettings s;
  s.n_trials = 1000000;
  s.bootstrap = 50;
  s.d = kCalibratedD;
  s.C_q = kCalibratedCq1;
  const MomentCheck m = moment_bound_check(Matrix::Identity(1, 1), {NoiseKind::gaussian, 1.0, 99}, s);
  CHECK(m.standard_error > 0.0);
  CHECK(std::abs(m.empirical - exact) <= 4.0 * m.standard_error);
  CHECK(m.empirical <= m.analytic);
}

TEST_CASE("sampling does not depend on the thread count") {
  const NamedMatrix G = reference_matrix("gaussian-8x32");
  const NoiseSpec noise{NoiseKind::gaussian, 1.0, 0xBEEF};
  const std::vector<double> one = sample_eta_squared(G.A, noise, 5000, 1);
  const std::vector<double> four = sample_eta_squared(G.A, noise, 5000, 4);
  CHECK(one == four);
  const std::vector<double> other = sample_eta_squared(G.A, {NoiseKind::gaussian, 1.0, 0xBEF0}, 5000, 1);
  CHECK(one != other);
}

TEST_CASE("reference family") {
  const std::vector<NamedMatrix> fam = reference_family();
  REQUIRE(fam.size() == 4);
  CHECK(fam[0].id == "identity-4");
  CHECK(reference_matrix("projector-8of32").A.rows() > 0);
  CHECK_THROWS(reference_matrix("no-such-matrix"));
}
