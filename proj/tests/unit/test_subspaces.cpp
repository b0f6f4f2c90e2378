#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace ipest;
using namespace ipest::testing;

namespace {
// Dense-SVD oracle for the volterra operator (n = 512, D = 32) with the
// 8-bin histogram level, computed independently with numpy.
constexpr double kVolterraGamma = 0.036594297496883324;
constexpr double kVolterraGammaUpper = 0.039789802620230345;
}  // namespace

TEST_CASE("projection onto a constant basis is the mean") {
  const DesignGrid g = DesignGrid::uniform(2);
  const auto ladder = SubspaceLadder::from_basis(Matrix::Ones(2, 1), {1});
  const Projection p = empirical_project(vec({2, 4}), ladder, 0, g);
  CHECK(p.coefficients[0] == doctest::Approx(3.0));
  CHECK(p.projected[0] == doctest::Approx(3.0));
  CHECK(p.projected[1] == doctest::Approx(3.0));
}

TEST_CASE("projection is idempotent and matches the normal equations") {
  Rng rng(21);
  const std::size_t n = 90;
  const DesignGrid g = DesignGrid::uniform(n);
  const Matrix B = random_matrix(90, 12, rng);
  const auto ladder = SubspaceLadder::from_basis(B, {3, 7, 12});
  for (std::size_t lvl = 0; lvl < 3; ++lvl) {
    const auto d = static_cast<Eigen::Index>(ladder.dim(lvl));
    const Vector y = random_vector(90, rng);
    const Projection p = empirical_project(y, ladder, lvl, g);
    const Matrix G = B.leftCols(d);
    const Vector normal = (G.transpose() * G).ldlt().solve(G.transpose() * y);
    CHECK((p.coefficients - normal).norm() <= 1e-10 * normal.norm());
    CHECK((G * normal - p.projected).norm() <= 1e-10 * y.norm());
    const Projection again = empirical_project(p.projected, ladder, lvl, g);
    CHECK((again.projected - p.projected).norm() <= 1e-10 * y.norm());
    const Vector in_span = G * random_vector(d, rng);
    CHECK((empirical_project(in_span, ladder, lvl, g).projected - in_span).norm() <= 1e-10 * in_span.norm());
  }
  CHECK((ladder.Q().transpose() * ladder.Q() / static_cast<double>(n) - Matrix::Identity(12, 12)).norm() < 1e-12);
}

TEST_CASE("rank deficient levels raise a conditioning error naming the level") {
  Rng rng(2);
  Matrix B = random_matrix(40, 5, rng);
  B.col(3) = B.col(0) - 2.0 * B.col(1);
  const auto ladder = SubspaceLadder::from_basis(B, {2, 3, 4, 5});
  CHECK_NOTHROW(ladder.check_level(1));
  try {
    ladder.check_level(2);
    FAIL("expected ConditioningError");
  } catch (const ConditioningError& e) {
    CHECK(std::string(e.what()).find("level 2") != std::string::npos);
  }
  CHECK_THROWS_AS(ladder.check_level(3), ConditioningError);
  CHECK_THROWS_AS(ladder.check_level(4), DomainError);
  CHECK_THROWS_AS(SubspaceLadder::from_basis(B, {3, 2}), DomainError);
}

TEST_CASE("histogram ladder") {
  const DesignGrid g = DesignGrid::uniform(64);
  const auto ladder = SubspaceLadder::histogram(g, 3);
  CHECK(ladder.dims() == std::vector<std::size_t>{1, 2, 4, 8});
  // Level k spans the indicators of 2^k equal bins.
  const Vector y = g.as_vector();
  const Projection p = empirical_project(y, ladder, 3, g);
  for (std::size_t i = 0; i < 64; ++i) {
    const std::size_t bin = i / 8;
    double mean = 0.0;
    for (std::size_t k = bin * 8; k < bin * 8 + 8; ++k) mean += g[k] / 8.0;
    CHECK(p.projected[static_cast<Eigen::Index>(i)] == doctest::Approx(mean));
  }
}

TEST_CASE("gamma_m and gamma_upper for the diagonal operator") {
  const DesignGrid g = DesignGrid::uniform(16);
  const auto op = ForwardOperator::diagonal(g, vec({1.0, 0.5, 0.25}), 1.0);
  const auto ladder = SubspaceLadder::singular(op.linearization(), {1, 2, 3});
  CHECK(gamma_m(op.linearization(), ladder, 1, g) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gamma_upper(op.linearization(), ladder, 1, g) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(gamma_upper(op.linearization(), ladder, 2, g) <= 1e-7);

  const auto id = ForwardOperator::diagonal(g, Vector::Ones(5), 1.0);
  const auto full = SubspaceLadder::singular(id.linearization(), {5});
  CHECK(gamma_m(id.linearization(), full, 0, g) == doctest::Approx(1.0));

  for (double p : {0.5, 1.0, 2.0}) {
    const DesignGrid g2 = DesignGrid::uniform(128);
    const auto dp = ForwardOperator::diagonal_power(g2, 40, p);
    const auto lad = SubspaceLadder::singular(dp.linearization(), iota_dims(1, 20));
    for (std::size_t lvl = 0; lvl < lad.levels(); ++lvl) {
      const double d = static_cast<double>(lad.dim(lvl));
      CHECK(gamma_m(dp.linearization(), lad, lvl, g2) == doctest::Approx(std::pow(d, -p)).epsilon(1e-10));
      CHECK(gamma_upper(dp.linearization(), lad, lvl, g2) ==
            doctest::Approx(std::pow(d + 1, -p)).epsilon(1e-10));
    }
  }
}

TEST_CASE("gamma values for the volterra operator match the dense oracle") {
  const DesignGrid g = DesignGrid::uniform(512);
  const auto op = ForwardOperator::volterra(g, 32);
  const auto ladder = SubspaceLadder::histogram(g, 3);
  const std::size_t lvl = 3;
  REQUIRE(ladder.dim(lvl) == 8);
  CHECK(gamma_m(op.linearization(), ladder, lvl, g) == doctest::Approx(kVolterraGamma).epsilon(0.05));
  CHECK(gamma_upper(op.linearization(), ladder, lvl, g) == doctest::Approx(kVolterraGammaUpper).epsilon(0.05));
}

TEST_CASE("model projectors") {
  const DesignGrid g = DesignGrid::uniform(8);
  const auto id = ForwardOperator::diagonal(g, Vector::Ones(4), 1.0);
  const auto ladder = SubspaceLadder::from_basis(id.synthesis().leftCols(1), {1});
  const ModelProjector mp = build_model_projector(id.linearization(), ladder, 0, g);
  Matrix expected = Matrix::Zero(4, 4);
  expected(0, 0) = 1.0;
  CHECK((mp.sol_projector - expected).norm() < 1e-12);
  CHECK(mp.obs_projector.rows() == 8);

  Rng rng(6);
  const DesignGrid g2 = DesignGrid::uniform(60);
  const auto vol = ForwardOperator::volterra(g2, 20);
  const auto lad = SubspaceLadder::from_basis(random_matrix(60, 15, rng), {3, 6, 10, 15});
  std::vector<ModelProjector> ps;
  for (std::size_t l = 0; l < lad.levels(); ++l) ps.push_back(build_model_projector(vol.linearization(), lad, l, g2));
  for (std::size_t l = 0; l < lad.levels(); ++l) {
    const Matrix& P = ps[l].sol_projector;
    CHECK((P * P - P).norm() <= 1e-10);
    const Matrix& O = ps[l].obs_projector;
    CHECK((O * O - O).norm() <= 1e-10);
    for (std::size_t l2 = l + 1; l2 < lad.levels(); ++l2)
      CHECK((P * ps[l2].sol_projector - P).norm() <= 1e-10);
  }
  CHECK(build_model_projector(vol.linearization(), lad, 0, g2, 0).obs_projector.size() == 0);
}

TEST_CASE("model systems agree with the one-level builder") {
  const DesignGrid g = DesignGrid::uniform(100);
  const auto op = ForwardOperator::volterra(g, 12);
  const auto ladder = SubspaceLadder::histogram(g, 3);
  const auto all = build_model_systems(op.linearization(), ladder);
  REQUIRE(all.size() == ladder.levels());
  for (std::size_t l = 0; l < all.size(); ++l) {
    const ModelSystem one = build_model_system(op.linearization(), ladder, l);
    CHECK((all[l].M - one.M).norm() <= 1e-14);
    CHECK((all[l].pinv - one.pinv).norm() <= 1e-10 * one.pinv.norm());
  }
}

TEST_CASE("approximation-space diagnostic") {
  const DesignGrid g = DesignGrid::uniform(128);
  const auto op = ForwardOperator::diagonal_power(g, 32, 1.0);
  const auto ladder = SubspaceLadder::singular(op.linearization(), {2, 4, 8, 16});
  const AsDiagnostic as = as_diagnostic(op.linearization(), ladder, g);
  REQUIRE(as.ratio.size() == 3);
  // gamma_upper(d) / gamma(2d) = (2d)/(d+1) for b_j = 1/j.
  for (std::size_t k = 0; k < 3; ++k) {
    const double d = static_cast<double>(ladder.dim(k));
    CHECK(as.ratio[k] == doctest::Approx(2.0 * d / (d + 1.0)).epsilon(1e-9));
  }
  CHECK(as.band_low == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
  CHECK(as.band_high == doctest::Approx(16.0 / 9.0).epsilon(1e-9));
}
