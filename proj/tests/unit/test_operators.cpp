#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace ipest;
using namespace ipest::testing;

namespace {
// Sine link a = 0.1, D = 16, n = 256, rho = 0.5, 256 pairs, seed 0xaf.
constexpr double kFrozenSineAf = 0.03929807628622875;
}  // namespace

TEST_CASE("link functions have consistent derivatives") {
  const LinkFunction links[] = {LinkFunction::affine(1.5, 0.2), LinkFunction::sine(0.1),
                                LinkFunction::quadratic_clipped(1.0, 0.3, 0.8)};
  for (const auto& f : links) {
    for (double u : {-2.0, -0.8, -0.3, 0.0, 0.5, 0.8, 1.7}) {
      const double h = 1e-6;
      const double fd = (f.value(u + h) - f.value(u - h)) / (2 * h);
      CHECK(f.derivative(u) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  const LinkFunction q = LinkFunction::quadratic_clipped(0.0, 1.0, 1.0);
  CHECK(q.value(0.5) == doctest::Approx(0.25));
  CHECK(q.value(2.0) == doctest::Approx(1.0 + 2.0 * 1.0));  // linear continuation
  CHECK_THROWS_AS(LinkFunction::quadratic_clipped(1.0, 1.0, 0.0), DomainError);
  CHECK(parse_link_kind("quadratic-clipped") == LinkKind::quadratic_clipped);
  CHECK_THROWS_AS(parse_link_kind("cubic"), ConfigError);
}

TEST_CASE("empirically orthonormal cosine system") {
  const DesignGrid g = DesignGrid::uniform(50);
  const Matrix P = empirical_cosine_system(g, 20);
  CHECK((P.transpose() * P / 50.0 - Matrix::Identity(20, 20)).norm() < 1e-12);
  CHECK_THROWS_AS(empirical_cosine_system(g, 51), DimensionError);
}

TEST_CASE("diagonal operator") {
  const DesignGrid g = DesignGrid::uniform(2);
  const ForwardOperator op = ForwardOperator::diagonal(g, vec({1.0, 0.5}), 1.0);
  CHECK(op.is_linear());
  const Vector c = op.observation_coefficients(vec({2.0, 2.0}));
  CHECK(c[0] == doctest::Approx(2.0));
  CHECK(c[1] == doctest::Approx(1.0));
  CHECK(std::isinf(op.rho()));

  const DesignGrid g64 = DesignGrid::uniform(64);
  const ForwardOperator dp = ForwardOperator::diagonal_power(g64, 16, 2.0);
  const Svd& s = dp.linearization().svd();
  for (Eigen::Index j = 0; j < 16; ++j)
    CHECK(s.s[j] == doctest::Approx(std::pow(static_cast<double>(j + 1), -2.0)).epsilon(1e-12));
  Rng rng(1);
  const Vector x = random_vector(16, rng);
  CHECK((dp.evaluate(x) - dp.T() * x).norm() < 1e-12);
  CHECK_THROWS_AS(dp.evaluate(Vector::Zero(3)), DimensionError);
  CHECK_THROWS_AS(ForwardOperator::diagonal(g, vec({1, 1, 1}), 1.0), DimensionError);
  CHECK_THROWS_AS(dp.evaluate(x, DesignGrid::uniform(63)), DimensionError);
}

TEST_CASE("hammerstein evaluation against closed-form integrals") {
  const std::size_t n = 2000;
  const DesignGrid g = DesignGrid::uniform(n);
  SUBCASE("phi(u) = u and x = 1 gives F(x)(t) = t") {
    OperatorOptions o;
    o.rho = 10.0;
    const ForwardOperator op = ForwardOperator::hammerstein(g, 8, LinkFunction::affine(1.0), 1.0, o);
    Vector x = Vector::Zero(8);
    x[0] = 1.0;  // chi_1 = 1
    const Vector y = op.evaluate(x);
    for (std::size_t i = 0; i < n; i += 97) CHECK(y[static_cast<Eigen::Index>(i)] == doctest::Approx(g[i]).epsilon(1e-12));
  }
  SUBCASE("phi(u) = u^2 and x(s) = s gives t^3 / 3") {
    OperatorOptions o;
    o.rho = 10.0;
    const ForwardOperator op = ForwardOperator::hammerstein(
        g, 8, LinkFunction::quadratic_clipped(0.0, 1.0, 10.0), 1.0, o);
    const Vector y = op.evaluate_values(g.as_vector());
    for (std::size_t i = 0; i < n; i += 97) {
      const double t = g[i];
      CHECK(std::abs(y[static_cast<Eigen::Index>(i)] - t * t * t / 3.0) <= 1.0 / static_cast<double>(n));
    }
  }
}

TEST_CASE("hammerstein linearization is the derivative at x_star") {
  const DesignGrid g = DesignGrid::uniform(300);
  OperatorOptions o;
  o.rho = 1.0;
  o.x_star = Vector::Constant(6, 0.1);
  const ForwardOperator op = ForwardOperator::hammerstein(g, 6, LinkFunction::sine(0.3), 1.0, o);
  CHECK_FALSE(op.is_linear());
  Rng rng(4);
  const Vector h = random_vector(6, rng).normalized();
  const double eps = 1e-6;
  const Vector fd = (op.evaluate(o.x_star + eps * h) - op.evaluate(o.x_star - eps * h)) / (2 * eps);
  CHECK((fd - op.T() * h).norm() <= 1e-6 * (op.T() * h).norm());
  CHECK_THROWS_AS(op.evaluate(o.x_star + 2.0 * h), DomainError);
  CHECK(op.in_trust_ball(o.x_star + 0.5 * h));
  CHECK_THROWS_AS(ForwardOperator::hammerstein(DesignGrid({0.0, 0.5}), 3, LinkFunction::sine(0.1), 1.0, o),
                  DomainError);
  OperatorOptions bad = o;
  bad.c_T = 1.0;
  CHECK_THROWS_AS(op.with_options(bad), DomainError);
}

TEST_CASE("jacobian adjoint away from the anchor") {
  const DesignGrid g = DesignGrid::uniform(200);
  OperatorOptions o;
  o.rho = 1.0;
  o.x_star = Vector::Constant(5, 0.2);
  const ForwardOperator op = ForwardOperator::hammerstein(g, 5, LinkFunction::sine(0.4), 1.0, o);
  Rng rng(9);
  const Vector x = o.x_star + 0.5 * random_vector(5, rng).normalized();
  const Vector w = random_vector(200, rng);
  const Vector adj = op.jacobian_transpose_apply(x, w);
  const double eps = 1e-6;
  for (Eigen::Index k = 0; k < 5; ++k) {
    const Vector e = Vector::Unit(5, k);
    const Vector dF = (op.evaluate(x + eps * e) - op.evaluate(x - eps * e)) / (2 * eps);
    CHECK(adj[k] == doctest::Approx(w.dot(dF)).epsilon(1e-7));
  }
  // linear kinds fall back to T^t
  const ForwardOperator vol = ForwardOperator::volterra(g, 5);
  CHECK((vol.jacobian_transpose_apply(x, w) - vol.T().transpose() * w).norm() <= 1e-12);
}

TEST_CASE("volterra operator integrates the cosine system") {
  const std::size_t n = 4000;
  const DesignGrid g = DesignGrid::uniform(n);
  const ForwardOperator op = ForwardOperator::volterra(g, 4);
  Vector x = Vector::Zero(4);
  x[1] = 1.0;  // sqrt(2) cos(pi s), integral sqrt(2) sin(pi t) / pi
  const Vector y = op.evaluate(x);
  for (std::size_t i = 0; i < n; i += 311) {
    const double exact = std::sqrt(2.0) * std::sin(M_PI * g[i]) / M_PI;
    CHECK(std::abs(y[static_cast<Eigen::Index>(i)] - exact) <= 2.0 / static_cast<double>(n));
  }
  CHECK((quadrature_weights(g).array() - 1.0 / static_cast<double>(n)).abs().maxCoeff() < 1e-15);
}

TEST_CASE("fractional powers of T*T") {
  const LinearizationMatrix T(Matrix::Constant(1, 1, 2.0), 1.0);
  CHECK(fractional_power_apply(T, 0.5, vec({1.0}))[0] == doctest::Approx(2.0));
  CHECK(fractional_power_apply(T, 0.25, vec({0.0}))[0] == 0.0);
  const DesignGrid g = DesignGrid::uniform(32);
  const ForwardOperator op = ForwardOperator::diagonal_power(g, 6, 1.0);
  Vector e2 = Vector::Zero(6);
  e2[1] = 1.0;
  const Vector r = fractional_power_apply(op.linearization(), 0.5, e2);
  CHECK((r - 0.5 * e2).norm() < 1e-12);
  CHECK_THROWS_AS(fractional_power_apply(T, 0.7, vec({1.0})), DomainError);
}

TEST_CASE("rate exponent") {
  CHECK(rate_exponent(0.5, 1.0) == doctest::Approx(0.2));
  CHECK(rate_exponent(0.5, 2.0) == doctest::Approx(2.0 / 9.0));
  CHECK(rate_exponent(0.0, 1.0) == 0.0);
}

TEST_CASE("source condition") {
  const DesignGrid g = DesignGrid::uniform(64);
  const ForwardOperator op = ForwardOperator::diagonal_power(g, 10, 1.0);
  SourceSpec s;
  s.nu = 0.5;
  s.omega = Vector::Zero(10);
  const Vector xs = Vector::Constant(10, 0.3);
  CHECK((make_source_solution(op.linearization(), s, xs) - xs).norm() == 0.0);
  s.omega[0] = 1.0;
  const Vector x0 = make_source_solution(op.linearization(), s, Vector::Zero(10));
  Vector e1 = Vector::Zero(10);
  e1[0] = 1.0;
  CHECK((x0 - e1).norm() < 1e-12);

  // Rank-deficient T: x0 - x_star must avoid the null space.
  Vector b = Vector::LinSpaced(10, 1.0, 0.1);
  b[7] = b[8] = b[9] = 0.0;
  const ForwardOperator deg = ForwardOperator::diagonal(g, b, 1.0);
  SourceSpec s2;
  s2.nu = 0.3;
  s2.omega = gaussian_omega(10, 77, 1.0);
  const Vector x = make_source_solution(deg.linearization(), s2, Vector::Zero(10));
  CHECK(null_space_component(deg.linearization(), x) <= 1e-12);
  CHECK(null_space_component(deg.linearization(), s2.omega) > 0.1);

  CHECK(gaussian_omega(10, 5, 2.0).norm() == doctest::Approx(2.0));
  CHECK(critical_omega(op.linearization(), 5, 1.0).norm() == doctest::Approx(1.0));
  SourceSpec bad;
  bad.nu = 0.6;
  bad.omega = Vector::Zero(10);
  CHECK_THROWS_AS(validate(bad, 10), DomainError);
}

TEST_CASE("range-invariance diagnostic") {
  const DesignGrid g = DesignGrid::uniform(256);
  SUBCASE("linear kinds give zero") {
    CHECK(diagnose_af(ForwardOperator::diagonal_power(g, 16, 1.0), 64, 1) == 0.0);
    CHECK(diagnose_af(ForwardOperator::volterra(g, 16), 64, 1) == 0.0);
  }
  SUBCASE("identity link is linear up to rounding") {
    OperatorOptions o;
    o.rho = 0.5;
    const auto op = ForwardOperator::hammerstein(g, 16, LinkFunction::affine(1.0), 1.0, o);
    CHECK(diagnose_af(op, 64, 2) < 1e-8);
  }
  SUBCASE("sine link at rho = 0.5 (frozen)") {
    OperatorOptions o;
    o.rho = 0.5;
    const auto op = ForwardOperator::hammerstein(g, 16, LinkFunction::sine(0.1), 1.0, o);
    const AfDiagnostic d = diagnose_af_report(op, 256, 0xaf);
    CHECK(d.pairs_used + d.pairs_skipped == 256);
    CHECK(d.c_T_estimate < 0.5);
    CHECK(d.c_T_estimate == doctest::Approx(kFrozenSineAf).epsilon(1e-9));
  }
}
