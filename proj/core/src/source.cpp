#include "ipest/source.hpp"

#include <cmath>
#include <random>
#include <string>

#include "ipest/errors.hpp"
#include "ipest/noise.hpp"

namespace ipest {

void validate(const SourceSpec& spec, std::size_t D) {
  if (!(spec.nu > 0.0 && spec.nu <= 0.5)) throw DomainError("source nu must lie in (0, 1/2]");
  if (static_cast<std::size_t>(spec.omega.size()) != D)
    throw DimensionError("source omega has dimension " + std::to_string(spec.omega.size()) +
                         ", expected " + std::to_string(D));
  if (!spec.omega.allFinite()) throw DomainError("source omega has non-finite entries");
  if (spec.omega.norm() > spec.radius * (1.0 + 1e-12))
    throw DomainError("||omega|| = " + std::to_string(spec.omega.norm()) +
                      " exceeds the stated source radius " + std::to_string(spec.radius));
}

Vector make_source_solution(const LinearizationMatrix& T, const SourceSpec& spec,
                            const Vector& x_star) {
  validate(spec, T.dim());
  if (x_star.size() != spec.omega.size()) throw DimensionError("x_star has the wrong dimension");
  return x_star + fractional_power_apply(T, spec.nu, spec.omega);
}

Vector gaussian_omega(std::size_t D, std::uint64_t seed, double radius) {
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector w(static_cast<Eigen::Index>(D));
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = dist(rng);
  const double nrm = w.norm();
  if (nrm == 0.0) return w;
  return w * (radius / nrm);
}

Vector critical_omega(const LinearizationMatrix& T, std::uint64_t seed, double radius) {
  const Svd& svd = T.svd();
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector c(svd.s.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    const double sign = dist(rng) < 0.0 ? -1.0 : 1.0;
    c[j] = sign / std::sqrt(static_cast<double>(j + 1));
  }
  Vector w = svd.V * c;
  const double nrm = w.norm();
  if (nrm == 0.0) return w;
  return w * (radius / nrm);
}

double null_space_component(const LinearizationMatrix& T, const Vector& v, double tol_rel) {
  const Svd& svd = T.svd();
  Vector row = Vector::Zero(v.size());
  const double cut = svd.s.size() ? tol_rel * svd.s[0] : 0.0;
  for (Eigen::Index j = 0; j < svd.s.size(); ++j)
    if (svd.s[j] > cut) row += svd.V.col(j) * svd.V.col(j).dot(v);
  return (v - row).norm();
}

}  // namespace ipest
