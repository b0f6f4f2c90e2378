#pragma once

#include <cstdint>

#include "ipest/operators.hpp"

namespace ipest {

/// x_0 - x_star = (T*T)^nu omega.
struct SourceSpec {
  double nu = 0.5;
  Vector omega;
  double radius = 1.0;  // stated bound on ||omega||
};

void validate(const SourceSpec& spec, std::size_t D);

/// x_0 = x_star + (T*T)^nu omega.
Vector make_source_solution(const LinearizationMatrix& T, const SourceSpec& spec,
                            const Vector& x_star);

/// Gaussian omega with fixed seed, scaled to norm `radius`.
Vector gaussian_omega(std::size_t D, std::uint64_t seed, double radius);

/// omega = sum_j s_j j^{-1/2} v_j with random signs s_j, scaled to norm
/// `radius`. Along the singular vectors v_j of T this is the element whose
/// coefficients decay at the slowest rate allowed by the source condition, so
/// the squared bias after truncation at level d is of order d^{-2 nu p}.
Vector critical_omega(const LinearizationMatrix& T, std::uint64_t seed, double radius);

/// Norm of the component of v in Ker(T), using the truncated SVD.
double null_space_component(const LinearizationMatrix& T, const Vector& v,
                            double tol_rel = kDefaultPinvTol);

}  // namespace ipest
