#pragma once

#include <cstddef>
#include <cstdint>

#include "ipest/operators.hpp"

namespace ipest {

struct AfDiagnostic {
  double c_T_estimate = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;
};

/// Tangential-cone surrogate for ||I - R|| <= c_T: the maximum over sampled
/// pairs x, x' in B_rho(x_star) of ||F(x) - F(x') - T(x - x')|| / ||T(x - x')||.
/// Points are uniform in the ball (gaussian direction, radius rho U^{1/D}).
/// For an unbounded trust radius the unit ball is sampled.
AfDiagnostic diagnose_af_report(const ForwardOperator& op, std::size_t n_pairs,
                                std::uint64_t seed);

double diagnose_af(const ForwardOperator& op, std::size_t n_pairs, std::uint64_t seed);

/// Uniform point in the ball of radius r around `center`.
template <class Urbg>
Vector sample_in_ball(const Vector& center, double r, Urbg& rng);

}  // namespace ipest

#include "ipest/detail/sample_ball.hpp"
