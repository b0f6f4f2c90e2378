#include "ipest/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "ipest/errors.hpp"
#include "ipest/noise.hpp"

namespace ipest {

AfDiagnostic diagnose_af_report(const ForwardOperator& op, std::size_t n_pairs,
                                std::uint64_t seed) {
  if (n_pairs == 0) throw DomainError("diagnose_af needs at least one pair");
  // F = T exactly, so R = I and nothing needs sampling.
  if (op.is_linear()) return {0.0, n_pairs, 0};
  const double rho = std::isfinite(op.rho()) ? op.rho() : 1.0;
  Rng rng(seed);
  AfDiagnostic out;
  for (std::size_t k = 0; k < n_pairs; ++k) {
    const Vector x = sample_in_ball(op.x_star(), rho, rng);
    const Vector xp = sample_in_ball(op.x_star(), rho, rng);
    const Vector lin = op.T() * (x - xp);
    const double denom = lin.norm();
    const double scale = std::max(op.T().norm() * (x - xp).norm(), 1e-300);
    if (!(denom > 1e-14 * scale)) {
      ++out.pairs_skipped;
      continue;
    }
    const Vector diff = op.evaluate(x) - op.evaluate(xp) - lin;
    out.c_T_estimate = std::max(out.c_T_estimate, diff.norm() / denom);
    ++out.pairs_used;
  }
  if (out.pairs_used == 0) throw DiagnosticError("diagnose_af: every sampled pair was degenerate");
  return out;
}

double diagnose_af(const ForwardOperator& op, std::size_t n_pairs, std::uint64_t seed) {
  return diagnose_af_report(op, n_pairs, seed).c_T_estimate;
}

}  // namespace ipest
