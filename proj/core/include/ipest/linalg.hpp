#pragma once

#include "ipest/design.hpp"

namespace ipest {

inline constexpr double kDefaultPinvTol = 1e-12;

/// Thin SVD A = U diag(s) V^t with s nonincreasing.
struct Svd {
  Matrix U;
  Vector s;
  Matrix V;
};

/// Thin SVD. Tall inputs go through a QR step first.
Svd thin_svd(const Matrix& A);

/// Moore-Penrose inverse with singular values below tol_rel * s_max zeroed.
Matrix pseudoinverse(const Matrix& A, double tol_rel = kDefaultPinvTol);

/// Pseudoinverse from a precomputed SVD.
Matrix pseudoinverse(const Svd& svd, double tol_rel = kDefaultPinvTol);

/// Householder QR with positive diagonal in R.
struct ThinQr {
  Matrix Q;  // m x k, orthonormal columns
  Matrix R;  // k x k, upper triangular
};
ThinQr thin_qr(const Matrix& A);

/// Largest eigenvalue of a symmetric matrix (0 for empty).
double max_eigenvalue(const Matrix& S);

/// Spectral norm.
double spectral_norm(const Matrix& A);

}  // namespace ipest
