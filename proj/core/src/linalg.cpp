#include "ipest/linalg.hpp"

#include <algorithm>

#include <Eigen/SVD>

namespace ipest {

Svd thin_svd(const Matrix& A) {
  Svd out;
  const Eigen::Index m = A.rows(), n = A.cols();
  if (m == 0 || n == 0) {
    out.U = Matrix::Zero(m, 0);
    out.s = Vector::Zero(0);
    out.V = Matrix::Zero(n, 0);
    return out;
  }
  if (m > 2 * n) {
    Eigen::HouseholderQR<Matrix> qr(A);
    Matrix R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Matrix> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix Q = qr.householderQ() * Matrix::Identity(m, n);
    out.U = Q * svd.matrixU();
    out.s = svd.singularValues();
    out.V = svd.matrixV();
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U = svd.matrixU();
  out.s = svd.singularValues();
  out.V = svd.matrixV();
  return out;
}

Matrix pseudoinverse(const Svd& svd, double tol_rel) {
  const Eigen::Index k = svd.s.size();
  Matrix out = Matrix::Zero(svd.V.rows(), svd.U.rows());
  if (k == 0) return out;
  const double cut = tol_rel * svd.s[0];
  for (Eigen::Index j = 0; j < k; ++j) {
    if (svd.s[j] > cut && svd.s[j] > 0.0)
      out.noalias() += svd.V.col(j) * (svd.U.col(j).transpose() / svd.s[j]);
  }
  return out;
}

Matrix pseudoinverse(const Matrix& A, double tol_rel) {
  return pseudoinverse(thin_svd(A), tol_rel);
}

ThinQr thin_qr(const Matrix& A) {
  const Eigen::Index m = A.rows(), k = A.cols();
  Eigen::HouseholderQR<Matrix> qr(A);
  ThinQr out;
  const Eigen::Index r = std::min(m, k);
  out.Q = qr.householderQ() * Matrix::Identity(m, r);
  out.R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < r; ++j) {
    if (out.R(j, j) < 0.0) {
      out.R.row(j) *= -1.0;
      out.Q.col(j) *= -1.0;
    }
  }
  return out;
}

double max_eigenvalue(const Matrix& S) {
  if (S.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double spectral_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(A);
  return svd.singularValues()[0];
}

}  // namespace ipest
