#include "smbsde/numkit.hpp"

#include <algorithm>

#include "smbsde/errors.hpp"

namespace smbsde::numkit {

double frobenius(const Matrix& q) { return q.norm(); }

bool all_finite(const Matrix& q) { return q.allFinite(); }

Matrix pinv(const Matrix& q, double rank_tol) {
  if (q.rows() != q.cols()) {
    throw InputError("pinv: matrix must be square");
  }
  if (!q.allFinite()) {
    throw InputError("pinv: non-finite entry");
  }
  const Eigen::Index n = q.rows();
  if (n == 0) return Matrix(0, 0);

  Eigen::JacobiSVD<Matrix> svd(q, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cut = rank_tol * (s.size() > 0 ? s(0) : 0.0);

  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double PenroseResiduals::max() const {
  return std::max({reproduce, reflexive, left_symmetric, right_symmetric});
}

PenroseResiduals penrose_residuals(const Matrix& q, const Matrix& qp) {
  const Matrix qqp = q * qp;
  const Matrix qpq = qp * q;
  PenroseResiduals r;
  r.reproduce = (qqp * q - q).norm();
  r.reflexive = (qpq * qp - qp).norm();
  r.left_symmetric = (qqp.transpose() - qqp).norm();
  r.right_symmetric = (qpq.transpose() - qpq).norm();
  return r;
}

Vector symmetric_eigenvalues(const Matrix& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace smbsde::numkit
