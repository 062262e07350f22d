#pragma once

#include <Eigen/Dense>

namespace smbsde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

namespace numkit {

inline constexpr double kDefaultRankTol = 1e-12;

/// Frobenius norm sqrt(Tr(Q'Q)).
double frobenius(const Matrix& q);

/// Moore-Penrose pseudoinverse of a square matrix via SVD. Singular values
/// below rank_tol * sigma_max are treated as zero. Throws InputError on
/// non-square or non-finite input.
Matrix pinv(const Matrix& q, double rank_tol = kDefaultRankTol);

/// Frobenius residuals of the four Penrose identities for a candidate
/// pseudoinverse `qp` of `q`.
struct PenroseResiduals {
  double reproduce = 0.0;      // |Q Q+ Q - Q|
  double reflexive = 0.0;      // |Q+ Q Q+ - Q+|
  double left_symmetric = 0.0; // |(Q Q+)' - Q Q+|
  double right_symmetric = 0.0;// |(Q+ Q)' - Q+ Q|

  double max() const;
};

PenroseResiduals penrose_residuals(const Matrix& q, const Matrix& qp);

/// True when every entry is finite.
bool all_finite(const Matrix& q);

/// Eigenvalues of a symmetric matrix, ascending.
Vector symmetric_eigenvalues(const Matrix& q);

}  // namespace numkit
}  // namespace smbsde
