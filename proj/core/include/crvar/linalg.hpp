#pragma once

// Small dense linear-algebra helpers shared by the recursions.

#include <Eigen/Dense>

namespace crvar::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// (M + Mᵀ)/2 in place.
void symmetrize(MatrixXd& m);

/// Symmetric PSD square root via eigendecomposition; negative eigenvalues
/// (round-off) are clamped to zero.
MatrixXd sym_sqrt(const MatrixXd& m);

/// Symmetric inverse square root of an SPD matrix. Throws SingularityError if
/// the smallest eigenvalue is not positive relative to the largest.
MatrixXd sym_inv_sqrt(const MatrixXd& m, double rel_tol = 1e-12);

double op_norm(const MatrixXd& m);

double min_eigenvalue(const MatrixXd& sym);

/// Smallest eigenvalue > -tol * ||M||_op.
bool is_psd(const MatrixXd& sym, double tol = 1e-10);

/// log det of an SPD matrix via Cholesky; returns NaN if not PD.
double logdet_spd(const MatrixXd& m);

/// Inverse of an SPD matrix via Cholesky. Throws SingularityError when the
/// factorization fails.
MatrixXd spd_inverse(const MatrixXd& m);

/// Unpivoted LDLᵀ with unit lower-triangular L: m = L·diag(d)·Lᵀ.
/// Throws ConditioningError if a pivot is not positive.
struct UnitLdl {
  MatrixXd unit_lower;
  VectorXd diag;
};
UnitLdl unit_ldl(const MatrixXd& m);

/// Relative Frobenius distance ||a-b||_F / ||b||_F (absolute if b == 0).
double rel_frobenius(const MatrixXd& a, const MatrixXd& b);

}  // namespace crvar::linalg
