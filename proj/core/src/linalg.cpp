#include "crvar/linalg.hpp"

#include <cmath>
#include <limits>

#include "crvar/errors.hpp"

namespace crvar::linalg {

void symmetrize(MatrixXd& m) {
  m = 0.5 * (m + m.transpose()).eval();
}

MatrixXd sym_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd sym_inv_sqrt(const MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const VectorXd& ev = es.eigenvalues();
  const double hi = std::max(std::abs(ev.maxCoeff()), 1e-300);
  if (!(ev.minCoeff() > rel_tol * hi)) {
    throw SingularityError("sym_inv_sqrt: matrix is not positive definite");
  }
  VectorXd s = ev.cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

double op_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols() && m.isApprox(m.transpose(), 1e-12)) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double min_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_psd(const MatrixXd& sym, double tol) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const VectorXd& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() > -tol * scale;
}

double logdet_spd(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

MatrixXd spd_inverse(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("spd_inverse: Cholesky factorization failed");
  }
  MatrixXd inv = llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  symmetrize(inv);
  return inv;
}

UnitLdl unit_ldl(const MatrixXd& m) {
  const Eigen::Index n = m.rows();
  UnitLdl out{MatrixXd::Identity(n, n), VectorXd::Zero(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    double dj = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) {
      dj -= out.unit_lower(j, k) * out.unit_lower(j, k) * out.diag(k);
    }
    if (!(dj > 0.0)) {
      throw ConditioningError("unit_ldl: non-positive pivot");
    }
    out.diag(j) = dj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) {
        v -= out.unit_lower(i, k) * out.unit_lower(j, k) * out.diag(k);
      }
      out.unit_lower(i, j) = v / dj;
    }
  }
  return out;
}

double rel_frobenius(const MatrixXd& a, const MatrixXd& b) {
  const double nb = b.norm();
  const double diff = (a - b).norm();
  return nb > 0.0 ? diff / nb : diff;
}

}  // namespace crvar::linalg
