#include "crvar/glasso.hpp"

#include <cmath>

#include "crvar/errors.hpp"
#include "crvar/linalg.hpp"

namespace crvar {

namespace {

double soft(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

}  // namespace

GlassoResult graphical_lasso(const Eigen::MatrixXd& S, double rho, int max_sweeps, double tol) {
  if (S.rows() != S.cols()) throw ContractViolation("graphical_lasso: S must be square");
  if (!(rho >= 0.0)) throw ContractViolation("graphical_lasso: rho must be >= 0");
  const Eigen::Index d = S.rows();
  GlassoResult out;
  Eigen::MatrixXd W = S;
  W.diagonal().array() += rho;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);  // column j holds β for node j

  double scale = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i != j) scale += std::abs(S(i, j));
    }
  }
  scale = d > 1 ? scale / (d * (d - 1)) : 0.0;
  if (scale == 0.0) scale = S.diagonal().cwiseAbs().mean();

  for (int sweep = 1; sweep <= max_sweeps && d > 1; ++sweep) {
    const Eigen::MatrixXd w_old = W;
    for (Eigen::Index j = 0; j < d; ++j) {
      // lasso: min ½βᵀW₁₁β − s₁₂ᵀβ + ρ‖β‖₁ over the other coordinates
      Eigen::VectorXd beta = B.col(j);
      for (int inner = 0; inner < 200; ++inner) {
        double delta = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
          if (k == j) continue;
          double r = S(k, j);
          for (Eigen::Index l = 0; l < d; ++l) {
            if (l != j && l != k) r -= W(k, l) * beta(l);
          }
          const double nb = soft(r, rho) / W(k, k);
          delta = std::max(delta, std::abs(nb - beta(k)));
          beta(k) = nb;
        }
        if (delta < tol * 1e-2 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
      }
      beta(j) = 0.0;
      B.col(j) = beta;
      for (Eigen::Index k = 0; k < d; ++k) {
        if (k == j) continue;
        double w = 0.0;
        for (Eigen::Index l = 0; l < d; ++l) {
          if (l != j) w += W(k, l) * beta(l);
        }
        W(k, j) = w;
        W(j, k) = w;
      }
    }
    out.sweeps = sweep;
    const double change = (W - w_old).cwiseAbs().mean();
    if (change < tol * scale) {
      out.converged = true;
      break;
    }
  }
  if (d == 1) out.converged = true;

  Eigen::MatrixXd theta(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double quad = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (k != j) quad += W(k, j) * B(k, j);
    }
    const double tjj = 1.0 / (W(j, j) - quad);
    theta(j, j) = tjj;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (k != j) theta(k, j) = -B(k, j) * tjj;
    }
  }
  linalg::symmetrize(theta);
  out.precision = theta;
  out.covariance = W;
  return out;
}

Eigen::MatrixXd ridge_precision(const Eigen::MatrixXd& S, double ridge) {
  if (S.rows() != S.cols()) throw ContractViolation("ridge_precision: S must be square");
  Eigen::MatrixXd m = S;
  m.diagonal().array() += ridge;
  return linalg::spd_inverse(m);
}

}  // namespace crvar
