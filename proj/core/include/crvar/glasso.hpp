#pragma once

// Graphical lasso by block coordinate descent, used for the warm start.

#include <Eigen/Dense>

namespace crvar {

struct GlassoResult {
  Eigen::MatrixXd precision;
  Eigen::MatrixXd covariance;
  int sweeps = 0;
  bool converged = false;
};

/// Maximizes log det Θ − tr(SΘ) − ρ Σ_{i≠j}|Θ_ij| (diagonal unpenalized
/// apart from the W_ii = S_ii + ρ start). Throws ContractViolation on a
/// non-square S or ρ < 0.
GlassoResult graphical_lasso(const Eigen::MatrixXd& S, double rho, int max_sweeps = 100,
                             double tol = 1e-4);

/// (S + ridge·I)⁻¹.
Eigen::MatrixXd ridge_precision(const Eigen::MatrixXd& S, double ridge);

}  // namespace crvar
