#pragma once

// Synthetic ground truth, data simulation, baselines and evaluation metrics
// for the simulation study.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crvar/likelihood.hpp"
#include "crvar/random.hpp"
#include "crvar/varcore.hpp"

namespace crvar {

struct PrecisionSpec {
  int d = 30;
  double sparsity_target = 0.15;  ///< fraction of nonzero off-diagonal pairs
  int nei = 5;                    ///< small-world neighbourhood on each side
  int blocks = 3;
  double rewire = 0.05;
  double q = 0.05;                ///< starting cross-block probability (tuned)
  double gwishart_scale = 6.0;    ///< b: Wishart degrees of freedom b + d - 1
  double entry_floor = 1.0;
  int projection_iters = 100;
  double band = 0.05;             ///< accepted |achieved - target|
  int max_bisection = 50;

  void validate() const;
};

struct SparsePrecision {
  MatrixXd omega;
  Eigen::MatrixXi adjacency;  ///< symmetric 0/1, zero diagonal; support of omega
  double achieved = 0.0;      ///< nonzero off-diagonal fraction
  double q = 0.0;
  int nei = 0;
};

/// Block small-world graph plus cross-block edges, a Wishart draw projected
/// onto the graph support and the SPD cone, then the entry floor.
SparsePrecision gen_sparse_precision(const PrecisionSpec& spec, Rng& rng);

/// Nonzero off-diagonal fraction of a symmetric matrix.
double offdiag_density(const MatrixXd& m);

/// Draws X_1 from the stationary law and X_t | past from the model's
/// conditional laws (exact for t ≤ p, the VAR recursion afterwards).
Sample simulate_var(const ReducedRankVarParams& params, int T, Rng& rng);

/// Unconstrained parameters with the given precision: modified Cholesky of
/// omega gives (E1, f) with λ = 0.
ReducedRankVarParams params_from_precision(const MatrixXd& omega, int p, int r);

struct Var1Fit {
  MatrixXd A1;
  MatrixXd Sigma;
  MatrixXd Omega;
  bool causal = true;
  std::vector<std::string> warnings;
};

/// Ridge least-squares VAR(1); Ω from the Lyapunov solution when causal,
/// otherwise the inverse second-moment matrix with a warning.
Var1Fit fit_var1_baseline(const Sample& sample, double ridge);

/// Inverse of XᵀX/T.
MatrixXd naive_precision(const Sample& sample);

/// Mean squared entrywise error over all d² entries.
double mse_precision(const MatrixXd& est, const MatrixXd& truth);

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> threshold;  ///< score at which each point is reached
  double auc = 0.0;
};

/// ROC of off-diagonal scores (upper triangle) against the true adjacency,
/// one point per distinct score, from (0,0) to (1,1); AUC by trapezoid.
RocCurve roc_points(const MatrixXd& scores, const Eigen::MatrixXi& truth);

}  // namespace crvar
