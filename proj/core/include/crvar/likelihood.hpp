#pragma once

// Exact zero-mean Gaussian log-likelihood of a sample under a reduced-rank
// causal VAR, computed as f(X_1) Π_t f(X_t | X_{t-1}, …, X_{max(1,t-p)}).

#include <Eigen/Dense>

#include "crvar/varcore.hpp"

namespace crvar {

struct Sample {
  MatrixXd X;  ///< T × d, row t is X_{t+1}

  int T() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
  /// Throws ContractViolation for an empty or non-finite sample.
  void validate() const;
};

/// Conditional law of X_t given its predecessors, as used by the likelihood.
struct StepLaw {
  int order;                    ///< number of lags conditioned on, min(t-1, p)
  const MatrixXd* coefficients; ///< d × order·d predictor block
  const MatrixXd* precision;    ///< C_order⁻¹
  double logdet_cov;            ///< log det C_order
};

/// Law used for the 1-based time index t.
StepLaw step_law(const DerivedState& state, int t);

/// Log-likelihood from an already computed recursion state.
double loglik_from_state(const DerivedState& state, const Sample& sample);

/// General recursive low-rank evaluation; only r×r matrices are inverted.
double loglik_recursive(const ReducedRankVarParams& params, const Sample& sample);

/// Rank-one fast path: scalar divisions and outer-product updates only.
/// Requires every L_j, K_j to be a single column.
double loglik_rank_one(const ReducedRankVarParams& params, const Sample& sample);

/// Dense reference: assembles the Td × Td block-Toeplitz covariance and
/// factorizes it. Intended for tests; requires T·d ≤ 2000.
double loglik_dense_oracle(const ReducedRankVarParams& params, const Sample& sample);

}  // namespace crvar
