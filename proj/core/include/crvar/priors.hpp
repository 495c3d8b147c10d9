#pragma once

// Priors for the reduced-rank VAR parameters and conjugate updates of the
// shrinkage hyperparameters.
//
// Λ stacks vec(L_1), …, vec(L_p) as columns. Entry (i,m) of L_k has prior
// precision φ_k(i,m) · τ_k · ψ_{k,m} with
//   τ_k = Π_{h≤k} δ_h,   ψ_{k,m} = Π_{h≤m} δ^{(k)}_h,
//   δ_1, δ^{(k)}_1 ~ Ga(κ1, 1),  δ_h, δ^{(k)}_h ~ Ga(κ2, 1) for h ≥ 2,
//   φ ~ Ga(ν1, ν1).
// The ψ layer is switched off (ψ ≡ 1) for rank-one models.

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "crvar/random.hpp"
#include "crvar/varcore.hpp"

namespace crvar {

/// Entrywise h · 1{|h| > λ}.
MatrixXd hard_threshold(const MatrixXd& m, double lambda);

struct PriorConstants {
  double c1 = 1.0;          ///< σ²_e ~ Inv-Ga(c1, c1)
  double nu1 = 3.0;         ///< φ ~ Ga(ν1, ν1)
  double kappa1 = 2.1;
  double kappa2 = 3.1;
  double lambda_max = 1.0;  ///< λ ~ Uniform(0, λ_max]
  double xi_prior_sd = 10.0;
  double xi_step = 0.3;     ///< random-walk sd for log ξ
  int xi_steps = 5;         ///< MH steps for ξ per Gibbs sweep
};

struct HyperState {
  double sigma2_e = 1.0;
  double xi = 1.0;
  std::vector<MatrixXd> phi;      ///< per lag k: d × r_k local precisions
  VectorXd delta;                 ///< length p
  std::vector<VectorXd> delta_k;  ///< per lag k: length r_k
  VectorXd tau;                   ///< cumulative products of delta
  std::vector<VectorXd> psi;      ///< per lag k: cumulative products of delta_k
  bool use_psi = true;
  PriorConstants constants;

  /// Recomputes tau and psi from delta and delta_k.
  void refresh_products();
  /// All multipliers at one, shaped after params.
  static HyperState initial(const ReducedRankVarParams& params, const PriorConstants& constants);
  /// Positivity and consistency of the cumulative products.
  bool valid(double tol = 1e-12) const;
};

struct GammaParams {
  double shape;
  double rate;
};

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// log of the inverse-Gaussian prior on one entry of f:
/// ξ/√(2π) · t^{-3/2} exp(-(t-ξ)²/(2t)). Returns kLogZero for t ≤ 0.
double log_f_prior(double t, double xi);

/// Sum of the log prior densities of E1, f, λ, the L_j and K_j entries and ξ.
/// K_j ~ N(0, I/j); only its direction enters the likelihood.
/// Returns kLogZero outside the support.
double log_prior(const ReducedRankVarParams& params, const HyperState& hyper);

/// Prior precision of entry (i, m) of L_k.
double l_precision(const HyperState& hyper, int k, int i, int m);

GammaParams phi_conditional(const ReducedRankVarParams& params, const HyperState& hyper,
                            int k, int i, int m);
/// Full conditional of δ_h (1-based h).
GammaParams delta_conditional(const ReducedRankVarParams& params, const HyperState& hyper, int h);
/// Full conditional of δ^{(k)}_h (0-based k, 1-based h).
GammaParams delta_k_conditional(const ReducedRankVarParams& params, const HyperState& hyper,
                                int k, int h);
/// Inverse-gamma (shape, scale) full conditional of σ²_e.
GammaParams sigma2_conditional(const ReducedRankVarParams& params, const HyperState& hyper);

/// One sweep of Gibbs updates: φ, δ, δ^{(k)}, σ²_e from their gamma /
/// inverse-gamma conditionals and a short Metropolis run for ξ.
HyperState gibbs_update_hypers(const ReducedRankVarParams& params, const HyperState& hyper,
                               Rng& rng);

}  // namespace crvar
