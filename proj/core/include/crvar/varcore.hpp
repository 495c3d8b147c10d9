#pragma once

// Reduced-rank parameterization of a causal VAR(p) and the deterministic maps
// between free parameters, autocovariances and the classical VAR form.
//
// Conventions: Γ(h) = E[X_t X_{t-h}ᵀ]; C_j = Var(X_t | X_{t-1..t-j}) and
// D_j = Var(X_{t-j} | X_{t..t-j+1}). The parameters are
//   Ω = (I - E)F(I - E)ᵀ,  E = H_λ(E1),  F = diag(f),
//   C_j⁻¹ - C_{j-1}⁻¹ = L_j L_jᵀ,  V_j = K_j (K_jᵀ D_{j-1}⁻¹ K_j)^{-1/2}.
// Any finite choice of these yields a causal process.

#include <vector>

#include <Eigen/Dense>

namespace crvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ReducedRankVarParams {
  MatrixXd E1;               ///< strictly lower triangular, d×d
  VectorXd f;                ///< positive, length d
  double lambda = 0.0;       ///< hard threshold applied to E1
  std::vector<MatrixXd> L;   ///< p factors, d×r_j
  std::vector<MatrixXd> K;   ///< p factors, d×r_j

  int dim() const { return static_cast<int>(f.size()); }
  int order() const { return static_cast<int>(L.size()); }
  /// Rank of the update at 0-based lag index j (column count of L[j]).
  int rank(int j) const { return static_cast<int>(L[j].cols()); }
  int max_rank() const;

  /// Throws DomainError for a non-positive f or negative λ, and
  /// ContractViolation for shape mismatches or a non-triangular E1.
  void validate() const;

  /// E1 = 0, f = 1, λ = 0, all L and K zero (d×r).
  static ReducedRankVarParams zeros(int d, int p, int r);
};

struct DerivedState {
  std::vector<MatrixXd> C;       ///< C_0..C_p
  std::vector<MatrixXd> Cinv;    ///< C_0⁻¹ = Ω .. C_p⁻¹
  std::vector<MatrixXd> D;       ///< D_0..D_p
  std::vector<MatrixXd> Dinv;
  std::vector<MatrixXd> U;       ///< U_1..U_p (index j-1)
  std::vector<MatrixXd> V;       ///< V_1..V_p (index j-1)
  std::vector<MatrixXd> Gamma;   ///< Γ(0)..Γ(p)
  /// forward[j] = [Φ_{j,1} … Φ_{j,j}] (d × jd): best linear predictor of X_t
  /// from X_{t-1..t-j}. forward[0] is d×0.
  std::vector<MatrixXd> forward;
  /// backward[j] = [Ψ_{j,1} … Ψ_{j,j}]: predictor of X_t from X_{t+1..t+j}.
  std::vector<MatrixXd> backward;
  std::vector<double> logdet_C;  ///< log det C_0..C_p

  int order() const { return static_cast<int>(U.size()); }
  /// Full-order predictor coefficients ξ_pᵀ Υ_{p-1}⁻¹.
  const MatrixXd& Phi() const { return forward.back(); }
  /// Dense block-Toeplitz Var(X_t, …, X_{t-j}) assembled from Gamma; j ≤ p.
  MatrixXd block_toeplitz(int j) const;
};

struct VarModel {
  std::vector<MatrixXd> A;  ///< A_1..A_p
  MatrixXd Sigma;
  MatrixXd Gamma0;
  MatrixXd Omega;
};

struct ForwardResult {
  DerivedState state;
  VarModel model;
};

/// Ω = (I - E)F(I - E)ᵀ with E = H_λ(E1).
MatrixXd build_precision(const MatrixXd& E1, const VectorXd& f, double lambda);

/// Ω⁻¹ from the modified-Cholesky factors by triangular solves.
MatrixXd precision_inverse(const MatrixXd& E, const VectorXd& f);

enum class Detail {
  Full,            ///< everything, including Γ(1..p)
  PredictorsOnly,  ///< skips Γ(h ≥ 1); enough for likelihood evaluation
};

/// Above this value of ‖Γ(0)‖₁‖C_p⁻¹‖₁ forward_map verifies the companion
/// spectral radius of its output.
inline constexpr double kCausalityCheckKappa = 1e3;

/// Runs the low-rank recursion for j = 1..p. Throws SingularityError (with the
/// offending lag) for a rank-deficient K_j and ConditioningError when an
/// intermediate loses definiteness or, for a near-singular model, when
/// rounding has pushed the companion spectral radius to 1 or above.
ForwardResult forward_map(const ReducedRankVarParams& params, Detail detail = Detail::Full);

/// Companion matrix of A_1..A_p (dp × dp).
MatrixXd companion_matrix(const std::vector<MatrixXd>& A);

/// Spectral radius of the companion matrix; < 1 iff the VAR is causal.
double companion_spectral_radius(const std::vector<MatrixXd>& A);

struct RankFactors {
  MatrixXd U;
  MatrixXd V;
};

/// Factorizes a rank-r matrix as W = U Vᵀ with Vᵀ B⁻¹ V = I_r. The rotation
/// gauge is fixed so that UᵀU is diagonal with decreasing entries and the
/// first nonzero entry of every column of U is positive.
RankFactors rank_factorize(const MatrixXd& W, const MatrixXd& B, int r);

/// Top-left d×d block of the stationary covariance of the companion form,
/// i.e. the solution Γ(0) of the stationary Yule-Walker/Lyapunov system.
/// Throws NonCausalError if the spectral radius is ≥ 1.
MatrixXd solve_stationary_covariance(const std::vector<MatrixXd>& A,
                                     const MatrixXd& Sigma);

/// Autocovariances Γ(0..max_lag) of the model, extending beyond p with
/// Γ(h) = Σ_k A_k Γ(h-k).
std::vector<MatrixXd> autocovariances(const DerivedState& state,
                                      const VarModel& model, int max_lag);

}  // namespace crvar
