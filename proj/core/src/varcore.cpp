#include "crvar/varcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crvar/errors.hpp"
#include "crvar/linalg.hpp"
#include "crvar/priors.hpp"

namespace crvar {

namespace {

std::string lag_msg(const char* what, int lag) {
  return std::string(what) + " at lag " + std::to_string(lag);
}

void require_pd(const MatrixXd& m, const char* what, int lag) {
  if (!m.allFinite()) {
    throw ConditioningError(lag_msg(what, lag) + ": non-finite entries", lag);
  }
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError(lag_msg(what, lag) + ": lost positive definiteness", lag);
  }
}

}  // namespace

int ReducedRankVarParams::max_rank() const {
  int r = 0;
  for (const auto& l : L) r = std::max(r, static_cast<int>(l.cols()));
  return r;
}

void ReducedRankVarParams::validate() const {
  const Eigen::Index d = f.size();
  if (d < 1) throw ContractViolation("params: dimension must be >= 1");
  if (E1.rows() != d || E1.cols() != d) {
    throw ContractViolation("params: E1 must be d x d");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      if (E1(i, j) != 0.0) {
        throw ContractViolation("params: E1 must be strictly lower triangular");
      }
    }
  }
  if (!(f.array() > 0.0).all() || !f.allFinite()) {
    throw DomainError("params: f must be strictly positive and finite");
  }
  if (!(lambda >= 0.0)) throw DomainError("params: lambda must be >= 0");
  if (L.empty()) throw ContractViolation("params: VAR order must be >= 1");
  if (L.size() != K.size()) {
    throw ContractViolation("params: L and K must have the same length");
  }
  for (std::size_t j = 0; j < L.size(); ++j) {
    if (L[j].rows() != d || K[j].rows() != d || L[j].cols() != K[j].cols()) {
      throw ContractViolation("params: L_j and K_j must both be d x r_j at lag " +
                              std::to_string(j + 1));
    }
  }
}

ReducedRankVarParams ReducedRankVarParams::zeros(int d, int p, int r) {
  ReducedRankVarParams out;
  out.E1 = MatrixXd::Zero(d, d);
  out.f = VectorXd::Ones(d);
  out.lambda = 0.0;
  out.L.assign(p, MatrixXd::Zero(d, r));
  out.K.assign(p, MatrixXd::Zero(d, r));
  return out;
}

MatrixXd DerivedState::block_toeplitz(int j) const {
  const Eigen::Index d = Gamma.front().rows();
  const int n = j + 1;
  MatrixXd ups(d * n, d * n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      // Block (a,b) = Cov(X_{t-a}, X_{t-b}) = Γ(b-a) for b ≥ a.
      ups.block(a * d, b * d, d, d) =
          b >= a ? Gamma[b - a] : MatrixXd(Gamma[a - b].transpose());
    }
  }
  return ups;
}

MatrixXd build_precision(const MatrixXd& E1, const VectorXd& f, double lambda) {
  const Eigen::Index d = f.size();
  if (E1.rows() != d || E1.cols() != d) {
    throw ContractViolation("build_precision: E1 must be d x d");
  }
  if (!(f.array() > 0.0).all()) {
    throw DomainError("build_precision: f must be strictly positive");
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      if (E1(i, j) != 0.0) {
        throw ContractViolation("build_precision: E1 must be strictly lower triangular");
      }
    }
  }
  const MatrixXd unit = MatrixXd::Identity(d, d) - hard_threshold(E1, lambda);
  MatrixXd omega = unit * f.asDiagonal() * unit.transpose();
  linalg::symmetrize(omega);
  return omega;
}

MatrixXd precision_inverse(const MatrixXd& E, const VectorXd& f) {
  const Eigen::Index d = f.size();
  const MatrixXd unit = MatrixXd::Identity(d, d) - E;
  // (I - E)⁻¹ by forward substitution on the unit lower-triangular factor.
  const MatrixXd unit_inv =
      unit.triangularView<Eigen::UnitLower>().solve(MatrixXd::Identity(d, d));
  MatrixXd cov = unit_inv.transpose() * f.cwiseInverse().asDiagonal() * unit_inv;
  linalg::symmetrize(cov);
  return cov;
}

ForwardResult forward_map(const ReducedRankVarParams& params, Detail detail) {
  params.validate();
  const int d = params.dim();
  const int p = params.order();

  ForwardResult out;
  DerivedState& s = out.state;

  const MatrixXd E = hard_threshold(params.E1, params.lambda);
  const MatrixXd omega = build_precision(params.E1, params.f, params.lambda);
  const MatrixXd c0 = precision_inverse(E, params.f);

  s.C.reserve(p + 1);
  s.Cinv.reserve(p + 1);
  s.C.push_back(c0);
  s.Cinv.push_back(omega);
  s.D.push_back(c0);
  s.Dinv.push_back(omega);
  s.Gamma.push_back(c0);
  s.forward.push_back(MatrixXd(d, 0));
  s.backward.push_back(MatrixXd(d, 0));
  s.logdet_C.push_back(-params.f.array().log().sum());

  for (int j = 1; j <= p; ++j) {
    const MatrixXd& L = params.L[j - 1];
    const MatrixXd& K = params.K[j - 1];
    const Eigen::Index r = L.cols();
    const MatrixXd& c_prev = s.C[j - 1];
    const MatrixXd& cinv_prev = s.Cinv[j - 1];
    const MatrixXd& d_prev = s.D[j - 1];
    const MatrixXd& dinv_prev = s.Dinv[j - 1];

    // U_j = C_{j-1} L_j (I + L_jᵀ C_{j-1} L_j)^{-1/2}
    const MatrixXd cl = c_prev * L;
    MatrixXd lcl = L.transpose() * cl;
    linalg::symmetrize(lcl);
    const MatrixXd g = MatrixXd::Identity(r, r) + lcl;
    MatrixXd g_isqrt;
    MatrixXd g_inv;
    double logdet_g = 0.0;
    if (r > 0) {
      try {
        g_isqrt = linalg::sym_inv_sqrt(g);
      } catch (const SingularityError&) {
        throw ConditioningError(lag_msg("forward_map: I + LᵀCL not positive definite", j), j);
      }
      g_inv = g_isqrt * g_isqrt;
      logdet_g = linalg::logdet_spd(g);
    } else {
      g_isqrt = MatrixXd(0, 0);
      g_inv = MatrixXd(0, 0);
    }
    const MatrixXd U = cl * g_isqrt;
    const MatrixXd cinv_u = L * g_isqrt;  // C_{j-1}⁻¹ U_j

    // V_j = K_j (K_jᵀ D_{j-1}⁻¹ K_j)^{-1/2}
    const MatrixXd dinv_k = dinv_prev * K;
    MatrixXd kdk = K.transpose() * dinv_k;
    linalg::symmetrize(kdk);
    MatrixXd h_isqrt(0, 0);
    if (r > 0) {
      try {
        h_isqrt = linalg::sym_inv_sqrt(kdk, 1e-12);
      } catch (const SingularityError&) {
        throw SingularityError(lag_msg("forward_map: K_j is rank deficient", j), j);
      }
    }
    const MatrixXd V = K * h_isqrt;
    const MatrixXd dinv_v = dinv_k * h_isqrt;  // D_{j-1}⁻¹ V_j

    const MatrixXd& fwd_prev = s.forward[j - 1];
    const MatrixXd& bwd_prev = s.backward[j - 1];
    if (detail == Detail::Full) {
      // Γ(j) = W_j + Σ_{k<j} Φ_{j-1,k} Γ(j-k), where W_j = U_j V_jᵀ is the
      // partial cross-covariance of X_t and X_{t-j}.
      MatrixXd gamma_j = U * V.transpose();
      for (int k = 1; k < j; ++k) {
        gamma_j.noalias() += fwd_prev.middleCols((k - 1) * d, d) * s.Gamma[j - k];
      }
      s.Gamma.push_back(std::move(gamma_j));
    }

    // Whittle recursion for the forward/backward predictor blocks, with
    // Φ_{j,j} = W D_{j-1}⁻¹ = U (D_{j-1}⁻¹V)ᵀ and Ψ_{j,j} = Wᵀ C_{j-1}⁻¹ =
    // V (C_{j-1}⁻¹U)ᵀ kept in factored form so each update is O(r d²).
    MatrixXd fwd(d, j * d);
    MatrixXd bwd(d, j * d);
    if (j > 1) {
      // Φ_{j,k} = Φ_{j-1,k} - Φ_{j,j} Ψ_{j-1,j-k}; the Ψ blocks are read in
      // reverse order, so work on the whole row block at once.
      MatrixXd bwd_rev(d, (j - 1) * d);
      MatrixXd fwd_rev(d, (j - 1) * d);
      for (int k = 1; k < j; ++k) {
        bwd_rev.middleCols((k - 1) * d, d) = bwd_prev.middleCols((j - k - 1) * d, d);
        fwd_rev.middleCols((k - 1) * d, d) = fwd_prev.middleCols((j - k - 1) * d, d);
      }
      fwd.leftCols((j - 1) * d) = fwd_prev;
      fwd.leftCols((j - 1) * d).noalias() -= U * (dinv_v.transpose() * bwd_rev);
      bwd.leftCols((j - 1) * d) = bwd_prev;
      bwd.leftCols((j - 1) * d).noalias() -= V * (cinv_u.transpose() * fwd_rev);
    }
    fwd.rightCols(d).noalias() = U * dinv_v.transpose();
    bwd.rightCols(d).noalias() = V * cinv_u.transpose();

    MatrixXd c_j = c_prev - U * U.transpose();
    MatrixXd cinv_j = cinv_prev + L * L.transpose();
    // D_j = D_{j-1} - V_j (I - (I + LᵀCL)⁻¹) V_jᵀ
    MatrixXd d_j = d_prev - V * (MatrixXd::Identity(r, r) - g_inv) * V.transpose();
    // D_j⁻¹ = D_{j-1}⁻¹ + (D_{j-1}⁻¹V_j)(L_jᵀ C_{j-1} L_j)(D_{j-1}⁻¹V_j)ᵀ
    MatrixXd dinv_j = dinv_prev + dinv_v * lcl * dinv_v.transpose();
    linalg::symmetrize(c_j);
    linalg::symmetrize(cinv_j);
    linalg::symmetrize(d_j);
    linalg::symmetrize(dinv_j);
    require_pd(c_j, "forward_map: conditional covariance C_j", j);
    require_pd(d_j, "forward_map: backward covariance D_j", j);

    s.logdet_C.push_back(s.logdet_C.back() - logdet_g);
    s.C.push_back(std::move(c_j));
    s.Cinv.push_back(std::move(cinv_j));
    s.D.push_back(std::move(d_j));
    s.Dinv.push_back(std::move(dinv_j));
    s.U.push_back(U);
    s.V.push_back(V);
    s.forward.push_back(std::move(fwd));
    s.backward.push_back(std::move(bwd));
  }

  VarModel& m = out.model;
  m.A.reserve(p);
  for (int k = 1; k <= p; ++k) m.A.push_back(s.forward[p].middleCols((k - 1) * d, d));
  m.Sigma = s.C[p];
  m.Gamma0 = s.C[0];
  m.Omega = omega;

  // Near-singular models: confirm the computed coefficients are still causal.
  if (p > 0) {
    const double kappa = s.C[0].cwiseAbs().colwise().sum().maxCoeff() *
                         s.Cinv[p].cwiseAbs().colwise().sum().maxCoeff();
    if (!(kappa <= kCausalityCheckKappa)) {
      const double rho = companion_spectral_radius(m.A);
      if (!(rho < 1.0)) {
        throw ConditioningError("forward_map: rounding left companion spectral radius " +
                                    std::to_string(rho) + " (condition estimate " +
                                    std::to_string(kappa) + ")",
                                p);
      }
    }
  }
  return out;
}

MatrixXd companion_matrix(const std::vector<MatrixXd>& A) {
  if (A.empty()) throw ContractViolation("companion_matrix: empty coefficient list");
  const Eigen::Index d = A.front().rows();
  const Eigen::Index p = static_cast<Eigen::Index>(A.size());
  for (const auto& a : A) {
    if (a.rows() != d || a.cols() != d) {
      throw ContractViolation("companion_matrix: coefficients must be equal-size square matrices");
    }
  }
  MatrixXd comp = MatrixXd::Zero(d * p, d * p);
  for (Eigen::Index k = 0; k < p; ++k) comp.block(0, k * d, d, d) = A[k];
  if (p > 1) comp.bottomLeftCorner(d * (p - 1), d * (p - 1)).setIdentity();
  return comp;
}

double companion_spectral_radius(const std::vector<MatrixXd>& A) {
  const MatrixXd comp = companion_matrix(A);
  Eigen::EigenSolver<MatrixXd> es(comp, false);
  if (es.info() != Eigen::Success) {
    throw ConditioningError("companion_spectral_radius: eigenvalue solver failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

RankFactors rank_factorize(const MatrixXd& W, const MatrixXd& B, int r) {
  if (W.rows() != B.rows() || B.rows() != B.cols() || W.cols() != B.cols()) {
    throw ContractViolation("rank_factorize: W and B must be d x d");
  }
  if (r < 1) throw ContractViolation("rank_factorize: r must be >= 1");
  Eigen::JacobiSVD<MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  int numerical_rank = 0;
  if (top > 0.0) {
    const double tol = std::max(W.rows(), W.cols()) * 1e-12 * top;
    for (Eigen::Index i = 0; i < sv.size(); ++i) numerical_rank += sv(i) > tol ? 1 : 0;
  }
  if (numerical_rank != r) {
    throw RankError("rank_factorize: W has rank " + std::to_string(numerical_rank) +
                    ", expected " + std::to_string(r));
  }
  const MatrixXd row_basis = svd.matrixV().leftCols(r);
  const MatrixXd b_inv = linalg::spd_inverse(B);
  MatrixXd gram = row_basis.transpose() * b_inv * row_basis;
  linalg::symmetrize(gram);
  MatrixXd V = row_basis * linalg::sym_inv_sqrt(gram);
  MatrixXd U = W * b_inv * V;

  // Rotate so that the columns of U are orthogonal, sorted by norm.
  Eigen::JacobiSVD<MatrixXd> usvd(U, Eigen::ComputeThinV);
  const MatrixXd rot = usvd.matrixV();
  U = U * rot;
  V = V * rot;
  for (int c = 0; c < r; ++c) {
    const double scale = U.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      if (std::abs(U(i, c)) > 1e-12 * scale) {
        if (U(i, c) < 0.0) {
          U.col(c) *= -1.0;
          V.col(c) *= -1.0;
        }
        break;
      }
    }
  }
  return {std::move(U), std::move(V)};
}

MatrixXd solve_stationary_covariance(const std::vector<MatrixXd>& A,
                                     const MatrixXd& Sigma) {
  const MatrixXd comp = companion_matrix(A);
  const Eigen::Index d = A.front().rows();
  if (Sigma.rows() != d || Sigma.cols() != d) {
    throw ContractViolation("solve_stationary_covariance: Sigma must be d x d");
  }
  const double rho = companion_spectral_radius(A);
  if (!(rho < 1.0)) {
    throw NonCausalError("solve_stationary_covariance: spectral radius " +
                         std::to_string(rho) + " >= 1");
  }
  // Doubling iteration for X = F X Fᵀ + Q: X_{k+1} = X_k + F_k X_k F_kᵀ,
  // F_{k+1} = F_k², which sums 2^k terms of the series after k steps.
  const Eigen::Index n = comp.rows();
  MatrixXd x = MatrixXd::Zero(n, n);
  x.topLeftCorner(d, d) = Sigma;
  MatrixXd f = comp;
  for (int it = 0; it < 200; ++it) {
    const MatrixXd incr = f * x * f.transpose();
    x += incr;
    f = (f * f).eval();
    if (incr.norm() <= 1e-16 * x.norm() || f.norm() < 1e-300) break;
  }
  MatrixXd gamma0 = x.topLeftCorner(d, d);
  linalg::symmetrize(gamma0);
  return gamma0;
}

std::vector<MatrixXd> autocovariances(const DerivedState& state,
                                      const VarModel& model, int max_lag) {
  std::vector<MatrixXd> out;
  const int p = state.order();
  out.reserve(max_lag + 1);
  for (int h = 0; h <= std::min(p, max_lag); ++h) out.push_back(state.Gamma[h]);
  for (int h = p + 1; h <= max_lag; ++h) {
    MatrixXd g = MatrixXd::Zero(state.Gamma[0].rows(), state.Gamma[0].cols());
    for (int k = 1; k <= p; ++k) g.noalias() += model.A[k - 1] * out[h - k];
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace crvar
