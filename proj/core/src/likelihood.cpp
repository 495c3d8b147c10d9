#include "crvar/likelihood.hpp"

#include <cmath>
#include <string>

#include "crvar/errors.hpp"
#include "crvar/linalg.hpp"
#include "crvar/priors.hpp"

namespace crvar {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_dims(const ReducedRankVarParams& params, const Sample& sample) {
  sample.validate();
  if (sample.dim() != params.dim()) {
    throw ContractViolation("likelihood: sample dimension " + std::to_string(sample.dim()) +
                            " does not match model dimension " + std::to_string(params.dim()));
  }
}

// Shared time loop over a list of predictor blocks and precisions.
double accumulate(const std::vector<MatrixXd>& forward, const std::vector<MatrixXd>& cinv,
                  const std::vector<double>& logdet_c, const Sample& sample) {
  const int d = sample.dim();
  const int p = static_cast<int>(forward.size()) - 1;
  const MatrixXd& X = sample.X;
  double ll = -0.5 * sample.T() * d * kLog2Pi;
  VectorXd resid(d);
  for (int t = 0; t < sample.T(); ++t) {
    const int m = std::min(t, p);
    resid = X.row(t).transpose();
    const MatrixXd& coef = forward[m];
    for (int k = 1; k <= m; ++k) {
      resid.noalias() -= coef.middleCols((k - 1) * d, d) * X.row(t - k).transpose();
    }
    const double quad = resid.dot(cinv[m] * resid);
    ll += -0.5 * logdet_c[m] - 0.5 * quad;
    if (!std::isfinite(ll)) {
      throw ConditioningError("likelihood: non-finite contribution at time " +
                                  std::to_string(t + 1),
                              m);
    }
  }
  return ll;
}

}  // namespace

void Sample::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw ContractViolation("sample: empty");
  if (!X.allFinite()) throw ContractViolation("sample: non-finite entries");
}

StepLaw step_law(const DerivedState& state, int t) {
  const int m = std::min(t - 1, state.order());
  return {m, &state.forward[m], &state.Cinv[m], state.logdet_C[m]};
}

double loglik_from_state(const DerivedState& state, const Sample& sample) {
  return accumulate(state.forward, state.Cinv, state.logdet_C, sample);
}

double loglik_recursive(const ReducedRankVarParams& params, const Sample& sample) {
  check_dims(params, sample);
  const ForwardResult fr = forward_map(params, Detail::PredictorsOnly);
  return loglik_from_state(fr.state, sample);
}

double loglik_rank_one(const ReducedRankVarParams& params, const Sample& sample) {
  params.validate();
  check_dims(params, sample);
  for (int j = 0; j < params.order(); ++j) {
    if (params.rank(j) != 1) {
      throw ContractViolation("loglik_rank_one: every lag must have rank 1");
    }
  }
  const int d = params.dim();
  const int p = params.order();

  const MatrixXd E = hard_threshold(params.E1, params.lambda);
  MatrixXd cinv = build_precision(params.E1, params.f, params.lambda);
  MatrixXd c = precision_inverse(E, params.f);
  MatrixXd dmat = c;
  MatrixXd dinv = cinv;
  double logdet_c = -params.f.array().log().sum();

  std::vector<MatrixXd> forward{MatrixXd(d, 0)};
  std::vector<MatrixXd> backward{MatrixXd(d, 0)};
  std::vector<MatrixXd> cinv_list{cinv};
  std::vector<double> logdet_list{logdet_c};

  for (int j = 1; j <= p; ++j) {
    const VectorXd L = params.L[j - 1].col(0);
    const VectorXd K = params.K[j - 1].col(0);
    const VectorXd cl = c * L;
    const double l = L.dot(cl);
    const VectorXd dk = dinv * K;
    const double k = K.dot(dk);
    if (!(k > 0.0)) throw SingularityError("loglik_rank_one: K_j is zero", j);
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw ConditioningError("loglik_rank_one: negative l_j", j);
    }
    const double su = 1.0 / std::sqrt(1.0 + l);
    const double sv = 1.0 / std::sqrt(k);
    const VectorXd U = su * cl;
    const VectorXd cinv_u = su * L;
    const VectorXd V = sv * K;
    const VectorXd dinv_v = sv * dk;

    const MatrixXd& fwd_prev = forward.back();
    const MatrixXd& bwd_prev = backward.back();
    MatrixXd fwd(d, j * d);
    MatrixXd bwd(d, j * d);
    for (int kk = 1; kk < j; ++kk) {
      const auto b_blk = bwd_prev.middleCols((j - kk - 1) * d, d);
      const auto f_blk = fwd_prev.middleCols((j - kk - 1) * d, d);
      fwd.middleCols((kk - 1) * d, d) = fwd_prev.middleCols((kk - 1) * d, d);
      fwd.middleCols((kk - 1) * d, d).noalias() -= U * (dinv_v.transpose() * b_blk);
      bwd.middleCols((kk - 1) * d, d) = bwd_prev.middleCols((kk - 1) * d, d);
      bwd.middleCols((kk - 1) * d, d).noalias() -= V * (cinv_u.transpose() * f_blk);
    }
    fwd.rightCols(d).noalias() = U * dinv_v.transpose();
    bwd.rightCols(d).noalias() = V * cinv_u.transpose();

    c.noalias() -= U * U.transpose();
    cinv.noalias() += L * L.transpose();
    dmat.noalias() -= (l / (1.0 + l)) * (V * V.transpose());
    dinv.noalias() += l * (dinv_v * dinv_v.transpose());
    logdet_c -= std::log1p(l);

    forward.push_back(std::move(fwd));
    backward.push_back(std::move(bwd));
    cinv_list.push_back(cinv);
    logdet_list.push_back(logdet_c);
  }
  return accumulate(forward, cinv_list, logdet_list, sample);
}

double loglik_dense_oracle(const ReducedRankVarParams& params, const Sample& sample) {
  check_dims(params, sample);
  const int d = sample.dim();
  const int T = sample.T();
  if (static_cast<long>(T) * d > 2000) {
    throw ContractViolation("loglik_dense_oracle: T*d exceeds 2000");
  }
  const ForwardResult fr = forward_map(params);
  const auto gamma = autocovariances(fr.state, fr.model, T - 1);
  MatrixXd ups(T * d, T * d);
  for (int s = 0; s < T; ++s) {
    for (int t = 0; t < T; ++t) {
      ups.block(s * d, t * d, d, d) =
          s >= t ? gamma[s - t] : MatrixXd(gamma[t - s].transpose());
    }
  }
  VectorXd y(T * d);
  for (int t = 0; t < T; ++t) y.segment(t * d, d) = sample.X.row(t).transpose();
  Eigen::LLT<MatrixXd> llt(ups);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("loglik_dense_oracle: block-Toeplitz covariance not PD");
  }
  const MatrixXd lmat = llt.matrixL();
  const double logdet = 2.0 * lmat.diagonal().array().log().sum();
  const VectorXd z = llt.matrixL().solve(y);
  return -0.5 * T * d * kLog2Pi - 0.5 * logdet - 0.5 * z.squaredNorm();
}

}  // namespace crvar
