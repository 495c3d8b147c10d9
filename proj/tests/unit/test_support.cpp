#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace crvar::testing {

ReducedRankVarParams random_params(Rng& rng, int d, int p, int r, double sd, double e_sd) {
  if (e_sd < 0.0) e_sd = sd;
  auto params = ReducedRankVarParams::zeros(d, p, r);
  for (int i = 1; i < d; ++i) {
    for (int j = 0; j < i; ++j) params.E1(i, j) = e_sd * rng.normal();
  }
  for (int i = 0; i < d; ++i) params.f(i) = std::exp(0.5 * rng.normal());
  for (int j = 0; j < p; ++j) {
    for (int c = 0; c < r; ++c) {
      for (int i = 0; i < d; ++i) {
        params.L[j](i, c) = sd * rng.normal();
        params.K[j](i, c) = sd * rng.normal();
      }
    }
  }
  return params;
}

Sample random_sample(Rng& rng, const ReducedRankVarParams& params, int T) {
  const auto fr = forward_map(params);
  const int d = params.dim();
  const int p = params.order();
  Sample s{MatrixXd::Zero(T, d)};
  // Sequential conditional draws using the same growing-order laws as the
  // likelihood, so short samples are exactly stationary.
  for (int t = 0; t < T; ++t) {
    const int m = std::min(t, p);
    VectorXd mean = VectorXd::Zero(d);
    for (int k = 1; k <= m; ++k) {
      mean += fr.state.forward[m].middleCols((k - 1) * d, d) * s.X.row(t - k).transpose();
    }
    Eigen::LLT<MatrixXd> llt(fr.state.C[m]);
    VectorXd z = rng.normal_vector(d);
    s.X.row(t) = (mean + llt.matrixL() * z).transpose();
  }
  return s;
}

MatrixXd dense_toeplitz(const std::vector<MatrixXd>& gamma, int j) {
  const auto d = gamma.front().rows();
  MatrixXd ups(d * (j + 1), d * (j + 1));
  for (int a = 0; a <= j; ++a) {
    for (int b = 0; b <= j; ++b) {
      ups.block(a * d, b * d, d, d) =
          b >= a ? gamma[b - a] : MatrixXd(gamma[a - b].transpose());
    }
  }
  return ups;
}

MatrixXd dense_forward_schur(const std::vector<MatrixXd>& gamma, int j) {
  const auto d = gamma.front().rows();
  if (j == 0) return gamma[0];
  MatrixXd xi(j * d, d);  // Cov((X_{t-1},…,X_{t-j}), X_t)
  for (int k = 1; k <= j; ++k) xi.block((k - 1) * d, 0, d, d) = gamma[k].transpose();
  const MatrixXd ups = dense_toeplitz(gamma, j - 1);
  return gamma[0] - xi.transpose() * ups.llt().solve(xi);
}

MatrixXd dense_backward_schur(const std::vector<MatrixXd>& gamma, int j) {
  const auto d = gamma.front().rows();
  if (j == 0) return gamma[0];
  MatrixXd kappa(j * d, d);  // Cov((X_t,…,X_{t-j+1}), X_{t-j})
  for (int k = 0; k < j; ++k) kappa.block(k * d, 0, d, d) = gamma[j - k];
  const MatrixXd ups = dense_toeplitz(gamma, j - 1);
  return gamma[0] - kappa.transpose() * ups.llt().solve(kappa);
}

double loglik_dense_per_step(const ReducedRankVarParams& params, const Sample& sample) {
  const auto fr = forward_map(params);
  const auto& gamma = fr.state.Gamma;
  const int d = params.dim();
  const int p = params.order();
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (int t = 0; t < sample.T(); ++t) {
    const int k = std::min(t, p);
    VectorXd resid = sample.X.row(t).transpose();
    MatrixXd cov = gamma[0];
    if (k > 0) {
      MatrixXd xi(k * d, d);
      VectorXd past(k * d);
      for (int h = 1; h <= k; ++h) {
        xi.block((h - 1) * d, 0, d, d) = gamma[h].transpose();
        past.segment((h - 1) * d, d) = sample.X.row(t - h).transpose();
      }
      const Eigen::LLT<MatrixXd> ups(dense_toeplitz(gamma, k - 1));
      const MatrixXd coef = ups.solve(xi).transpose();
      resid -= coef * past;
      cov -= coef * xi;
    }
    const Eigen::LLT<MatrixXd> c(cov);
    const VectorXd z = c.matrixL().solve(resid);
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(c.matrixL()(i, i));
    total += -0.5 * (d * log2pi + logdet + z.squaredNorm());
  }
  return total;
}

}  // namespace crvar::testing
