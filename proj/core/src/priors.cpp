#include "crvar/priors.hpp"

#include <cmath>
#include <numbers>

#include "crvar/errors.hpp"

namespace crvar {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double kappa_for(const PriorConstants& c, int h) { return h == 1 ? c.kappa1 : c.kappa2; }

double log_xi_conditional(double xi, const VectorXd& f, double prior_sd) {
  if (!(xi > 0.0)) return kLogZero;
  double s = f.size() * std::log(xi) - xi * xi / (2.0 * prior_sd * prior_sd);
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double dev = f(i) - xi;
    s -= dev * dev / (2.0 * f(i));
  }
  return s;
}

}  // namespace

MatrixXd hard_threshold(const MatrixXd& m, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("hard_threshold: lambda must be >= 0");
  return (m.array().abs() > lambda).select(m, 0.0);
}

void HyperState::refresh_products() {
  tau.resize(delta.size());
  double acc = 1.0;
  for (Eigen::Index h = 0; h < delta.size(); ++h) {
    acc *= delta(h);
    tau(h) = acc;
  }
  psi.resize(delta_k.size());
  for (std::size_t k = 0; k < delta_k.size(); ++k) {
    psi[k].resize(delta_k[k].size());
    double a = 1.0;
    for (Eigen::Index h = 0; h < delta_k[k].size(); ++h) {
      if (use_psi) a *= delta_k[k](h);
      psi[k](h) = a;
    }
  }
}

HyperState HyperState::initial(const ReducedRankVarParams& params,
                               const PriorConstants& constants) {
  HyperState h;
  h.constants = constants;
  h.sigma2_e = 1.0;
  h.xi = std::max(params.f.mean(), 1e-3);
  const int p = params.order();
  const int d = params.dim();
  h.use_psi = params.max_rank() > 1;
  h.delta = VectorXd::Ones(p);
  for (int k = 0; k < p; ++k) {
    h.phi.push_back(MatrixXd::Ones(d, params.rank(k)));
    h.delta_k.push_back(VectorXd::Ones(params.rank(k)));
  }
  h.refresh_products();
  return h;
}

bool HyperState::valid(double tol) const {
  if (!(sigma2_e > 0.0) || !(xi > 0.0)) return false;
  if (!(delta.array() > 0.0).all()) return false;
  double acc = 1.0;
  for (Eigen::Index h = 0; h < delta.size(); ++h) {
    acc *= delta(h);
    if (std::abs(tau(h) - acc) > tol * std::abs(acc)) return false;
  }
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (!(phi[k].array() > 0.0).all()) return false;
    if (!(delta_k[k].array() > 0.0).all()) return false;
    double a = 1.0;
    for (Eigen::Index h = 0; h < delta_k[k].size(); ++h) {
      if (use_psi) a *= delta_k[k](h);
      if (std::abs(psi[k](h) - a) > tol * std::abs(a)) return false;
    }
  }
  return true;
}

double log_f_prior(double t, double xi) {
  if (!(t > 0.0) || !(xi > 0.0)) return kLogZero;
  const double dev = t - xi;
  return std::log(xi) - 0.5 * kLog2Pi - 1.5 * std::log(t) - dev * dev / (2.0 * t);
}

double l_precision(const HyperState& hyper, int k, int i, int m) {
  return hyper.phi[k](i, m) * hyper.tau(k) * hyper.psi[k](m);
}

double log_prior(const ReducedRankVarParams& params, const HyperState& hyper) {
  const int d = params.dim();
  const auto& c = hyper.constants;
  if (!(params.lambda > 0.0) || params.lambda > c.lambda_max) return kLogZero;
  double lp = -std::log(c.lambda_max);

  const double s2 = hyper.sigma2_e;
  for (int i = 1; i < d; ++i) {
    for (int j = 0; j < i; ++j) {
      const double e = params.E1(i, j);
      lp += -0.5 * (kLog2Pi + std::log(s2)) - e * e / (2.0 * s2);
    }
  }
  for (int i = 0; i < d; ++i) {
    const double t = log_f_prior(params.f(i), hyper.xi);
    if (t == kLogZero) return kLogZero;
    lp += t;
  }
  for (int k = 0; k < params.order(); ++k) {
    const MatrixXd& L = params.L[k];
    for (Eigen::Index m = 0; m < L.cols(); ++m) {
      for (Eigen::Index i = 0; i < L.rows(); ++i) {
        const double prec = l_precision(hyper, k, static_cast<int>(i), static_cast<int>(m));
        lp += 0.5 * (std::log(prec) - kLog2Pi) - 0.5 * prec * L(i, m) * L(i, m);
      }
    }
  }
  // K_j ~ N(0, I/j): the likelihood only sees the direction of K_j, whose
  // induced law is uniform exactly as under a flat prior.
  for (int k = 0; k < params.order(); ++k) {
    const double prec = k + 1.0;
    const double n = static_cast<double>(params.K[k].size());
    lp += 0.5 * n * (std::log(prec) - kLog2Pi) - 0.5 * prec * params.K[k].squaredNorm();
  }
  // ξ: half-normal (normal truncated to ξ > 0).
  const double sd = c.xi_prior_sd;
  lp += std::log(2.0) - 0.5 * (kLog2Pi + 2.0 * std::log(sd)) - hyper.xi * hyper.xi / (2.0 * sd * sd);
  return lp;
}

GammaParams phi_conditional(const ReducedRankVarParams& params, const HyperState& hyper,
                            int k, int i, int m) {
  const double nu = hyper.constants.nu1;
  const double l = params.L[k](i, m);
  return {nu + 0.5, nu + 0.5 * l * l * hyper.tau(k) * hyper.psi[k](m)};
}

GammaParams delta_conditional(const ReducedRankVarParams& params, const HyperState& hyper, int h) {
  const int p = params.order();
  double shape = kappa_for(hyper.constants, h);
  double rate = 1.0;
  for (int k = h - 1; k < p; ++k) {
    const MatrixXd& L = params.L[k];
    shape += 0.5 * static_cast<double>(L.size());
    const double tau_wo = hyper.tau(k) / hyper.delta(h - 1);
    double ss = 0.0;
    for (Eigen::Index m = 0; m < L.cols(); ++m) {
      ss += hyper.psi[k](m) * (hyper.phi[k].col(m).array() * L.col(m).array().square()).sum();
    }
    rate += 0.5 * tau_wo * ss;
  }
  return {shape, rate};
}

GammaParams delta_k_conditional(const ReducedRankVarParams& params, const HyperState& hyper,
                                int k, int h) {
  const MatrixXd& L = params.L[k];
  double shape = kappa_for(hyper.constants, h);
  double rate = 1.0;
  for (Eigen::Index m = h - 1; m < L.cols(); ++m) {
    shape += 0.5 * static_cast<double>(L.rows());
    const double psi_wo = hyper.psi[k](m) / hyper.delta_k[k](h - 1);
    rate += 0.5 * psi_wo * hyper.tau(k) *
            (hyper.phi[k].col(m).array() * L.col(m).array().square()).sum();
  }
  return {shape, rate};
}

GammaParams sigma2_conditional(const ReducedRankVarParams& params, const HyperState& hyper) {
  const int d = params.dim();
  double ss = 0.0;
  for (int i = 1; i < d; ++i) {
    for (int j = 0; j < i; ++j) ss += params.E1(i, j) * params.E1(i, j);
  }
  const double n_e = 0.5 * d * (d - 1);
  return {hyper.constants.c1 + 0.5 * n_e, hyper.constants.c1 + 0.5 * ss};
}

HyperState gibbs_update_hypers(const ReducedRankVarParams& params, const HyperState& hyper,
                               Rng& rng) {
  HyperState next = hyper;
  const int p = params.order();

  for (int k = 0; k < p; ++k) {
    for (Eigen::Index m = 0; m < params.L[k].cols(); ++m) {
      for (Eigen::Index i = 0; i < params.L[k].rows(); ++i) {
        const auto g = phi_conditional(params, next, k, static_cast<int>(i), static_cast<int>(m));
        next.phi[k](i, m) = rng.gamma(g.shape, g.rate);
      }
    }
  }
  for (int h = 1; h <= p; ++h) {
    const auto g = delta_conditional(params, next, h);
    next.delta(h - 1) = rng.gamma(g.shape, g.rate);
    next.refresh_products();
  }
  if (next.use_psi) {
    for (int k = 0; k < p; ++k) {
      for (Eigen::Index h = 1; h <= next.delta_k[k].size(); ++h) {
        const auto g = delta_k_conditional(params, next, k, static_cast<int>(h));
        next.delta_k[k](h - 1) = rng.gamma(g.shape, g.rate);
        next.refresh_products();
      }
    }
  }
  const auto s = sigma2_conditional(params, next);
  next.sigma2_e = rng.inverse_gamma(s.shape, s.rate);

  // ξ | f: random-walk Metropolis on log ξ (Jacobian term log ξ).
  const double sd = next.constants.xi_prior_sd;
  double cur = next.xi;
  double cur_lp = log_xi_conditional(cur, params.f, sd) + std::log(cur);
  for (int it = 0; it < next.constants.xi_steps; ++it) {
    const double prop = cur * std::exp(next.constants.xi_step * rng.normal());
    const double prop_lp = log_xi_conditional(prop, params.f, sd) + std::log(prop);
    if (std::log(rng.uniform()) < prop_lp - cur_lp) {
      cur = prop;
      cur_lp = prop_lp;
    }
  }
  next.xi = cur;
  return next;
}

}  // namespace crvar
