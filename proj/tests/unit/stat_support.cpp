#include "stat_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace crvar::testing {

double ks_pvalue(double d_stat, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  // Stephens' small-sample correction to the Kolmogorov series.
  const double lam = (sn + 0.12 + 0.11 / sn) * d_stat;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lam * lam);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double ks_statistic(std::vector<double> draws, const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double batch_means_se(const std::vector<double>& series, int batches) {
  const std::size_t per = series.size() / batches;
  std::vector<double> means(batches);
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += series[b * per + i];
    means[b] = s / per;
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= (batches - 1);
  return std::sqrt(var / batches);
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal(), p);
}

void draw_params_given_hypers(Rng& rng, ReducedRankVarParams& params, const HyperState& hyper) {
  const int d = params.dim();
  const double sd_e = std::sqrt(hyper.sigma2_e);
  for (int i = 1; i < d; ++i) {
    for (int j = 0; j < i; ++j) params.E1(i, j) = sd_e * rng.normal();
  }
  for (int i = 0; i < d; ++i) params.f(i) = rng.inverse_gaussian(hyper.xi, hyper.xi * hyper.xi);
  for (int k = 0; k < params.order(); ++k) {
    for (Eigen::Index m = 0; m < params.L[k].cols(); ++m) {
      for (Eigen::Index i = 0; i < params.L[k].rows(); ++i) {
        const double prec = l_precision(hyper, k, static_cast<int>(i), static_cast<int>(m));
        params.L[k](i, m) = rng.normal() / std::sqrt(prec);
      }
    }
  }
}

void draw_prior_hierarchy(Rng& rng, ReducedRankVarParams& params, HyperState& hyper) {
  const auto& c = hyper.constants;
  hyper.sigma2_e = rng.inverse_gamma(c.c1, c.c1);
  hyper.xi = std::abs(c.xi_prior_sd * rng.normal());
  for (auto& ph : hyper.phi) {
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph.data()[i] = rng.gamma(c.nu1, c.nu1);
  }
  for (Eigen::Index h = 0; h < hyper.delta.size(); ++h) {
    hyper.delta(h) = rng.gamma(h == 0 ? c.kappa1 : c.kappa2, 1.0);
  }
  for (auto& dk : hyper.delta_k) {
    for (Eigen::Index h = 0; h < dk.size(); ++h) {
      dk(h) = hyper.use_psi ? rng.gamma(h == 0 ? c.kappa1 : c.kappa2, 1.0) : 1.0;
    }
  }
  hyper.refresh_products();
  draw_params_given_hypers(rng, params, hyper);
}

namespace {

std::vector<double> test_functions(const ReducedRankVarParams& params, const HyperState& h) {
  const double l00 = params.L[0](0, 0);
  const double l11 = params.L[1](1, 1);
  const double e = params.E1(1, 0);
  return {std::log(h.sigma2_e),
          std::log(h.xi),
          std::log(h.delta(0)),
          std::log(h.delta(1)),
          std::log(h.delta_k[0](1)),
          std::log(h.phi[1](0, 1)),
          l00 * l00 / (1.0 + l00 * l00),
          l11 * l11 / (1.0 + l11 * l11),
          e * e / (1.0 + e * e),
          std::log(params.f(0))};
}

}  // namespace

GewekeResult geweke_prior_hierarchy(std::uint64_t seed, int n_marginal, int n_successive,
                                    double alpha) {
  Rng rng(seed);
  auto params = ReducedRankVarParams::zeros(2, 2, 2);
  params.lambda = 0.5;
  HyperState hyper = HyperState::initial(params, PriorConstants{});

  std::vector<std::vector<double>> marg;
  for (int n = 0; n < n_marginal; ++n) {
    draw_prior_hierarchy(rng, params, hyper);
    marg.push_back(test_functions(params, hyper));
  }

  draw_prior_hierarchy(rng, params, hyper);
  std::vector<std::vector<double>> succ;
  for (int n = 0; n < n_successive; ++n) {
    draw_params_given_hypers(rng, params, hyper);
    hyper = gibbs_update_hypers(params, hyper, rng);
    succ.push_back(test_functions(params, hyper));
  }

  const std::size_t nf = marg.front().size();
  GewekeResult res;
  res.threshold = normal_quantile(1.0 - alpha / (2.0 * nf));
  for (std::size_t g = 0; g < nf; ++g) {
    std::vector<double> a, b;
    for (const auto& v : marg) a.push_back(v[g]);
    for (const auto& v : succ) b.push_back(v[g]);
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    double va = 0.0;
    for (double x : a) va += (x - ma) * (x - ma);
    va /= (a.size() - 1);
    const double se = std::sqrt(va / a.size() + std::pow(batch_means_se(b), 2));
    res.z.push_back((ma - mb) / se);
    res.max_abs_z = std::max(res.max_abs_z, std::abs(res.z.back()));
  }
  res.passed = res.max_abs_z < res.threshold;
  return res;
}

}  // namespace crvar::testing
