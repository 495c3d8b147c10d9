#include <cmath>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include "crvar/errors.hpp"
#include "crvar/priors.hpp"
#include "stat_support.hpp"
#include "test_support.hpp"

using namespace crvar;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

}  // namespace

TEST(HardThreshold, Examples) {
  MatrixXd m(2, 2);
  m << 0.3, -0.05, 0.0, -0.7;
  MatrixXd want(2, 2);
  want << 0.3, 0.0, 0.0, -0.7;
  EXPECT_EQ(hard_threshold(m, 0.1), want);
  EXPECT_EQ(hard_threshold(m, 0.0), m);
  EXPECT_TRUE(hard_threshold(m, 0.7).isZero());
  // ties go to zero
  MatrixXd t(1, 1);
  t << 0.5;
  EXPECT_EQ(hard_threshold(t, 0.5)(0, 0), 0.0);
  EXPECT_THROW(hard_threshold(m, -0.1), DomainError);

  MatrixXd m2(2, 2), want2(2, 2);
  m2 << 0.2, -0.05, 0.3, 0.1;
  want2 << 0.2, 0.0, 0.3, 0.0;
  EXPECT_EQ(hard_threshold(m2, 0.1), want2);
}

TEST(HardThreshold, IdempotentAndSparsityMonotone) {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    MatrixXd m(5, 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    const double a = rng.uniform();
    const double b = a + rng.uniform();
    const MatrixXd ha = hard_threshold(m, a);
    EXPECT_EQ(hard_threshold(ha, a), ha);
    const auto nnz = [](const MatrixXd& x) { return (x.array() != 0.0).count(); };
    EXPECT_GE(nnz(ha), nnz(hard_threshold(m, b)));
  }
}

TEST(FPrior, IntegratesToOne) {
  boost::math::quadrature::exp_sinh<double> integrator;
  for (double xi : {0.3, 1.0, 2.5, 8.0}) {
    const auto dens = [xi](double t) { return std::exp(log_f_prior(t, xi)); };
    const double total = integrator.integrate(dens);
    EXPECT_NEAR(total, 1.0, 1e-8) << "xi=" << xi;
    const auto mean = [xi](double t) { return t * std::exp(log_f_prior(t, xi)); };
    EXPECT_NEAR(integrator.integrate(mean), xi, 1e-7) << "xi=" << xi;
  }
  EXPECT_EQ(log_f_prior(0.0, 1.0), kLogZero);
  EXPECT_EQ(log_f_prior(-1.0, 1.0), kLogZero);
}

TEST(LogPrior, LambdaSupport) {
  auto params = ReducedRankVarParams::zeros(3, 2, 1);
  auto hyper = HyperState::initial(params, PriorConstants{});
  params.lambda = 0.5;
  EXPECT_TRUE(std::isfinite(log_prior(params, hyper)));
  params.lambda = 0.0;
  EXPECT_EQ(log_prior(params, hyper), kLogZero);
  params.lambda = 1.0;
  EXPECT_TRUE(std::isfinite(log_prior(params, hyper)));
  params.lambda = 1.0 + 1e-12;
  EXPECT_EQ(log_prior(params, hyper), kLogZero);
}

TEST(LogPrior, ZeroLoadingsKernel) {
  // E1 = 0, f = 1, L = 0, all multipliers one: every term has a closed form.
  const int d = 3, p = 2;
  auto params = ReducedRankVarParams::zeros(d, p, 2);
  params.lambda = 0.25;
  PriorConstants c;
  c.lambda_max = 0.5;
  auto hyper = HyperState::initial(params, c);
  hyper.xi = 1.0;
  const double n_e = d * (d - 1) / 2.0;
  const double n_l = p * d * 2.0;
  // K = 0 leaves the normalizers: six entries at precision 1, six at 2
  const double k_part = 3.0 * (0.0 - kLog2Pi) + 3.0 * (std::log(2.0) - kLog2Pi);
  const double want = -std::log(0.5) - 0.5 * kLog2Pi * n_e + d * (-0.5 * kLog2Pi) -
                      0.5 * kLog2Pi * n_l + k_part + std::log(2.0) - 0.5 * kLog2Pi -
                      std::log(10.0) - 1.0 / 200.0;
  EXPECT_NEAR(log_prior(params, hyper), want, 1e-12);
}

TEST(LogPrior, DecreasesInLoadingMagnitude) {
  Rng rng(5);
  auto params = crvar::testing::random_params(rng, 3, 2, 2);
  params.lambda = 0.2;
  PriorConstants c;
  auto hyper = HyperState::initial(params, c);
  double prev = std::numeric_limits<double>::infinity();
  for (double v : {0.0, 0.1, 0.5, 1.0, 3.0}) {
    params.L[1](2, 1) = v;
    const double lp = log_prior(params, hyper);
    params.L[1](2, 1) = -v;
    EXPECT_DOUBLE_EQ(lp, log_prior(params, hyper));
    EXPECT_LT(lp, prev);
    prev = lp;
  }
}

TEST(Conditionals, ZeroLoadingsReduceToPrior) {
  auto params = ReducedRankVarParams::zeros(2, 2, 2);
  params.lambda = 0.1;
  auto hyper = HyperState::initial(params, PriorConstants{});
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      for (int m = 0; m < 2; ++m) {
        const auto g = phi_conditional(params, hyper, k, i, m);
        EXPECT_DOUBLE_EQ(g.shape, 3.5);
        EXPECT_DOUBLE_EQ(g.rate, 3.0);
      }
    }
  }
  const auto d1 = delta_conditional(params, hyper, 1);
  EXPECT_DOUBLE_EQ(d1.shape, 2.1 + 0.5 * 8);
  EXPECT_DOUBLE_EQ(d1.rate, 1.0);
  const auto d2 = delta_conditional(params, hyper, 2);
  EXPECT_DOUBLE_EQ(d2.shape, 3.1 + 0.5 * 4);
}

TEST(Conditionals, ScalarToy) {
  // d = p = r = 1, L = 2, every multiplier one.
  auto params = ReducedRankVarParams::zeros(1, 1, 1);
  params.L[0](0, 0) = 2.0;
  auto hyper = HyperState::initial(params, PriorConstants{});
  EXPECT_FALSE(hyper.use_psi);
  const auto g = delta_conditional(params, hyper, 1);
  EXPECT_DOUBLE_EQ(g.shape, 2.1 + 0.5);
  EXPECT_DOUBLE_EQ(g.rate, 1.0 + 0.5 * 4.0);
  const auto ph = phi_conditional(params, hyper, 0, 0, 0);
  EXPECT_DOUBLE_EQ(ph.rate, 3.0 + 2.0);
}

TEST(Conditionals, DeltaKAndSigma) {
  auto params = ReducedRankVarParams::zeros(3, 1, 2);
  params.L[0] << 1, 0, 0, 2, 0, 0;
  params.E1(1, 0) = 1.0;
  params.E1(2, 1) = 2.0;
  auto hyper = HyperState::initial(params, PriorConstants{});
  hyper.delta_k[0] << 1.0, 2.0;
  hyper.refresh_products();
  const auto g1 = delta_k_conditional(params, hyper, 0, 1);
  // columns 1 and 2 contribute with ψ/δ^{(1)}_1 = 1 and 2
  EXPECT_DOUBLE_EQ(g1.shape, 2.1 + 3.0);
  EXPECT_DOUBLE_EQ(g1.rate, 1.0 + 0.5 * (1.0 + 2.0 * 4.0));
  const auto g2 = delta_k_conditional(params, hyper, 0, 2);
  EXPECT_DOUBLE_EQ(g2.shape, 3.1 + 1.5);
  EXPECT_DOUBLE_EQ(g2.rate, 1.0 + 0.5 * 4.0);
  const auto s = sigma2_conditional(params, hyper);
  EXPECT_DOUBLE_EQ(s.shape, 1.0 + 1.5);
  EXPECT_DOUBLE_EQ(s.rate, 1.0 + 2.5);
}

TEST(Gibbs, PositivityAndProducts) {
  Rng rng(3);
  auto params = crvar::testing::random_params(rng, 4, 3, 2);
  params.lambda = 0.3;
  auto hyper = HyperState::initial(params, PriorConstants{});
  for (int it = 0; it < 2000; ++it) {
    hyper = gibbs_update_hypers(params, hyper, rng);
    ASSERT_TRUE(hyper.valid(1e-12)) << "iteration " << it;
  }
}

TEST(Gibbs, PhiDrawMatchesConditional) {
  auto params = ReducedRankVarParams::zeros(1, 1, 1);
  params.L[0](0, 0) = 0.7;
  auto hyper = HyperState::initial(params, PriorConstants{});
  hyper.delta(0) = 1.5;
  hyper.refresh_products();
  const auto g = phi_conditional(params, hyper, 0, 0, 0);
  Rng rng(17);
  std::vector<double> draws;
  for (int n = 0; n < 20000; ++n) draws.push_back(gibbs_update_hypers(params, hyper, rng).phi[0](0, 0));
  const boost::math::gamma_distribution<double> law(g.shape, 1.0 / g.rate);
  const double ks = crvar::testing::ks_statistic(draws, [&](double x) { return boost::math::cdf(law, x); });
  EXPECT_GT(crvar::testing::ks_pvalue(ks, draws.size()), 0.001);
}

TEST(Shrinkage, InverseTauDecreasesWithLag) {
  // E[1/τ_k] = E[1/δ_1] Π E[1/δ_h] = 1/(κ1-1) · (1/(κ2-1))^{k-1}
  Rng rng(23);
  const PriorConstants c;
  const int p = 4, n = 200000;
  std::vector<double> sum(p, 0.0), sum2(p, 0.0);
  for (int it = 0; it < n; ++it) {
    double tau = 1.0;
    for (int h = 0; h < p; ++h) {
      tau *= rng.gamma(h == 0 ? c.kappa1 : c.kappa2, 1.0);
      sum[h] += 1.0 / tau;
      sum2[h] += 1.0 / (tau * tau);
    }
  }
  for (int h = 0; h < p; ++h) {
    const double want = (1.0 / (c.kappa1 - 1.0)) * std::pow(1.0 / (c.kappa2 - 1.0), h);
    EXPECT_NEAR(sum[h] / n, want, 0.05 * want);
    if (h > 0) EXPECT_LT(sum[h] / n, sum[h - 1] / n);
  }
}

TEST(Gibbs, GewekeJointDistribution) {
  const auto res = crvar::testing::geweke_prior_hierarchy(20240101, 50000, 200000);
  for (std::size_t g = 0; g < res.z.size(); ++g) {
    EXPECT_LT(std::abs(res.z[g]), res.threshold) << "test function " << g;
  }
}
