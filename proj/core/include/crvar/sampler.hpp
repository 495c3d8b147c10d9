#pragma once

// Adaptive Metropolis-within-Gibbs sampler for the reduced-rank causal VAR.
//
// One sweep updates, in order: (a) the strictly lower entries of E1 jointly,
// (b) log f, (c) log λ, (d) each column of each L_j, (e) each K_j, (f) the
// shrinkage hyperparameters by Gibbs. Every MH block has its own
// AdaptiveProposal.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crvar/likelihood.hpp"
#include "crvar/priors.hpp"
#include "crvar/proposal.hpp"
#include "crvar/random.hpp"
#include "crvar/varcore.hpp"

namespace crvar {

enum class WarmStart { Glasso, Ridge };

struct McmcConfig {
  int n_iter = 10000;
  int n_burn = 5000;
  int n_keep = 5000;
  int adapt_start = 3500;
  int adapt_every = 100;
  double accept_lo = 0.25;
  double accept_hi = 0.50;
  int prune_iter = 1000;
  double prune_threshold = 0.1;
  int p_max = 10;
  int r_init = 3;
  int s_min = 200;
  int s_max = 2000;
  int s_div = 10;
  double rm_c = 1.0;
  double rw_base = 1.0;          ///< multiplier on the pre-adaptation random-walk sd
  bool freeze_adapt_at_burn = false;
  bool use_likelihood = true;    ///< false samples the prior only
  bool store_coefficients = true;
  WarmStart warm_start = WarmStart::Glasso;
  double glasso_rho_factor = 0.1;  ///< ρ = factor · mean(diag S)
  double ridge_factor = 0.1;       ///< fallback ridge = factor · mean(diag S)
  double lambda_max_factor = 1.5;  ///< λ_max = factor · max|E1 init|
  double lambda_init_fraction = 0.1;
  int lambda_hold = 1000;          ///< λ is held at its initial value up to min(this, n_burn)
  PriorConstants prior;            ///< lambda_max is overwritten at init
  std::uint64_t seed = 1;

  /// Throws ContractViolation for inconsistent settings.
  void validate() const;
  ProposalSettings proposal_settings() const;
};

struct BlockAcceptance {
  std::string name;
  std::vector<double> windows;  ///< acceptance fraction per adapt_every iterations
  double recent = 0.0;          ///< over the last 2000 iterations the block existed
  long accepted = 0;
  long proposed = 0;
};

struct ChainOutput {
  std::vector<MatrixXd> omega_draws;
  std::vector<std::vector<MatrixXd>> A_draws;
  std::vector<MatrixXd> sigma_draws;
  std::vector<double> lambda_draws;
  std::vector<BlockAcceptance> acceptance;
  std::vector<double> log_post_trace;  ///< one value per iteration
  int initial_order = 0;
  int final_order = 0;
  std::vector<int> final_ranks;
  double lambda_max = 0.0;
  long conditioning_failures = 0;
  std::vector<std::string> warnings;
  ReducedRankVarParams final_params;

  int dim() const { return omega_draws.empty() ? 0 : static_cast<int>(omega_draws[0].rows()); }
  MatrixXd posterior_mean_omega() const;
};

/// Sample covariance XᵀX / T (the model is zero-mean).
MatrixXd second_moment(const Sample& sample);

/// Initial parameters: warm-start precision → modified Cholesky for (E1, f),
/// p = min(p_max, T/2), L_j and K_j entries from N(0, 1/j).
ReducedRankVarParams initial_params(const Sample& sample, const McmcConfig& config, Rng& rng);

struct PruneResult {
  ReducedRankVarParams params;
  HyperState hyper;
  std::vector<std::vector<int>> kept_columns;  ///< per surviving lag, original column ids
  std::vector<int> source_lags;                ///< per surviving lag, original lag (0-based)
  bool minimal_fallback = false;
};

/// Drops L_j / K_j columns with sum of squares below the threshold, removes
/// trailing lags left with no columns and remaps the hyperparameters. If
/// nothing survives, keeps the single largest column at lag 1.
PruneResult prune_ranks(const ReducedRankVarParams& params, const HyperState& hyper,
                        double threshold);

/// One Metropolis step with a symmetric proposal. Returns true on accept and
/// updates x and log_target in place. A non-finite target rejects.
bool metropolis_step(AdaptiveProposal& proposal, Eigen::VectorXd& x, double& log_target,
                     const std::function<double(const Eigen::VectorXd&)>& target, Rng& rng,
                     int iter);

/// Log density of u = log x when x has log density `log_density`
/// (adds the Jacobian Σu).
double log_scale_target(const Eigen::VectorXd& u,
                        const std::function<double(const Eigen::VectorXd&)>& log_density);

/// Log-likelihood used inside the chain; picks the rank-one path when every
/// lag has rank one and returns -inf on a conditioning failure.
double chain_loglik(const ReducedRankVarParams& params, const Sample& sample);

ChainOutput run_mcmc(const Sample& sample, const McmcConfig& config,
                     const std::optional<ReducedRankVarParams>& init = std::nullopt);

}  // namespace crvar
