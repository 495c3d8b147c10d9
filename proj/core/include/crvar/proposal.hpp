#pragma once

// Adaptive random-walk proposals: spherical before adaptation starts, then a
// scaled empirical covariance of the last S accepted states with a
// Robbins-Monro controller on the log scale.

#include <deque>

#include <Eigen/Dense>

#include "crvar/random.hpp"

namespace crvar {

struct ProposalSettings {
  int adapt_start = 3500;
  int adapt_every = 100;
  double target_accept = 0.375;
  double rm_c = 1.0;         ///< Robbins-Monro gain c / n^exponent
  double rm_exponent = 0.6;
  int s_min = 200;           ///< S(iter) = min(s_max, s_min + iter / s_div)
  int s_max = 2000;
  int s_div = 10;
  double ridge = 1e-8;
  int freeze_at = -1;        ///< no adaptation at or after this iteration (-1: never)
};

/// Window size S for a given iteration.
int window_size(int iter, const ProposalSettings& s);

struct ProposalKernel {
  Eigen::MatrixXd cov;
  double scale = 1.0;
  bool adaptive = false;
};

/// Proposal covariance at `iter` from the accepted-state history. Before
/// adapt_start, or with fewer than two accepted states in the window, the
/// spherical random walk rw_sd²·I with unit scale; otherwise the empirical
/// covariance of the last S states plus ridge·I with scale `scale`.
ProposalKernel adapt_proposal(const std::deque<Eigen::VectorXd>& history, int iter, int dim,
                              double rw_sd, double scale, const ProposalSettings& s);

class AdaptiveProposal {
 public:
  AdaptiveProposal() = default;
  AdaptiveProposal(int dim, double rw_sd, const ProposalSettings& settings);

  Eigen::VectorXd propose(const Eigen::VectorXd& x, Rng& rng) const;
  /// Records the outcome of one MH step taken at `iter` (1-based).
  void record(bool accepted, const Eigen::VectorXd& state, int iter);
  /// Refreshes the kernel; a no-op unless iter is an adaptation point.
  void end_iteration(int iter);

  int dim() const { return dim_; }
  double scale() const { return kernel_.scale; }
  const ProposalKernel& kernel() const { return kernel_; }
  const std::deque<Eigen::VectorXd>& history() const { return history_; }
  long accepted() const { return accepted_; }
  long proposed() const { return proposed_; }

 private:
  void set_kernel(ProposalKernel k);
  bool adapting(int iter) const;

  int dim_ = 0;
  double rw_sd_ = 1.0;
  ProposalSettings settings_;
  ProposalKernel kernel_;
  Eigen::MatrixXd chol_;
  std::deque<Eigen::VectorXd> history_;
  double log_scale_ = 0.0;
  long rm_steps_ = 0;
  long accepted_ = 0;
  long proposed_ = 0;
};

}  // namespace crvar
