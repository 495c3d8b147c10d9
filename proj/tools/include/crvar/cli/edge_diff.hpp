#pragma once

// Scale-free edge differences between two sets of precision draws:
//   θ(i,j) = (Ω_a - Ω_b)_ij / sqrt((Ω_b + Ω_a)_ii (Ω_b + Ω_a)_jj)
// with Ω_b the pre-event and Ω_a the post-event precision.

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crvar::cli {

struct PairSummary {
  int i = 0;  ///< 0-based, i < j
  int j = 0;
  double mean = 0.0;
  double lo = 0.0;   ///< 2.5% empirical quantile
  double hi = 0.0;   ///< 97.5% empirical quantile
  bool changed = false;  ///< interval excludes 0
};

struct EdgeDiffReport {
  std::string group;
  int d = 0;
  double tau = 0.1;
  int draws = 0;
  std::vector<PairSummary> pairs;  ///< upper triangle, row-major
  double change_proportion = 0.0;  ///< fraction of pairs with changed = true
  double change_score_tau = 0.0;   ///< fraction of pairs with |mean| > tau
  std::vector<std::string> warnings;

  int changed_count() const;
  int exceed_count() const;
};

/// θ for one pair of precision matrices; symmetric, zero diagonal.
Eigen::MatrixXd theta_matrix(const Eigen::MatrixXd& omega_pre, const Eigen::MatrixXd& omega_post);

/// Empirical quantile with linear interpolation between order statistics
/// (position (n-1)·prob).
double empirical_quantile(std::vector<double> x, double prob);

/// Evenly spaced subset of n out of 0..total-1 (first and last kept).
std::vector<std::size_t> thin_indices(std::size_t total, std::size_t n);

/// Draws are paired by index. Unequal counts: the longer set is thinned to
/// the shorter length and a warning is recorded.
EdgeDiffReport edge_diff(const std::vector<Eigen::MatrixXd>& pre,
                         const std::vector<Eigen::MatrixXd>& post, double tau,
                         const std::string& group = "");

/// Change proportion and τ score recomputed from per-pair rows.
double change_proportion_of(const std::vector<PairSummary>& pairs);
double change_score_of(const std::vector<PairSummary>& pairs, double tau);

}  // namespace crvar::cli
