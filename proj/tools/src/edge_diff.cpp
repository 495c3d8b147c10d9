#include "crvar/cli/edge_diff.hpp"

#include <algorithm>
#include <cmath>

#include "crvar/errors.hpp"

namespace crvar::cli {

int EdgeDiffReport::changed_count() const {
  return static_cast<int>(std::count_if(pairs.begin(), pairs.end(),
                                        [](const PairSummary& p) { return p.changed; }));
}

int EdgeDiffReport::exceed_count() const {
  return static_cast<int>(std::count_if(pairs.begin(), pairs.end(),
                                        [&](const PairSummary& p) { return std::abs(p.mean) > tau; }));
}

Eigen::MatrixXd theta_matrix(const Eigen::MatrixXd& omega_pre, const Eigen::MatrixXd& omega_post) {
  if (omega_pre.rows() != omega_post.rows() || omega_pre.cols() != omega_post.cols() ||
      omega_pre.rows() != omega_pre.cols()) {
    throw ContractViolation("theta_matrix: dimension mismatch");
  }
  const Eigen::MatrixXd diff = omega_post - omega_pre;
  const Eigen::VectorXd s = (omega_pre + omega_post).diagonal();
  if (!(s.minCoeff() > 0.0)) throw DomainError("theta_matrix: non-positive diagonal");
  const Eigen::VectorXd inv = s.array().rsqrt().matrix();
  Eigen::MatrixXd theta = inv.asDiagonal() * diff * inv.asDiagonal();
  theta = 0.5 * (theta + theta.transpose()).eval();
  theta.diagonal().setZero();
  return theta;
}

double empirical_quantile(std::vector<double> x, double prob) {
  if (x.empty()) throw ContractViolation("empirical_quantile: empty input");
  std::sort(x.begin(), x.end());
  const double pos = prob * static_cast<double>(x.size() - 1);
  const std::size_t k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= x.size()) return x.back();
  const double w = pos - static_cast<double>(k);
  return x[k] + w * (x[k + 1] - x[k]);
}

std::vector<std::size_t> thin_indices(std::size_t total, std::size_t n) {
  std::vector<std::size_t> idx;
  if (n == 0 || total == 0) return idx;
  if (n >= total) {
    for (std::size_t i = 0; i < total; ++i) idx.push_back(i);
    return idx;
  }
  if (n == 1) return {total - 1};
  for (std::size_t k = 0; k < n; ++k) {
    idx.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(k) * static_cast<double>(total - 1) / static_cast<double>(n - 1))));
  }
  return idx;
}

double change_proportion_of(const std::vector<PairSummary>& pairs) {
  if (pairs.empty()) return 0.0;
  const auto n = std::count_if(pairs.begin(), pairs.end(), [](const PairSummary& p) { return p.changed; });
  return static_cast<double>(n) / static_cast<double>(pairs.size());
}

double change_score_of(const std::vector<PairSummary>& pairs, double tau) {
  if (pairs.empty()) return 0.0;
  const auto n = std::count_if(pairs.begin(), pairs.end(),
                               [&](const PairSummary& p) { return std::abs(p.mean) > tau; });
  return static_cast<double>(n) / static_cast<double>(pairs.size());
}

EdgeDiffReport edge_diff(const std::vector<Eigen::MatrixXd>& pre,
                         const std::vector<Eigen::MatrixXd>& post, double tau,
                         const std::string& group) {
  if (pre.empty() || post.empty()) throw ContractViolation("edge_diff: no draws");
  if (!(tau >= 0.0)) throw ContractViolation("edge_diff: tau must be >= 0");
  const Eigen::Index d = pre[0].rows();
  for (const auto* set : {&pre, &post}) {
    for (const auto& m : *set) {
      if (m.rows() != d || m.cols() != d) throw ContractViolation("edge_diff: dimension mismatch");
    }
  }

  EdgeDiffReport rep;
  rep.group = group;
  rep.d = static_cast<int>(d);
  rep.tau = tau;
  const std::size_t n = std::min(pre.size(), post.size());
  const std::vector<std::size_t> ib = thin_indices(pre.size(), n);
  const std::vector<std::size_t> ia = thin_indices(post.size(), n);
  if (pre.size() != post.size()) {
    rep.warnings.push_back("draw counts differ (" + std::to_string(pre.size()) + " pre, " +
                           std::to_string(post.size()) + " post); thinned both to " +
                           std::to_string(n));
  }
  rep.draws = static_cast<int>(n);

  const Eigen::Index npairs = d * (d - 1) / 2;
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(npairs));
  for (auto& s : samples) s.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::MatrixXd th = theta_matrix(pre[ib[k]], post[ia[k]]);
    std::size_t q = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) samples[q++].push_back(th(i, j));
    }
  }

  std::size_t q = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const auto& s = samples[q++];
      PairSummary p;
      p.i = static_cast<int>(i);
      p.j = static_cast<int>(j);
      double sum = 0.0;
      for (double v : s) sum += v;
      p.mean = sum / static_cast<double>(s.size());
      p.lo = empirical_quantile(s, 0.025);
      p.hi = empirical_quantile(s, 0.975);
      p.changed = p.lo > 0.0 || p.hi < 0.0;
      rep.pairs.push_back(p);
    }
  }
  rep.change_proportion = change_proportion_of(rep.pairs);
  rep.change_score_tau = change_score_of(rep.pairs, tau);
  return rep;
}

}  // namespace crvar::cli
