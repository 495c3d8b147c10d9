#include "crvar/proposal.hpp"

#include <algorithm>
#include <cmath>

#include "crvar/errors.hpp"

namespace crvar {

int window_size(int iter, const ProposalSettings& s) {
  return std::min(s.s_max, s.s_min + iter / s.s_div);
}

ProposalKernel adapt_proposal(const std::deque<Eigen::VectorXd>& history, int iter, int dim,
                              double rw_sd, double scale, const ProposalSettings& s) {
  if (iter < 1) throw ContractViolation("adapt_proposal: iter must be >= 1");
  ProposalKernel k;
  const int window = std::min<int>(window_size(iter, s), static_cast<int>(history.size()));
  if (iter < s.adapt_start || window < 2) {
    k.cov = Eigen::MatrixXd::Identity(dim, dim) * (rw_sd * rw_sd);
    k.scale = 1.0;
    k.adaptive = false;
    return k;
  }
  const auto first = history.end() - window;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (auto it = first; it != history.end(); ++it) mean += *it;
  mean /= window;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (auto it = first; it != history.end(); ++it) {
    const Eigen::VectorXd c = *it - mean;
    cov.noalias() += c * c.transpose();
  }
  cov /= (window - 1);
  cov.diagonal().array() += s.ridge;
  k.cov = 0.5 * (cov + cov.transpose());
  k.scale = scale;
  k.adaptive = true;
  return k;
}

AdaptiveProposal::AdaptiveProposal(int dim, double rw_sd, const ProposalSettings& settings)
    : dim_(dim), rw_sd_(rw_sd), settings_(settings) {
  log_scale_ = std::log(2.38 / std::sqrt(static_cast<double>(std::max(dim, 1))));
  ProposalKernel k;
  k.cov = Eigen::MatrixXd::Identity(dim, dim) * (rw_sd * rw_sd);
  set_kernel(std::move(k));
}

void AdaptiveProposal::set_kernel(ProposalKernel k) {
  kernel_ = std::move(k);
  Eigen::LLT<Eigen::MatrixXd> llt(kernel_.cov);
  if (llt.info() == Eigen::Success) {
    chol_ = llt.matrixL();
  } else {
    // numerically indefinite window: keep the ridge direction only
    kernel_.cov = Eigen::MatrixXd::Identity(dim_, dim_) * settings_.ridge;
    chol_ = Eigen::MatrixXd::Identity(dim_, dim_) * std::sqrt(settings_.ridge);
  }
}

bool AdaptiveProposal::adapting(int iter) const {
  if (iter < settings_.adapt_start) return false;
  return settings_.freeze_at < 0 || iter < settings_.freeze_at;
}

Eigen::VectorXd AdaptiveProposal::propose(const Eigen::VectorXd& x, Rng& rng) const {
  return x + kernel_.scale * (chol_ * rng.normal_vector(dim_));
}

void AdaptiveProposal::record(bool accepted, const Eigen::VectorXd& state, int iter) {
  ++proposed_;
  if (accepted) {
    ++accepted_;
    history_.push_back(state);
    while (static_cast<int>(history_.size()) > settings_.s_max) history_.pop_front();
  }
  if (adapting(iter)) {
    ++rm_steps_;
    const double gain = settings_.rm_c / std::pow(static_cast<double>(rm_steps_), settings_.rm_exponent);
    log_scale_ += gain * ((accepted ? 1.0 : 0.0) - settings_.target_accept);
    log_scale_ = std::clamp(log_scale_, -30.0, 10.0);
    if (kernel_.adaptive) kernel_.scale = std::exp(log_scale_);
  }
}

void AdaptiveProposal::end_iteration(int iter) {
  if (!adapting(iter)) return;
  const bool first = !kernel_.adaptive;
  if (!first && iter % settings_.adapt_every != 0) return;
  if (first && iter != settings_.adapt_start && iter % settings_.adapt_every != 0) return;
  set_kernel(adapt_proposal(history_, iter, dim_, rw_sd_, std::exp(log_scale_), settings_));
}

}  // namespace crvar
