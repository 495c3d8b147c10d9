#include "crvar/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "crvar/errors.hpp"
#include "crvar/glasso.hpp"
#include "crvar/linalg.hpp"

namespace crvar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

VectorXd lower_entries(const MatrixXd& E1) {
  const Eigen::Index d = E1.rows();
  VectorXd x(d * (d - 1) / 2);
  Eigen::Index n = 0;
  for (Eigen::Index i = 1; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) x(n++) = E1(i, j);
  }
  return x;
}

void set_lower_entries(MatrixXd& E1, const VectorXd& x) {
  const Eigen::Index d = E1.rows();
  Eigen::Index n = 0;
  for (Eigen::Index i = 1; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) E1(i, j) = x(n++);
  }
}

bool is_spd(const MatrixXd& m) {
  if (!m.allFinite()) return false;
  Eigen::LLT<MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

// Bookkeeping for one MH block: acceptance windows plus the proposal.
struct Block {
  std::size_t record = 0;  // index into ChainOutput::acceptance
  AdaptiveProposal proposal;
  long window_acc = 0;
  long window_prop = 0;
};

class Chain {
 public:
  Chain(const Sample& sample, const McmcConfig& config, ChainOutput& out)
      : sample_(sample), cfg_(config), settings_(config.proposal_settings()), rng_(config.seed),
        out_(out) {}

  Rng& rng() { return rng_; }
  void set_params(ReducedRankVarParams p) { params_ = std::move(p); }
  void run();

 private:
  double loglik(const ReducedRankVarParams& p) {
    if (!cfg_.use_likelihood) return 0.0;
    const double ll = chain_loglik(p, sample_);
    if (!std::isfinite(ll)) ++out_.conditioning_failures;
    return ll;
  }
  double posterior(const ReducedRankVarParams& p) {
    const double lp = log_prior(p, hyper_);
    if (lp == kLogZero) return kNegInf;
    const double ll = loglik(p);
    if (!std::isfinite(ll)) return kNegInf;
    return ll + lp;
  }

  double base_sd(int dim) const {
    return cfg_.rw_base * 2.38 / std::sqrt(static_cast<double>(std::max(dim, 1)) * sample_.T());
  }
  Block make_block(const std::string& name, int dim, double rw_sd) {
    Block b;
    b.record = out_.acceptance.size();
    out_.acceptance.push_back(BlockAcceptance{name, {}, 0.0, 0, 0});
    b.proposal = AdaptiveProposal(dim, rw_sd, settings_);
    return b;
  }
  void build_lag_blocks();
  bool step(Block& b, VectorXd& x, const std::function<double(const VectorXd&)>& target,
            int iter);
  void close_window(Block& b);
  void sweep(int iter);
  void prune(int iter);
  void store_draw();

  const Sample& sample_;
  const McmcConfig& cfg_;
  ProposalSettings settings_;
  Rng rng_;
  ReducedRankVarParams params_;
  HyperState hyper_;
  ChainOutput& out_;
  double log_post_ = 0.0;
  double l_scale_ = 1.0;

  Block e_block_, f_block_, lambda_block_;
  std::vector<std::vector<Block>> l_blocks_;
  std::vector<Block> k_blocks_;
  std::vector<std::vector<int>> l_ids_;  // original column ids per lag
  std::vector<Block*> live_;
};

void Chain::build_lag_blocks() {
  const int d = params_.dim();
  l_blocks_.assign(params_.order(), {});
  k_blocks_.clear();
  for (int j = 0; j < params_.order(); ++j) {
    const int r = params_.rank(j);
    for (int m = 0; m < r; ++m) {
      const std::string name = "L" + std::to_string(j + 1) + "." + std::to_string(l_ids_[j][m] + 1);
      l_blocks_[j].push_back(make_block(name, d, base_sd(d) * l_scale_));
    }
    k_blocks_.push_back(make_block("K" + std::to_string(j + 1), d * std::max(r, 1),
                                   base_sd(d * std::max(r, 1)) / std::sqrt(j + 1.0)));
  }
  live_.clear();
  live_.push_back(&e_block_);
  live_.push_back(&f_block_);
  live_.push_back(&lambda_block_);
  for (auto& lag : l_blocks_) {
    for (auto& b : lag) live_.push_back(&b);
  }
  for (int j = 0; j < params_.order(); ++j) {
    if (params_.rank(j) > 0) live_.push_back(&k_blocks_[j]);
  }
}

bool Chain::step(Block& b, VectorXd& x, const std::function<double(const VectorXd&)>& target,
                 int iter) {
  const bool acc = metropolis_step(b.proposal, x, log_post_, target, rng_, iter);
  ++b.window_prop;
  if (acc) ++b.window_acc;
  auto& rec = out_.acceptance[b.record];
  ++rec.proposed;
  if (acc) ++rec.accepted;
  return acc;
}

void Chain::close_window(Block& b) {
  if (b.window_prop == 0) return;
  out_.acceptance[b.record].windows.push_back(static_cast<double>(b.window_acc) / b.window_prop);
  b.window_acc = 0;
  b.window_prop = 0;
}

void Chain::sweep(int iter) {
  const int d = params_.dim();

  // (a) E1 lower entries jointly
  if (d > 1) {
    VectorXd x = lower_entries(params_.E1);
    const bool acc = step(e_block_, x, [&](const VectorXd& y) {
      ReducedRankVarParams q = params_;
      set_lower_entries(q.E1, y);
      return posterior(q);
    }, iter);
    if (acc) set_lower_entries(params_.E1, x);
  }

  // (b) log f with Jacobian
  {
    VectorXd u = params_.f.array().log().matrix();
    log_post_ += u.sum();
    const bool acc = step(f_block_, u, [&](const VectorXd& v) {
      ReducedRankVarParams q = params_;
      q.f = v.array().exp().matrix();
      return posterior(q) + v.sum();
    }, iter);
    log_post_ -= u.sum();
    if (acc) params_.f = u.array().exp().matrix();
  }

  // (c) log λ with Jacobian; the likelihood only changes when the
  // thresholded pattern does
  if (iter > std::min(cfg_.lambda_hold, cfg_.n_burn)) {
    VectorXd v(1);
    v(0) = std::log(params_.lambda);
    const MatrixXd e_cur = hard_threshold(params_.E1, params_.lambda);
    const double lp_cur = log_prior(params_, hyper_);
    const double ll_cur = log_post_ - lp_cur;
    log_post_ += v(0);
    const bool acc = step(lambda_block_, v, [&](const VectorXd& w) {
      ReducedRankVarParams q = params_;
      q.lambda = std::exp(w(0));
      const double lp = log_prior(q, hyper_);
      if (lp == kLogZero) return kNegInf;
      const bool same = hard_threshold(q.E1, q.lambda) == e_cur;
      const double ll = same ? ll_cur : loglik(q);
      if (!std::isfinite(ll)) return kNegInf;
      return ll + lp + w(0);
    }, iter);
    log_post_ -= v(0);
    if (acc) params_.lambda = std::exp(v(0));
  }

  // (d) columns of each L_j
  for (int j = 0; j < params_.order(); ++j) {
    for (int m = 0; m < params_.rank(j); ++m) {
      VectorXd x = params_.L[j].col(m);
      const bool acc = step(l_blocks_[j][m], x, [&](const VectorXd& y) {
        ReducedRankVarParams q = params_;
        q.L[j].col(m) = y;
        return posterior(q);
      }, iter);
      if (acc) params_.L[j].col(m) = x;
    }
  }

  // (e) each K_j
  for (int j = 0; j < params_.order(); ++j) {
    const int r = params_.rank(j);
    if (r == 0) continue;
    VectorXd x = Eigen::Map<const VectorXd>(params_.K[j].data(), d * r);
    const bool acc = step(k_blocks_[j], x, [&](const VectorXd& y) {
      ReducedRankVarParams q = params_;
      q.K[j] = Eigen::Map<const MatrixXd>(y.data(), d, r);
      return posterior(q);
    }, iter);
    if (acc) params_.K[j] = Eigen::Map<const MatrixXd>(x.data(), d, r);
  }

  // (f) hyperparameters
  const double ll = log_post_ - log_prior(params_, hyper_);
  hyper_ = gibbs_update_hypers(params_, hyper_, rng_);
  log_post_ = ll + log_prior(params_, hyper_);

  for (Block* b : live_) b->proposal.end_iteration(iter);
  if (iter % cfg_.adapt_every == 0) {
    for (Block* b : live_) close_window(*b);
  }
}

void Chain::prune(int iter) {
  for (Block* b : live_) close_window(*b);
  PruneResult pr = prune_ranks(params_, hyper_, cfg_.prune_threshold);
  std::vector<std::vector<int>> ids;
  for (std::size_t j = 0; j < pr.kept_columns.size(); ++j) {
    std::vector<int> lag;
    for (int m : pr.kept_columns[j]) lag.push_back(l_ids_[pr.source_lags[j]][m]);
    ids.push_back(lag);
  }
  if (pr.minimal_fallback) {
    out_.warnings.push_back("pruning at iteration " + std::to_string(iter) +
                            " removed every column; kept a minimal p=1, r=1 model");
  }
  params_ = std::move(pr.params);
  hyper_ = std::move(pr.hyper);
  l_ids_ = std::move(ids);
  build_lag_blocks();
  log_post_ = posterior(params_);
  if (!std::isfinite(log_post_)) throw Error("run_mcmc: non-finite log posterior after pruning");
}

void Chain::store_draw() {
  out_.omega_draws.push_back(build_precision(params_.E1, params_.f, params_.lambda));
  out_.lambda_draws.push_back(params_.lambda);
  const ForwardResult fr = forward_map(params_, Detail::PredictorsOnly);
  out_.sigma_draws.push_back(fr.model.Sigma);
  if (cfg_.store_coefficients) out_.A_draws.push_back(fr.model.A);
}

void Chain::run() {
  const int d = params_.dim();
  double max_e = 0.0;
  if (d > 1) max_e = lower_entries(params_.E1).cwiseAbs().maxCoeff();
  PriorConstants constants = cfg_.prior;
  constants.lambda_max =
      std::max({cfg_.lambda_max_factor * max_e, cfg_.lambda_max_factor * params_.lambda, 1e-3});
  if (!(params_.lambda > 0.0)) params_.lambda = cfg_.lambda_init_fraction * constants.lambda_max;
  out_.lambda_max = constants.lambda_max;
  hyper_ = HyperState::initial(params_, constants);
  out_.initial_order = params_.order();

  const double mean_diag = build_precision(params_.E1, params_.f, params_.lambda).diagonal().mean();
  l_scale_ = std::sqrt(std::max(mean_diag, 1e-12));

  e_block_ = make_block("E1", std::max(d * (d - 1) / 2, 1), base_sd(std::max(d * (d - 1) / 2, 1)));
  f_block_ = make_block("log_f", d, base_sd(d) * std::sqrt(2.0));
  lambda_block_ = make_block("log_lambda", 1, base_sd(1));
  l_ids_.clear();
  for (int j = 0; j < params_.order(); ++j) {
    std::vector<int> lag;
    for (int m = 0; m < params_.rank(j); ++m) lag.push_back(m);
    l_ids_.push_back(lag);
  }
  build_lag_blocks();

  log_post_ = posterior(params_);
  if (!std::isfinite(log_post_)) {
    throw Error("run_mcmc: non-finite log posterior at initialization");
  }

  const int post = cfg_.n_iter - cfg_.n_burn;
  const int keep = std::min(cfg_.n_keep, post);
  const int thin = std::max(1, post / cfg_.n_keep);
  out_.log_post_trace.reserve(cfg_.n_iter);

  for (int iter = 1; iter <= cfg_.n_iter; ++iter) {
    sweep(iter);
    if (iter == cfg_.prune_iter) prune(iter);
    out_.log_post_trace.push_back(log_post_);
    if (iter > cfg_.n_burn && (iter - cfg_.n_burn) % thin == 0 &&
        static_cast<int>(out_.omega_draws.size()) < keep) {
      store_draw();
    }
  }
  for (Block* b : live_) close_window(*b);

  const std::size_t recent_windows =
      static_cast<std::size_t>(std::max(1, 2000 / cfg_.adapt_every));
  for (auto& rec : out_.acceptance) {
    const auto& w = rec.windows;
    const std::size_t n = std::min(recent_windows, w.size());
    double s = 0.0;
    for (std::size_t i = w.size() - n; i < w.size(); ++i) s += w[i];
    rec.recent = n > 0 ? s / n : 0.0;
  }
  if (cfg_.n_iter > cfg_.adapt_start + 2000) {
    for (const Block* b : live_) {
      const auto& rec = out_.acceptance[b->record];
      if (rec.proposed == 0) continue;
      if (rec.recent < cfg_.accept_lo - 0.05 || rec.recent > cfg_.accept_hi + 0.05) {
        out_.warnings.push_back("acceptance of block " + rec.name + " over the last 2000 "
                                "iterations is " + fmt(rec.recent));
      }
    }
  }

  out_.final_order = params_.order();
  out_.final_ranks.clear();
  for (int j = 0; j < params_.order(); ++j) out_.final_ranks.push_back(params_.rank(j));
  out_.final_params = params_;
}

}  // namespace

void McmcConfig::validate() const {
  auto fail = [](const std::string& m) { throw ContractViolation("McmcConfig: " + m); };
  if (n_iter < 1) fail("n_iter must be >= 1");
  if (n_burn < 0 || n_burn >= n_iter) fail("n_burn must lie in [0, n_iter)");
  if (n_keep < 1) fail("n_keep must be >= 1");
  if (adapt_start < 1 || adapt_start >= n_iter) fail("adapt_start must lie in [1, n_iter)");
  if (adapt_every < 1) fail("adapt_every must be >= 1");
  if (!(accept_lo > 0.0 && accept_lo < accept_hi && accept_hi < 1.0)) {
    fail("need 0 < accept_lo < accept_hi < 1");
  }
  if (prune_iter < 1) fail("prune_iter must be >= 1");
  if (!(prune_threshold >= 0.0)) fail("prune_threshold must be >= 0");
  if (p_max < 1) fail("p_max must be >= 1");
  if (r_init < 1) fail("r_init must be >= 1");
  if (s_min < 2 || s_max < s_min || s_div < 1) fail("invalid S schedule");
  if (!(rm_c > 0.0) || !(rw_base > 0.0)) fail("rm_c and rw_base must be positive");
  if (!(glasso_rho_factor >= 0.0) || !(ridge_factor > 0.0)) fail("invalid warm-start settings");
  if (lambda_hold < 0) fail("lambda_hold must be >= 0");
  if (!(lambda_max_factor > 0.0) || !(lambda_init_fraction > 0.0 && lambda_init_fraction <= 1.0)) {
    fail("invalid lambda settings");
  }
}

ProposalSettings McmcConfig::proposal_settings() const {
  ProposalSettings s;
  s.adapt_start = adapt_start;
  s.adapt_every = adapt_every;
  s.target_accept = 0.5 * (accept_lo + accept_hi);
  s.rm_c = rm_c;
  s.s_min = s_min;
  s.s_max = s_max;
  s.s_div = s_div;
  s.freeze_at = freeze_adapt_at_burn ? n_burn + 1 : -1;
  return s;
}

MatrixXd ChainOutput::posterior_mean_omega() const {
  if (omega_draws.empty()) throw ContractViolation("posterior_mean_omega: no draws");
  MatrixXd m = MatrixXd::Zero(omega_draws[0].rows(), omega_draws[0].cols());
  for (const auto& o : omega_draws) m += o;
  return m / static_cast<double>(omega_draws.size());
}

MatrixXd second_moment(const Sample& sample) {
  return sample.X.transpose() * sample.X / static_cast<double>(sample.T());
}

ReducedRankVarParams initial_params(const Sample& sample, const McmcConfig& config, Rng& rng) {
  const int d = sample.dim();
  const MatrixXd S = second_moment(sample);
  double scale = S.diagonal().mean();
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;

  MatrixXd warm;
  bool ok = false;
  if (config.warm_start == WarmStart::Glasso) {
    const GlassoResult g = graphical_lasso(S, config.glasso_rho_factor * scale);
    warm = g.precision;
    ok = is_spd(warm);
  }
  if (!ok) {
    warm = ridge_precision(S, config.ridge_factor * scale);
    ok = is_spd(warm);
  }
  if (!ok) warm = MatrixXd::Identity(d, d) / scale;

  linalg::UnitLdl ldl;
  try {
    ldl = linalg::unit_ldl(warm);
  } catch (const Error&) {
    ldl = linalg::unit_ldl(MatrixXd::Identity(d, d) / scale);
  }

  const int p = std::max(1, std::min(config.p_max, sample.T() / 2));
  const int r = std::min(config.r_init, d);
  auto params = ReducedRankVarParams::zeros(d, p, r);
  params.E1 = MatrixXd::Identity(d, d) - ldl.unit_lower;
  params.E1.triangularView<Eigen::Upper>().setZero();
  params.f = ldl.diag;
  params.lambda = 0.0;
  for (int j = 1; j <= p; ++j) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(j));
    for (Eigen::Index i = 0; i < params.L[j - 1].size(); ++i) {
      params.L[j - 1].data()[i] = sd * rng.normal();
    }
    for (Eigen::Index i = 0; i < params.K[j - 1].size(); ++i) {
      params.K[j - 1].data()[i] = sd * rng.normal();
    }
  }
  return params;
}

PruneResult prune_ranks(const ReducedRankVarParams& params, const HyperState& hyper,
                        double threshold) {
  const int d = params.dim();
  const int p = params.order();
  PruneResult out;
  std::vector<std::vector<int>> keep(p);
  int last = 0;
  double best = -1.0;
  int best_j = 0, best_m = 0;
  for (int j = 0; j < p; ++j) {
    for (int m = 0; m < params.rank(j); ++m) {
      const double ss = params.L[j].col(m).squaredNorm();
      if (ss > best) {
        best = ss;
        best_j = j;
        best_m = m;
      }
      if (ss >= threshold) keep[j].push_back(m);
    }
    if (!keep[j].empty()) last = j + 1;
  }

  ReducedRankVarParams q;
  q.E1 = params.E1;
  q.f = params.f;
  q.lambda = params.lambda;
  HyperState h = hyper;
  h.phi.clear();
  h.delta_k.clear();

  if (last == 0) {
    out.minimal_fallback = true;
    q.L = {params.L[best_j].col(best_m)};
    q.K = {params.K[best_j].col(best_m)};
    h.phi = {hyper.phi[best_j].col(best_m)};
    h.delta = VectorXd::Constant(1, hyper.delta(best_j));
    h.delta_k = {VectorXd::Constant(1, hyper.delta_k[best_j](best_m))};
    out.kept_columns = {{best_m}};
    out.source_lags = {best_j};
  } else {
    for (int j = 0; j < last; ++j) {
      const int r = static_cast<int>(keep[j].size());
      MatrixXd L(d, r), K(d, r), ph(d, r);
      VectorXd dk(r);
      for (int c = 0; c < r; ++c) {
        L.col(c) = params.L[j].col(keep[j][c]);
        K.col(c) = params.K[j].col(keep[j][c]);
        ph.col(c) = hyper.phi[j].col(keep[j][c]);
        dk(c) = hyper.delta_k[j](keep[j][c]);
      }
      q.L.push_back(L);
      q.K.push_back(K);
      h.phi.push_back(ph);
      h.delta_k.push_back(dk);
    }
    h.delta = hyper.delta.head(last);
    out.kept_columns.assign(keep.begin(), keep.begin() + last);
    for (int j = 0; j < last; ++j) out.source_lags.push_back(j);
  }
  h.use_psi = q.max_rank() > 1;
  h.refresh_products();
  out.params = std::move(q);
  out.hyper = std::move(h);
  return out;
}

bool metropolis_step(AdaptiveProposal& proposal, VectorXd& x, double& log_target,
                     const std::function<double(const VectorXd&)>& target, Rng& rng, int iter) {
  const VectorXd y = proposal.propose(x, rng);
  const double t = target(y);
  const bool accept = std::isfinite(t) && std::log(rng.uniform()) < t - log_target;
  if (accept) {
    x = y;
    log_target = t;
  }
  proposal.record(accept, x, iter);
  return accept;
}

double log_scale_target(const VectorXd& u,
                        const std::function<double(const VectorXd&)>& log_density) {
  const double v = log_density(u.array().exp().matrix());
  if (!std::isfinite(v)) return kNegInf;
  return v + u.sum();
}

double chain_loglik(const ReducedRankVarParams& params, const Sample& sample) {
  bool rank_one = true;
  for (int j = 0; j < params.order(); ++j) rank_one = rank_one && params.rank(j) == 1;
  try {
    const double ll = rank_one ? loglik_rank_one(params, sample) : loglik_recursive(params, sample);
    return std::isfinite(ll) ? ll : kNegInf;
  } catch (const Error&) {
    return kNegInf;
  }
}

ChainOutput run_mcmc(const Sample& sample, const McmcConfig& config,
                     const std::optional<ReducedRankVarParams>& init) {
  config.validate();
  sample.validate();
  ChainOutput out;

  const MatrixXd S = second_moment(sample);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (es.eigenvalues().minCoeff() <= 1e-10 * std::max(top, 1e-300)) {
    out.warnings.push_back("data second-moment matrix is rank deficient; the precision is "
                           "weakly identified");
  }

  Chain chain(sample, config, out);
  if (init) {
    init->validate();
    if (init->dim() != sample.dim()) throw ContractViolation("run_mcmc: init dimension mismatch");
    chain.set_params(*init);
  } else {
    chain.set_params(initial_params(sample, config, chain.rng()));
  }
  chain.run();
  return out;
}

}  // namespace crvar
