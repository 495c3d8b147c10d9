#include "crvar/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "crvar/errors.hpp"
#include "crvar/linalg.hpp"

namespace crvar {

namespace {

using Eigen::MatrixXi;

std::vector<int> block_sizes(int d, int blocks) {
  const int b = std::max(1, std::min(blocks, d));
  std::vector<int> sizes(b, d / b);
  for (int i = 0; i < d % b; ++i) ++sizes[i];
  return sizes;
}

// Watts-Strogatz ring lattice on each block with random rewiring.
MatrixXi small_world_blocks(int d, int blocks, int nei, double rewire, Rng& rng) {
  MatrixXi adj = MatrixXi::Zero(d, d);
  int offset = 0;
  for (int n : block_sizes(d, blocks)) {
    const int k = std::min(nei, (n - 1) / 2 + ((n - 1) % 2));
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int s = 1; s <= k; ++s) {
        const int j = (i + s) % n;
        if (i == j) continue;
        const int a = offset + i, b = offset + j;
        if (adj(a, b)) continue;
        adj(a, b) = adj(b, a) = 1;
        edges.emplace_back(a, b);
      }
    }
    for (auto [a, b] : edges) {
      if (rng.uniform() >= rewire) continue;
      std::vector<int> free;
      for (int c = offset; c < offset + n; ++c) {
        if (c != a && !adj(a, c)) free.push_back(c);
      }
      if (free.empty()) continue;
      const int c = free[std::min<std::size_t>(free.size() - 1,
                                                static_cast<std::size_t>(rng.uniform() * free.size()))];
      adj(a, b) = adj(b, a) = 0;
      adj(a, c) = adj(c, a) = 1;
    }
    offset += n;
  }
  return adj;
}

MatrixXd wishart_identity(int d, double df, Rng& rng) {
  MatrixXd A = MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(2.0 * rng.gamma(0.5 * (df - i), 1.0));
    for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  return A * A.transpose();
}

MatrixXd project_support(const MatrixXd& m, const MatrixXi& adj) {
  MatrixXd out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && !adj(i, j)) out(i, j) = 0.0;
    }
  }
  return out;
}

MatrixXd project_spd(const MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  const VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Eigen's rcond skips exactly zero pivots, so check the pivots as well.
bool well_conditioned(const Eigen::LDLT<MatrixXd>& ldlt) {
  if (ldlt.info() != Eigen::Success) return false;
  const VectorXd piv = ldlt.vectorD();
  if (!(piv.minCoeff() > 1e-14 * piv.cwiseAbs().maxCoeff())) return false;
  return ldlt.rcond() >= 1e-14;
}

struct Draw {
  MatrixXd omega;
  MatrixXi adjacency;
  double achieved;
};

Draw draw_precision(const PrecisionSpec& spec, int nei, double q, std::uint64_t seed) {
  const int d = spec.d;
  Rng graph_rng = Rng::derive(seed, 1);
  Rng cross_rng = Rng::derive(seed, 2);
  Rng wish_rng = Rng::derive(seed, 3);

  MatrixXi adj = nei > 0 ? small_world_blocks(d, spec.blocks, nei, spec.rewire, graph_rng)
                         : MatrixXi::Zero(d, d);
  std::vector<int> block_of(d);
  {
    int offset = 0, b = 0;
    for (int n : block_sizes(d, spec.blocks)) {
      for (int i = 0; i < n; ++i) block_of[offset + i] = b;
      offset += n;
      ++b;
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double u = cross_rng.uniform();
      if (block_of[i] != block_of[j] && u < q) adj(i, j) = adj(j, i) = 1;
    }
  }

  const double df = spec.gwishart_scale + d - 1.0;
  const MatrixXd W = wishart_identity(d, df, wish_rng);
  const double eig_floor = std::max(0.1 * spec.entry_floor, 1e-3 * W.diagonal().mean());

  // Dykstra alternating projections onto the support and the SPD cone.
  MatrixXd x = W;
  MatrixXd p_inc = MatrixXd::Zero(d, d), q_inc = MatrixXd::Zero(d, d);
  for (int it = 0; it < spec.projection_iters; ++it) {
    const MatrixXd y = project_support(x + p_inc, adj);
    p_inc = x + p_inc - y;
    const MatrixXd z = project_spd(y + q_inc, eig_floor);
    q_inc = y + q_inc - z;
    x = z;
  }
  MatrixXd omega = project_support(x, adj);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j && std::abs(omega(i, j)) < spec.entry_floor) omega(i, j) = 0.0;
    }
  }
  linalg::symmetrize(omega);
  const double min_ev = linalg::min_eigenvalue(omega);
  if (min_ev < eig_floor) omega.diagonal().array() += eig_floor - min_ev;

  Draw out;
  out.adjacency = MatrixXi::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out.adjacency(i, j) = (i != j && omega(i, j) != 0.0) ? 1 : 0;
  }
  out.omega = std::move(omega);
  out.achieved = offdiag_density(out.omega);
  return out;
}

}  // namespace

void PrecisionSpec::validate() const {
  if (d < 2) throw ContractViolation("PrecisionSpec: d must be >= 2");
  if (!(sparsity_target > 0.0 && sparsity_target < 1.0)) {
    throw ContractViolation("PrecisionSpec: sparsity_target must lie in (0, 1)");
  }
  if (nei < 0 || blocks < 1) throw ContractViolation("PrecisionSpec: invalid graph settings");
  if (!(gwishart_scale > 2.0)) throw ContractViolation("PrecisionSpec: gwishart_scale must be > 2");
  if (!(entry_floor >= 0.0)) throw ContractViolation("PrecisionSpec: entry_floor must be >= 0");
}

double offdiag_density(const MatrixXd& m) {
  const Eigen::Index d = m.rows();
  if (d < 2) return 0.0;
  long nz = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) nz += m(i, j) != 0.0 ? 1 : 0;
  }
  return static_cast<double>(nz) / (0.5 * d * (d - 1));
}

SparsePrecision gen_sparse_precision(const PrecisionSpec& spec, Rng& rng) {
  spec.validate();
  const std::uint64_t seed = rng.next_u64();
  const double target = spec.sparsity_target;

  // The lattice alone may already be denser than the target on small d.
  int nei = spec.nei;
  Draw low = draw_precision(spec, nei, 0.0, seed);
  while (nei > 0 && low.achieved > target + spec.band + 1e-12) {
    --nei;
    low = draw_precision(spec, nei, 0.0, seed);
  }

  Draw best = low;
  double best_q = 0.0;
  if (std::abs(low.achieved - target) > 0.25 * spec.band) {
    double lo = 0.0, hi = 1.0;
    for (int step = 0; step < spec.max_bisection; ++step) {
      const double mid = 0.5 * (lo + hi);
      Draw cur = draw_precision(spec, nei, mid, seed);
      if (std::abs(cur.achieved - target) < std::abs(best.achieved - target)) {
        best = cur;
        best_q = mid;
      }
      if (std::abs(cur.achieved - target) <= 0.25 * spec.band) break;
      if (cur.achieved < target) lo = mid; else hi = mid;
    }
  }
  if (std::abs(best.achieved - target) > spec.band + 1e-12) {
    throw Error("gen_sparse_precision: achieved sparsity " + std::to_string(best.achieved) +
                " outside the target band around " + std::to_string(target));
  }
  SparsePrecision out;
  out.omega = std::move(best.omega);
  out.adjacency = std::move(best.adjacency);
  out.achieved = best.achieved;
  out.q = best_q;
  out.nei = nei;
  return out;
}

Sample simulate_var(const ReducedRankVarParams& params, int T, Rng& rng) {
  if (T < 1) throw ContractViolation("simulate_var: T must be >= 1");
  const ForwardResult fr = forward_map(params, Detail::Full);
  const DerivedState& s = fr.state;
  const int d = params.dim();
  const int p = params.order();
  std::vector<MatrixXd> chol;
  for (int m = 0; m <= p; ++m) {
    Eigen::LLT<MatrixXd> llt(s.C[m]);
    if (llt.info() != Eigen::Success) {
      throw ConditioningError("simulate_var: conditional covariance not positive definite", m);
    }
    chol.push_back(llt.matrixL());
  }
  Sample out;
  out.X.resize(T, d);
  for (int t = 1; t <= T; ++t) {
    const int m = std::min(t - 1, p);
    VectorXd x = chol[m] * rng.normal_vector(d);
    for (int k = 1; k <= m; ++k) {
      x.noalias() += s.forward[m].middleCols((k - 1) * d, d) * out.X.row(t - 1 - k).transpose();
    }
    out.X.row(t - 1) = x.transpose();
  }
  return out;
}

ReducedRankVarParams params_from_precision(const MatrixXd& omega, int p, int r) {
  const int d = static_cast<int>(omega.rows());
  const linalg::UnitLdl ldl = linalg::unit_ldl(omega);
  auto params = ReducedRankVarParams::zeros(d, p, r);
  params.E1 = MatrixXd::Identity(d, d) - ldl.unit_lower;
  params.E1.triangularView<Eigen::Upper>().setZero();
  params.f = ldl.diag;
  params.lambda = 0.0;
  return params;
}

Var1Fit fit_var1_baseline(const Sample& sample, double ridge) {
  sample.validate();
  if (!(ridge >= 0.0)) throw ContractViolation("fit_var1_baseline: ridge must be >= 0");
  const int T = sample.T();
  if (T < 2) throw ContractViolation("fit_var1_baseline: need T >= 2");
  const MatrixXd Y = sample.X.bottomRows(T - 1);
  const MatrixXd Z = sample.X.topRows(T - 1);
  MatrixXd gram = Z.transpose() * Z;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<MatrixXd> ldlt(gram);
  if (!well_conditioned(ldlt)) {
    throw SingularityError("fit_var1_baseline: singular design", 1);
  }
  Var1Fit fit;
  fit.A1 = ldlt.solve(Z.transpose() * Y).transpose();
  const MatrixXd resid = Y - Z * fit.A1.transpose();
  fit.Sigma = resid.transpose() * resid / static_cast<double>(T - 1);
  linalg::symmetrize(fit.Sigma);
  fit.causal = companion_spectral_radius({fit.A1}) < 1.0;
  if (fit.causal) {
    try {
      const MatrixXd g0 = solve_stationary_covariance({fit.A1}, fit.Sigma);
      fit.Omega = linalg::spd_inverse(g0);
    } catch (const Error&) {
      fit.causal = false;
    }
  }
  if (!fit.causal) {
    fit.warnings.push_back("ridge VAR(1) fit is not causal; using the inverse sample covariance");
    fit.Omega = naive_precision(sample);
  }
  return fit;
}

MatrixXd naive_precision(const Sample& sample) {
  const MatrixXd S = sample.X.transpose() * sample.X / static_cast<double>(sample.T());
  Eigen::LDLT<MatrixXd> ldlt(S);
  if (!well_conditioned(ldlt)) {
    throw SingularityError("naive_precision: sample covariance is singular", 0);
  }
  MatrixXd inv = ldlt.solve(MatrixXd::Identity(S.rows(), S.cols()));
  linalg::symmetrize(inv);
  return inv;
}

double mse_precision(const MatrixXd& est, const MatrixXd& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
    throw ContractViolation("mse_precision: dimension mismatch");
  }
  return (est - truth).squaredNorm() / static_cast<double>(truth.size());
}

RocCurve roc_points(const MatrixXd& scores, const Eigen::MatrixXi& truth) {
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols() ||
      scores.rows() != scores.cols()) {
    throw ContractViolation("roc_points: dimension mismatch");
  }
  const Eigen::Index d = scores.rows();
  std::vector<std::pair<double, int>> items;
  long pos = 0, neg = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const int t = truth(i, j) != 0 ? 1 : 0;
      items.emplace_back(scores(i, j), t);
      (t ? pos : neg) += 1;
    }
  }
  if (pos == 0 || neg == 0) {
    throw ContractViolation("roc_points: need at least one true edge and one non-edge");
  }
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  RocCurve c;
  c.fpr.push_back(0.0);
  c.tpr.push_back(0.0);
  c.threshold.push_back(std::numeric_limits<double>::infinity());
  long tp = 0, fp = 0;
  for (std::size_t k = 0; k < items.size();) {
    const double s = items[k].first;
    while (k < items.size() && items[k].first == s) {
      (items[k].second ? tp : fp) += 1;
      ++k;
    }
    c.fpr.push_back(static_cast<double>(fp) / neg);
    c.tpr.push_back(static_cast<double>(tp) / pos);
    c.threshold.push_back(s);
  }
  for (std::size_t k = 1; k < c.fpr.size(); ++k) {
    c.auc += (c.fpr[k] - c.fpr[k - 1]) * 0.5 * (c.tpr[k] + c.tpr[k - 1]);
  }
  return c;
}

}  // namespace crvar
