// Acceptance suite: one PASS/FAIL line per criterion.
//
//   crvar_acceptance [name ...]   runs the named criteria (default: all)
//
// Exit status is 0 when every failing criterion is listed in kKnownFailures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "crvar/cli/config.hpp"
#include "crvar/cli/csv.hpp"
#include "crvar/cli/edge_diff.hpp"
#include "crvar/cli/study.hpp"
#include "crvar/errors.hpp"
#include "crvar/likelihood.hpp"
#include "crvar/linalg.hpp"
#include "crvar/proposal.hpp"
#include "crvar/sampler.hpp"
#include "crvar/simgen.hpp"
#include "crvar/varcore.hpp"
#include "stat_support.hpp"
#include "test_support.hpp"

using namespace crvar;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

// Criteria that cannot pass as stated; see the README.
const std::set<std::string> kKnownFailures = {"precision_chain_norms"};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.uniform() * (hi - lo + 1)) % (hi - lo + 1);
}

double rel_err(double a, double ref) { return std::abs(a - ref) / (1.0 + std::abs(ref)); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("crvar_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  int bad = 0;
  for (int c = 0; c < 200; ++c) {
    const int d = uniform_int(rng, 2, 8);
    const int p = uniform_int(rng, 1, 3);
    const int r = uniform_int(rng, 1, 2);
    const int T = uniform_int(rng, 5, 50);
    const auto params = testing::random_params(rng, d, p, r);
    const Sample s = testing::random_sample(rng, params, T);
    const double e = rel_err(loglik_recursive(params, s), loglik_dense_oracle(params, s));
    worst = std::max(worst, e);
    if (!(e <= 1e-8)) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 60.0, "200 cases, max rel err " + fmt("%.2e", worst) + ", " +
                                       std::to_string(bad) + " over 1e-8, " + fmt("%.1f s", secs)};
}

Outcome rank_one_fast_path() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(7000 + seed);
    const int d = uniform_int(rng, 2, 8);
    const int p = uniform_int(rng, 1, 5);
    const auto params = testing::random_params(rng, d, p, 1);
    const Sample s = testing::random_sample(rng, params, uniform_int(rng, 5, 60));
    worst = std::max(worst, rel_err(loglik_rank_one(params, s), loglik_recursive(params, s)));
  }

  Rng rng(77);
  const auto params = testing::random_params(rng, 30, 5, 1, 0.5, 0.3);
  const Sample s = testing::random_sample(rng, params, 60);
  auto best_time = [&](const std::function<double()>& f, int reps) {
    double best = 1e300;
    for (int k = 0; k < reps; ++k) {
      const auto t0 = Clock::now();
      volatile double v = f();
      (void)v;
      best = std::min(best, seconds_since(t0));
    }
    return best;
  };
  const double fast = best_time([&] { return loglik_rank_one(params, s); }, 20);
  const double dense = best_time([&] { return testing::loglik_dense_per_step(params, s); }, 5);
  const double agree = rel_err(loglik_rank_one(params, s), testing::loglik_dense_per_step(params, s));
  const double speedup = dense / fast;
  const bool ok = worst <= 1e-10 && speedup >= 3.0 && agree <= 1e-8;
  return {ok, "50 seeds max rel err " + fmt("%.2e", worst) + "; d=30 p=5 T=60 rank-one " +
                  fmt("%.3f ms", fast * 1e3) + " vs dense per-step " + fmt("%.2f ms", dense * 1e3) +
                  " (" + fmt("%.1fx", speedup) + ")"};
}

Outcome causality() {
  int outputs = 0, attempts = 0, noncausal = 0;
  double worst = 0.0;
  Rng rng(303);
  while (outputs < 1000) {
    ++attempts;
    const int d = uniform_int(rng, 2, 10);
    const int p = uniform_int(rng, 1, 6);
    const int r = uniform_int(rng, 1, std::min(3, d));
    const double sd = std::exp(rng.normal(0.0, 1.0));
    const auto params = testing::random_params(rng, d, p, r, sd);
    try {
      const auto fr = forward_map(params);
      const double rho = companion_spectral_radius(fr.model.A);
      worst = std::max(worst, rho);
      if (!(rho < 1.0)) ++noncausal;
      ++outputs;
    } catch (const Error&) {
      // numerically degenerate draws produce no output
    }
  }

  long draws = 0, bad_draws = 0;
  double worst_draw = 0.0;
  struct ChainCase { int d, p_max, r_init; std::uint64_t seed; };
  for (const ChainCase cc : {ChainCase{3, 3, 2, 11}, ChainCase{5, 2, 1, 12}, ChainCase{4, 4, 1, 13}}) {
    Rng g(cc.seed);
    const auto truth = testing::random_params(g, cc.d, 2, 1, 1.5);
    const Sample s = simulate_var(truth, 120, g);
    McmcConfig cfg;
    cfg.n_iter = 3000;
    cfg.n_burn = 1000;
    cfg.n_keep = 2000;
    cfg.adapt_start = 500;
    cfg.prune_iter = 800;
    cfg.lambda_hold = 200;
    cfg.p_max = cc.p_max;
    cfg.r_init = cc.r_init;
    cfg.seed = cc.seed;
    const auto out = run_mcmc(s, cfg);
    for (const auto& A : out.A_draws) {
      const double rho = companion_spectral_radius(A);
      worst_draw = std::max(worst_draw, rho);
      ++draws;
      if (!(rho < 1.0)) ++bad_draws;
    }
  }
  const bool ok = noncausal == 0 && bad_draws == 0 && draws > 0;
  return {ok, std::to_string(outputs) + " forward_map outputs (" + std::to_string(attempts - outputs) +
                  " draws rejected as degenerate), max radius " + fmt("%.6f", worst) + "; " +
                  std::to_string(draws) + " retained draws, max radius " + fmt("%.6f", worst_draw) +
                  ", non-causal " + std::to_string(noncausal + bad_draws)};
}

Outcome precision_chain_norms() {
  int chain_bad = 0, checked = 0;
  int norm_bad[4] = {0, 0, 0, 0};
  double norm_worst[4] = {0, 0, 0, 0};
  double worst_eig = 0.0, worst_v = 0.0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(900 + seed);
    const int d = uniform_int(rng, 2, 8);
    const int p = uniform_int(rng, 1, 4);
    const int r = uniform_int(rng, 1, std::min(2, d));
    const auto params = testing::random_params(rng, d, p, r);
    const auto s = forward_map(params).state;
    const double cp = linalg::op_norm(s.Cinv[p]);
    const double g0 = linalg::op_norm(s.Gamma[0]);
    for (int j = 1; j <= p; ++j) {
      ++checked;
      const double eig = linalg::min_eigenvalue(s.Cinv[j] - s.Cinv[j - 1]);
      const MatrixXd& V = s.V[j - 1];
      const double vdev =
          (V.transpose() * s.Dinv[j - 1] * V - MatrixXd::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff();
      worst_eig = std::min(worst_eig, eig);
      worst_v = std::max(worst_v, vdev);
      if (eig < -1e-10 || vdev > 1e-9) ++chain_bad;

      const MatrixXd ups = s.block_toeplitz(j);
      const double ratio[4] = {linalg::op_norm(linalg::spd_inverse(ups)) / cp,
                               linalg::op_norm(s.Dinv[j]) / cp, linalg::op_norm(ups) / g0,
                               linalg::op_norm(s.D[j]) / g0};
      for (int k = 0; k < 4; ++k) {
        norm_worst[k] = std::max(norm_worst[k], ratio[k]);
        if (ratio[k] > 1.0 + 1e-10) ++norm_bad[k];
      }
    }
  }
  const bool ok = chain_bad == 0 && norm_bad[0] + norm_bad[1] + norm_bad[2] + norm_bad[3] == 0;
  std::string detail = std::to_string(checked) + " lags: min eig of C_j^-1 - C_{j-1}^-1 " +
                       fmt("%.2e", worst_eig) + ", max |V'D^-1V - I| " + fmt("%.2e", worst_v) +
                       "; norm inequalities violated (i) " + std::to_string(norm_bad[0]) + " (ii) " +
                       std::to_string(norm_bad[1]) + " (iii) " + std::to_string(norm_bad[2]) +
                       " (iv) " + std::to_string(norm_bad[3]) + ", worst ratios " +
                       fmt("%.3g", norm_worst[0]) + " " + fmt("%.3g", norm_worst[1]) + " " +
                       fmt("%.3g", norm_worst[2]) + " " + fmt("%.3g", norm_worst[3]);
  // scalar AR(1), phi = 0.9, unit innovation variance: |Υ_1| = γ0(1 + φ) > γ0
  const double phi = 0.9, g = 1.0 / (1.0 - phi * phi);
  detail += "; AR(1) phi=0.9: |Ups_1| / |Gamma(0)| = " + fmt("%.2f", (1.0 + phi)) +
            ", |Ups_1^-1| / |C_1^-1| = " + fmt("%.2f", 1.0 / (g * (1.0 - phi)));
  return {ok, detail};
}

struct RecoveryCase {
  SparsePrecision truth;
  ChainOutput a, b;
};

Outcome posterior_recovery() {
  const auto t0 = Clock::now();
  cli::SimulationSettings sim;
  sim.d = 5;
  McmcConfig cfg;
  cfg.n_iter = 20000;
  cfg.n_burn = 10000;
  cfg.n_keep = 5000;
  cfg.p_max = 1;
  cfg.r_init = 1;
  cfg.store_coefficients = false;
  int recovered = 0;
  int pairs = 0, covered = 0;
  std::string rels;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(cli::job_seed(4242, seed));
    const cli::SimTruth truth = cli::make_truth(sim, 300, 0.2, 1, rng);
    const Sample other = simulate_var(truth.params, 300, rng);
    cfg.seed = rng.next_u64();
    const ChainOutput a = run_mcmc(truth.sample, cfg);
    cfg.seed = rng.next_u64();
    const ChainOutput b = run_mcmc(other, cfg);
    const double rel = linalg::rel_frobenius(a.posterior_mean_omega(), truth.precision.omega);
    rels += (rels.empty() ? "" : " ") + fmt("%.3f", rel);
    if (rel <= 0.25) ++recovered;
    const auto rep = cli::edge_diff(a.omega_draws, b.omega_draws, 0.1);
    for (const auto& pr : rep.pairs) {
      ++pairs;
      if (!pr.changed) ++covered;
    }
  }
  const double secs = seconds_since(t0);
  const double coverage = static_cast<double>(covered) / pairs;
  const bool ok = recovered >= 8 && coverage >= 0.9 && secs < 1200.0;
  return {ok, std::to_string(recovered) + "/10 seeds within 0.25 (rel " + rels + "); theta intervals cover 0 for " +
                  std::to_string(covered) + "/" + std::to_string(pairs) + " unchanged pairs (" +
                  fmt("%.1f%%", 100.0 * coverage) + "); " + fmt("%.0f s", secs)};
}

// Shared by the MSE and ROC criteria: one desk-scale simulation study.
struct DeskStudy {
  bool ran = false;
  double seconds = 0.0;
  std::vector<std::string> errors;
  cli::CsvTable summary;
};

DeskStudy& desk_study() {
  static DeskStudy st;
  if (st.ran) return st;
  st.ran = true;
  const auto t0 = Clock::now();
  cli::RunConfig cfg;
  cfg.seed = 2024;
  cfg.simulation.d = 10;
  cfg.simulation.T = {40, 60};
  cfg.simulation.sparsity = {0.15, 0.25};
  cfg.simulation.nei = {5, 10};
  cfg.simulation.replicates = 10;
  cfg.mcmc.n_iter = 10000;
  cfg.mcmc.n_burn = 5000;
  cfg.mcmc.n_keep = 5000;
  cfg.mcmc.p_max = 10;
  cfg.mcmc.r_init = 1;
  const fs::path dir = scratch("desk_study");
  const auto res = cli::run_study(cfg, dir);
  st.errors = res.errors;
  st.summary = cli::read_csv(dir / "sim_summary.csv");
  st.seconds = seconds_since(t0);
  return st;
}

double summary_value(const cli::CsvTable& t, std::size_t row, const std::string& col) {
  return cli::parse_cell(t.rows[row][t.column(col)], col);
}

Outcome mse_direction() {
  const DeskStudy& st = desk_study();
  const auto& t = st.summary;
  bool ok = st.errors.empty() && st.seconds < 7200.0;
  std::string detail;
  for (double sp : {0.15, 0.25}) {
    double prop[2] = {0, 0};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (std::abs(summary_value(t, r, "sparsity") - sp) > 1e-12) continue;
      const int k = summary_value(t, r, "T") == 40 ? 0 : 1;
      prop[k] = summary_value(t, r, "median_mse_proposed");
      const double naive = summary_value(t, r, "median_mse_naive");
      ok = ok && prop[k] < naive;
      detail += t.rows[r][0] + " proposed " + fmt("%.3f", prop[k]) + " naive " + fmt("%.3f", naive) + "; ";
    }
    ok = ok && prop[1] < prop[0];
  }
  detail += std::to_string(st.errors.size()) + " failed replicates; " + fmt("%.0f s", st.seconds);
  return {ok, detail};
}

Outcome roc_sanity() {
  const DeskStudy& st = desk_study();
  const auto& t = st.summary;
  bool ok = !t.rows.empty();
  std::string detail;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double prop = summary_value(t, r, "mean_auc_proposed");
    const double ridge = summary_value(t, r, "mean_auc_ridge_var1");
    ok = ok && prop > ridge && ridge > 0.5;
    detail += t.rows[r][0] + " AUC proposed " + fmt("%.3f", prop) + " ridge " + fmt("%.3f", ridge) +
              (r + 1 < t.rows.size() ? "; " : "");
  }
  return {ok, detail};
}

// Four series in two groups from one VAR(1), written as a panel study.
cli::RunConfig toy_panel(const fs::path& dir) {
  Rng rng(21);
  const auto params = testing::random_params(rng, 4, 1, 1, 0.7, 0.5);
  const Sample s = simulate_var(params, 80, rng);
  std::string csv = "date,x1,x2,x3,x4\n";
  for (int t = 0; t < 80; ++t) {
    char date[16];
    std::snprintf(date, sizeof date, "%04d-%02d-01", 2000 + t / 4, 1 + 3 * (t % 4));
    csv += date;
    for (int j = 0; j < 4; ++j) csv += "," + cli::format_double(s.X(t, j));
    csv += "\n";
  }
  cli::write_text(dir / "panel.csv", csv);
  cli::write_text(dir / "groups.csv", "series,group,tcode\nx1,first,1\nx2,first,1\nx3,second,1\nx4,second,1\n");
  cli::RunConfig cfg;
  cfg.mode = "panel";
  cfg.seed = 5;
  cfg.mcmc.n_iter = 2000;
  cfg.mcmc.n_burn = 1000;
  cfg.mcmc.n_keep = 1000;
  cfg.mcmc.adapt_start = 500;
  cfg.mcmc.prune_iter = 800;
  cfg.mcmc.p_max = 2;
  cfg.mcmc.r_init = 1;
  cfg.panel.csv = dir / "panel.csv";
  cfg.panel.groups = dir / "groups.csv";
  cfg.panel.pre = {"2000-01-01", "2009-10-01"};
  cfg.panel.post = {"2010-01-01", "2019-10-01"};
  return cfg;
}

Outcome edge_difference_arithmetic() {
  MatrixXd ob(2, 2), oa(2, 2);
  ob << 2, 0, 0, 2;
  oa << 2, 1, 1, 2;
  const auto hand = cli::edge_diff({ob}, {oa}, 0.1);
  const bool hand_ok = hand.pairs.size() == 1 && hand.pairs[0].mean == 0.25;

  const fs::path dir = scratch("edge_diff");
  const auto cfg = toy_panel(dir);
  cli::run_study(cfg, dir / "out");
  const cli::CsvTable table = cli::read_csv(dir / "out" / "tableB.csv");
  bool match = !table.rows.empty();
  std::string detail;
  for (const auto& row : table.rows) {
    const auto pairs = cli::read_csv(dir / "out" / ("pairs_" + row[0] + ".csv"));
    std::vector<cli::PairSummary> rows;
    for (const auto& pr : pairs.rows) {
      cli::PairSummary ps;
      ps.mean = cli::parse_cell(pr[pairs.column("theta_mean")], "theta_mean");
      rows.push_back(ps);
    }
    const double tau = cli::parse_cell(row[table.column("tau")], "tau");
    const std::string recomputed = cli::format_double(cli::change_score_of(rows, tau));
    const std::string reported = row[table.column("change_score")];
    match = match && tau == 0.1 && recomputed == reported;
    detail += "; " + row[0] + " score " + reported + " recomputed " + recomputed;
  }
  return {hand_ok && match, "hand theta " + cli::format_double(hand.pairs[0].mean) + detail};
}

Outcome sampler_validity() {
  const auto g = testing::geweke_prior_hierarchy(20240101, 50000, 200000);

  MatrixXd sigma(2, 2);
  sigma << 1.0, 0.6, 0.6, 2.0;
  const MatrixXd prec = sigma.inverse();
  const VectorXd mu = (VectorXd(2) << 1.0, -2.0).finished();
  const auto target = [&](const VectorXd& x) {
    const VectorXd c = x - mu;
    return -0.5 * c.dot(prec * c);
  };
  ProposalSettings s;
  s.adapt_start = 500;
  s.freeze_at = 5000;
  AdaptiveProposal prop(2, 1.0, s);
  Rng rng(31);
  VectorXd x = mu;
  double lt = target(x);
  const int n = 50000, thin = 10;
  std::vector<double> m[2];
  for (int it = 1; it <= s.freeze_at + n * thin; ++it) {
    metropolis_step(prop, x, lt, target, rng, it);
    prop.end_iteration(it);
    if (it > s.freeze_at && (it - s.freeze_at) % thin == 0) {
      m[0].push_back(x(0));
      m[1].push_back(x(1));
    }
  }
  double pmin = 1.0;
  for (int k = 0; k < 2; ++k) {
    const boost::math::normal_distribution<double> law(mu(k), std::sqrt(sigma(k, k)));
    const double ks = testing::ks_statistic(m[k], [&](double v) { return boost::math::cdf(law, v); });
    pmin = std::min(pmin, testing::ks_pvalue(ks, m[k].size()));
  }
  const bool ok = g.passed && pmin > 0.01 && prop.kernel().adaptive;
  return {ok, "Geweke max |z| " + fmt("%.2f", g.max_abs_z) + " vs " + fmt("%.2f", g.threshold) +
                  "; frozen kernel (scale " + fmt("%.2f", prop.scale()) + ") KS min p " +
                  fmt("%.3f", pmin) + " over 50000 draws"};
}

Outcome determinism() {
  const fs::path dir = scratch("determinism");
  auto panel = toy_panel(dir);
  cli::RunConfig sim;
  sim.seed = 8;
  sim.mcmc.n_iter = 1500;
  sim.mcmc.n_burn = 500;
  sim.mcmc.n_keep = 1000;
  sim.mcmc.adapt_start = 500;
  sim.mcmc.prune_iter = 700;
  sim.mcmc.p_max = 3;
  sim.mcmc.r_init = 1;
  sim.simulation.d = 6;
  sim.simulation.T = {40};
  sim.simulation.sparsity = {0.2};
  sim.simulation.nei = {1};
  sim.simulation.replicates = 3;
  int files = 0, differing = 0;
  for (const auto& [label, cfg] : {std::pair{"panel", panel}, std::pair{"simulation", sim}}) {
    cli::run_study(cfg, dir / label / "run1");
    cli::run_study(cfg, dir / label / "run2");
    for (const auto& e : fs::directory_iterator(dir / label / "run1")) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (slurp(e.path()) != slurp(dir / label / "run2" / e.path().filename())) ++differing;
    }
  }
  return {files > 0 && differing == 0,
          std::to_string(files) + " result CSVs compared across two runs, " + std::to_string(differing) +
              " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"oracle_equivalence", oracle_equivalence},
      {"rank_one_fast_path", rank_one_fast_path},
      {"causality", causality},
      {"precision_chain_norms", precision_chain_norms},
      {"posterior_recovery", posterior_recovery},
      {"mse_direction", mse_direction},
      {"roc_sanity", roc_sanity},
      {"edge_difference_arithmetic", edge_difference_arithmetic},
      {"sampler_validity", sampler_validity},
      {"determinism", determinism},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int unexpected = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.name)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool known = kKnownFailures.count(c.name) > 0;
    std::printf("%s %s: %s%s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(),
                !o.pass && known ? " [known failure, see README]" : "");
    std::fflush(stdout);
    if (!o.pass && !known) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
