#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "crvar/chain_io.hpp"
#include "crvar/cli/config.hpp"
#include "crvar/cli/csv.hpp"
#include "crvar/cli/edge_diff.hpp"
#include "crvar/cli/study.hpp"
#include "crvar/likelihood.hpp"
#include "crvar/linalg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crvar;
using namespace crvar::cli;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool threads) {
  app->add_option("--config", c.config, "JSON run configuration");
  app->add_option("--seed", c.seed, "overrides the config seed");
  if (threads) app->add_option("--threads", c.threads, "worker threads");
  app->add_option("--out", c.out, "output directory")->required();
}

RunConfig resolve(const Common& c) {
  RunConfig rc = c.config.empty() ? parse_config(json::object()) : load_config(c.config);
  if (c.seed) rc.seed = *c.seed;
  if (c.threads) rc.threads = *c.threads;
  rc.mcmc.seed = rc.seed;
  rc.validate();
  return rc;
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Sample read_sample(const fs::path& path, const std::string& date_column, bool center) {
  const CsvTable t = read_csv(path);
  const int dc = date_column.empty() ? -1 : t.column(date_column);
  if (!date_column.empty() && dc < 0) throw InputError(path.string() + ": no column " + date_column);
  Sample s;
  const int d = static_cast<int>(t.header.size()) - (dc >= 0 ? 1 : 0);
  s.X.resize(static_cast<Eigen::Index>(t.rows.size()), d);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    int k = 0;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (static_cast<int>(c) == dc) continue;
      const double v = parse_cell(t.rows[r][c], path.string() + " row " + std::to_string(r + 2));
      if (std::isnan(v)) throw InputError(path.string() + ": missing value on row " + std::to_string(r + 2));
      s.X(static_cast<Eigen::Index>(r), k++) = v;
    }
  }
  if (center) s.X.rowwise() -= s.X.colwise().mean();
  return s;
}

int cmd_simulate(const Common& c, std::optional<int> T, std::optional<double> sparsity) {
  const RunConfig rc = resolve(c);
  const SimulationSettings& sim = rc.simulation;
  const int t = T.value_or(sim.T.front());
  const double s = sparsity.value_or(sim.sparsity.front());
  int nei = sim.nei.front();
  for (std::size_t k = 0; k < sim.sparsity.size(); ++k) {
    if (sim.sparsity[k] == s) nei = sim.nei[k];
  }
  Rng rng(rc.seed);
  const SimTruth st = make_truth(sim, t, s, nei, rng);
  const fs::path out(c.out);
  write_matrix_csv(out / "truth.csv", st.precision.omega);
  write_matrix_csv(out / "adjacency.csv", st.precision.adjacency.cast<double>());
  write_matrix_csv(out / "sample.csv", st.sample.X);
  json params{
      {"seed", rc.seed},
      {"T", t},
      {"sparsity_target", s},
      {"nei", st.precision.nei},
      {"q", st.precision.q},
      {"achieved_sparsity", st.precision.achieved},
      {"simulation", to_json(rc)["simulation"]},
      {"E1", matrix_json(st.params.E1)},
      {"f", matrix_json(st.params.f)},
  };
  for (int j = 0; j < st.params.order(); ++j) {
    params["L"].push_back(matrix_json(st.params.L[j]));
    params["K"].push_back(matrix_json(st.params.K[j]));
  }
  write_text(out / "params.json", params.dump(2) + "\n");
  std::cout << "wrote truth.csv, adjacency.csv, sample.csv, params.json to " << out << "\n";
  return 0;
}

int cmd_fit(const Common& c, const std::string& data, const std::string& date_column, bool center) {
  const RunConfig rc = resolve(c);
  const Sample s = read_sample(data, date_column, center);
  const ChainOutput out = run_mcmc(s, rc.mcmc);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_chain_binary((dir / "chain.bin").string(), out);
  write_chain_csv((dir / "draws.csv").string(), out);
  write_matrix_csv(dir / "omega_mean.csv", out.posterior_mean_omega());
  json acc = json::array();
  for (const auto& b : out.acceptance) {
    acc.push_back({{"block", b.name},
                   {"accepted", b.accepted},
                   {"proposed", b.proposed},
                   {"recent", b.recent}});
  }
  json fit{
      {"T", s.T()},
      {"d", s.dim()},
      {"seed", rc.mcmc.seed},
      {"mcmc", to_json(rc.mcmc)},
      {"initial_order", out.initial_order},
      {"final_order", out.final_order},
      {"final_ranks", out.final_ranks},
      {"lambda_max", out.lambda_max},
      {"conditioning_failures", out.conditioning_failures},
      {"acceptance", acc},
      {"warnings", out.warnings},
  };
  write_text(dir / "fit.json", fit.dump(2) + "\n");
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "kept " << out.omega_draws.size() << " draws, order " << out.final_order << "\n";
  return 0;
}

int cmd_diff(const std::string& pre, const std::string& post, double tau, const std::string& group,
             const std::string& out) {
  const StoredDraws a = read_chain_binary(pre);
  const StoredDraws b = read_chain_binary(post);
  const EdgeDiffReport rep = edge_diff(a.omega, b.omega, tau, group);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::vector<std::string> names;
  for (int i = 0; i < rep.d; ++i) names.push_back("v" + std::to_string(i + 1));
  const fs::path dir(out);
  write_text(dir / "pairs.csv", pairs_csv(rep, names, false));
  write_text(dir / "change_graph.csv", pairs_csv(rep, names, true));
  write_text(dir / "summary.csv",
             "group,d,pairs,changed,change_proportion,tau,exceed,change_score,draws\n" +
                 csv_escape(group) + "," + std::to_string(rep.d) + "," +
                 std::to_string(rep.pairs.size()) + "," + std::to_string(rep.changed_count()) + "," +
                 format_double(rep.change_proportion) + "," + format_double(tau) + "," +
                 std::to_string(rep.exceed_count()) + "," + format_double(rep.change_score_tau) +
                 "," + std::to_string(rep.draws) + "\n");
  std::cout << rep.changed_count() << " of " << rep.pairs.size() << " pairs changed\n";
  return 0;
}

int cmd_study(const Common& c) {
  const RunConfig rc = resolve(c);
  const StudyResult res = run_study(rc, c.out);
  for (const auto& e : res.errors) std::cerr << "failed: " << e << "\n";
  std::cout << "wrote " << res.files.size() << " files to " << c.out << "\n";
  return 0;
}

int cmd_loglik_check(int cases, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0, worst_r1 = 0.0;
  int failures = 0;
  for (int k = 0; k < cases; ++k) {
    const int d = 2 + static_cast<int>(rng.uniform() * 7);
    const int p = 1 + static_cast<int>(rng.uniform() * 3);
    const int r = 1 + static_cast<int>(rng.uniform() * 2);
    const int T = 5 + static_cast<int>(rng.uniform() * 46);
    ReducedRankVarParams q = ReducedRankVarParams::zeros(d, p, std::min(r, d));
    for (int i = 1; i < d; ++i) {
      for (int j = 0; j < i; ++j) q.E1(i, j) = 0.5 * rng.normal();
    }
    for (int i = 0; i < d; ++i) q.f(i) = std::exp(0.5 * rng.normal());
    for (int j = 0; j < p; ++j) {
      const double sd = 1.0 / std::sqrt(j + 1.0);
      for (Eigen::Index i = 0; i < q.L[j].size(); ++i) q.L[j].data()[i] = sd * rng.normal();
      for (Eigen::Index i = 0; i < q.K[j].size(); ++i) q.K[j].data()[i] = sd * rng.normal();
    }
    Sample s;
    s.X.resize(T, d);
    for (int t = 0; t < T; ++t) s.X.row(t) = rng.normal_vector(d).transpose();
    try {
      const double oracle = loglik_dense_oracle(q, s);
      const double rec = loglik_recursive(q, s);
      const double err = std::abs(rec - oracle) / (1.0 + std::abs(oracle));
      worst = std::max(worst, err);
      if (!(err <= 1e-8)) ++failures;
      if (q.max_rank() == 1) {
        const double r1 = loglik_rank_one(q, s);
        const double e1 = std::abs(r1 - rec) / (1.0 + std::abs(rec));
        worst_r1 = std::max(worst_r1, e1);
        if (!(e1 <= 1e-10)) ++failures;
      }
    } catch (const Error& e) {
      std::cerr << "case " << k << " (d=" << d << " p=" << p << " r=" << r << " T=" << T
                << "): " << e.what() << "\n";
      ++failures;
    }
  }
  std::printf("cases %d  max rel err recursive vs dense %.3e  rank-one vs recursive %.3e  failures %d\n",
              cases, worst, worst_r1, failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crvar: Bayesian reduced-rank causal VAR precision estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CRVAR_VERSION);

  Common sim_c, fit_c, study_c;
  std::optional<int> sim_T;
  std::optional<double> sim_sparsity;
  auto* simulate = app.add_subcommand("simulate", "generate a ground-truth bundle");
  add_common(simulate, sim_c, false);
  simulate->add_option("--T", sim_T, "sample length (default: first simulation.T)");
  simulate->add_option("--sparsity", sim_sparsity, "target off-diagonal density");

  std::string data, date_column;
  bool center = false;
  auto* fit = app.add_subcommand("fit", "run the sampler on one CSV sample");
  add_common(fit, fit_c, false);
  fit->add_option("--data", data, "CSV with a header row, one column per series")->required();
  fit->add_option("--date-column", date_column, "column to ignore");
  fit->add_flag("--center", center, "subtract column means");

  std::string pre, post, group = "all", diff_out;
  double tau = 0.1;
  auto* diff = app.add_subcommand("diff", "edge differences between two stored chains");
  diff->add_option("--pre", pre, "chain.bin before the event")->required();
  diff->add_option("--post", post, "chain.bin after the event")->required();
  diff->add_option("--tau", tau, "threshold for the point-estimate change score");
  diff->add_option("--group", group, "label written to summary.csv");
  diff->add_option("--out", diff_out, "output directory")->required();

  auto* study = app.add_subcommand("study", "panel or simulation study from a config file");
  add_common(study, study_c, true);

  int cases = 200;
  std::uint64_t check_seed = 1;
  auto* check = app.add_subcommand("loglik-check", "recursive vs dense likelihood on random cases");
  check->add_option("--cases", cases, "number of random cases");
  check->add_option("--seed", check_seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(sim_c, sim_T, sim_sparsity);
    if (*fit) return cmd_fit(fit_c, data, date_column, center);
    if (*diff) return cmd_diff(pre, post, tau, group, diff_out);
    if (*study) return cmd_study(study_c);
    if (*check) return cmd_loglik_check(cases, check_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
