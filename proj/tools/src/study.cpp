#include "crvar/cli/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "crvar/cli/csv.hpp"
#include "crvar/cli/ingest.hpp"

namespace crvar::cli {

using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double median(std::vector<double> x) {
  if (x.empty()) return std::nan("");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

double mean(const std::vector<double>& x) {
  if (x.empty()) return std::nan("");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + std::to_string(v[i]);
  return s;
}

std::string percent_label(double x) { return std::to_string(static_cast<int>(std::lround(100.0 * x))); }

struct ChainJob {
  std::string label;
  std::uint64_t seed = 0;
  std::optional<ChainOutput> out;
  std::string error;
};

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text,
                StudyResult& res) {
  write_text(dir / name, text);
  res.files.push_back(name);
}

void write_manifest(const RunConfig& config, const std::filesystem::path& dir, const json& chains,
                    StudyResult& res) {
  res.files.push_back("manifest.json");
  json m{
      {"tool", "crvar study"},
      {"version", CRVAR_VERSION},
      {"config", to_json(config)},
      {"chains", chains},
      {"files", res.files},
      {"errors", res.errors},
      {"created", utc_now()},
  };
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string errors_log(const StudyResult& res) {
  std::string s;
  for (const auto& e : res.errors) s += e + "\n";
  return s;
}

StudyResult run_panel(const RunConfig& config, const std::filesystem::path& dir) {
  StudyResult res;
  PanelSpec spec;
  spec.csv_path = config.panel.csv;
  spec.date_column = config.panel.date_column;
  spec.series = read_group_map(config.panel.groups);
  spec.pre = config.panel.pre;
  spec.post = config.panel.post;
  spec.match_length = config.panel.match_length;
  spec.min_length = config.mcmc.p_max + 2;
  const std::vector<GroupData> groups = ingest(spec);

  std::vector<ChainJob> jobs(2 * groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int w = 0; w < 2; ++w) {
      ChainJob& job = jobs[2 * g + w];
      job.label = groups[g].group + (w == 0 ? "/pre" : "/post");
      job.seed = job_seed(config.seed, 2 * g + w);
    }
  }
  parallel_for(static_cast<int>(jobs.size()), config.threads, [&](int k) {
    const GroupData& gd = groups[k / 2];
    ChainJob& job = jobs[k];
    if (!gd.error.empty()) return;
    try {
      McmcConfig mc = config.mcmc;
      mc.seed = job.seed;
      mc.store_coefficients = false;
      job.out = run_mcmc(k % 2 == 0 ? gd.pre : gd.post, mc);
    } catch (const std::exception& e) {
      job.error = e.what();
    }
  });

  std::string table_a = "group,series,pairs,changed,change_proportion,draws\n";
  std::string table_b = "group,series,pairs,tau,exceed,change_score\n";
  std::string chains_csv =
      "group,window,T,d,seed,initial_order,final_order,ranks,lambda_max,conditioning_failures,warnings\n";
  json chain_list = json::array();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const GroupData& gd = groups[g];
    const std::string label = file_label(gd.group);
    for (int w = 0; w < 2; ++w) {
      const ChainJob& job = jobs[2 * g + w];
      chain_list.push_back({{"chain", job.label}, {"seed", job.seed}});
      if (!job.out) continue;
      const ChainOutput& o = *job.out;
      const Sample& s = w == 0 ? gd.pre : gd.post;
      chains_csv += csv_escape(gd.group) + "," + (w == 0 ? "pre" : "post") + "," +
                    std::to_string(s.T()) + "," + std::to_string(s.dim()) + "," +
                    std::to_string(job.seed) + "," + std::to_string(o.initial_order) + "," +
                    std::to_string(o.final_order) + "," + join_ints(o.final_ranks) + "," +
                    format_double(o.lambda_max) + "," + std::to_string(o.conditioning_failures) +
                    "," + std::to_string(o.warnings.size()) + "\n";
    }
    std::string err = gd.error;
    for (int w = 0; w < 2 && err.empty(); ++w) {
      if (!jobs[2 * g + w].error.empty()) err = jobs[2 * g + w].label + ": " + jobs[2 * g + w].error;
    }
    if (!err.empty()) {
      res.errors.push_back(gd.group + ": " + err);
      continue;
    }
    try {
      const EdgeDiffReport rep = edge_diff(jobs[2 * g].out->omega_draws,
                                           jobs[2 * g + 1].out->omega_draws, config.panel.tau,
                                           gd.group);
      write_file(dir, "pairs_" + label + ".csv", pairs_csv(rep, gd.series, false), res);
      write_file(dir, "change_graph_" + label + ".csv", pairs_csv(rep, gd.series, true), res);
      const std::string head = csv_escape(gd.group) + "," + std::to_string(rep.d) + "," +
                               std::to_string(rep.pairs.size()) + ",";
      table_a += head + std::to_string(rep.changed_count()) + "," +
                 format_double(rep.change_proportion) + "," + std::to_string(rep.draws) + "\n";
      table_b += head + format_double(rep.tau) + "," + std::to_string(rep.exceed_count()) + "," +
                 format_double(rep.change_score_tau) + "\n";
    } catch (const std::exception& e) {
      res.errors.push_back(gd.group + ": " + e.what());
    }
  }
  write_file(dir, "tableA.csv", table_a, res);
  write_file(dir, "tableB.csv", table_b, res);
  write_file(dir, "chains.csv", chains_csv, res);
  write_file(dir, "errors.log", errors_log(res), res);
  write_manifest(config, dir, chain_list, res);
  return res;
}

struct Replicate {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double achieved = 0.0;
  double mse[3] = {0, 0, 0};  // proposed, naive, ridge VAR(1)
  RocCurve roc[3];
};

const char* const kMethods[3] = {"proposed", "naive", "ridge_var1"};

Replicate run_replicate(const RunConfig& config, int T, double sparsity, int nei,
                        std::uint64_t seed) {
  const SimulationSettings& sim = config.simulation;
  Replicate rep;
  rep.seed = seed;
  Rng rng(seed);
  const SimTruth st = make_truth(sim, T, sparsity, nei, rng);
  const SparsePrecision& truth = st.precision;
  const Sample& sample = st.sample;
  rep.achieved = truth.achieved;

  McmcConfig mc = config.mcmc;
  mc.seed = rng.next_u64();
  mc.store_coefficients = false;
  const ChainOutput chain = run_mcmc(sample, mc);
  const MatrixXd est[3] = {chain.posterior_mean_omega(), naive_precision(sample),
                           fit_var1_baseline(sample, sim.baseline_ridge).Omega};
  for (int m = 0; m < 3; ++m) {
    rep.mse[m] = mse_precision(est[m], truth.omega);
    rep.roc[m] = roc_points(est[m].cwiseAbs(), truth.adjacency);
  }
  rep.ok = true;
  return rep;
}

StudyResult run_simulation(const RunConfig& config, const std::filesystem::path& dir) {
  StudyResult res;
  const SimulationSettings& sim = config.simulation;
  struct Case {
    std::string label;
    int T;
    std::size_t s;
  };
  std::vector<Case> cases;
  for (int T : sim.T) {
    for (std::size_t s = 0; s < sim.sparsity.size(); ++s) {
      cases.push_back({"d" + std::to_string(sim.d) + "_t" + std::to_string(T) + "_s" +
                           percent_label(sim.sparsity[s]),
                       T, s});
    }
  }
  const int R = sim.replicates;
  std::vector<Replicate> reps(cases.size() * R);
  for (std::size_t c = 0; c < cases.size(); ++c) {
    for (int r = 0; r < R; ++r) reps[c * R + r].seed = job_seed(config.seed, c * 100000 + r);
  }
  parallel_for(static_cast<int>(reps.size()), config.threads, [&](int k) {
    const Case& cs = cases[k / R];
    try {
      reps[k] = run_replicate(config, cs.T, sim.sparsity[cs.s], sim.nei[cs.s], reps[k].seed);
    } catch (const std::exception& e) {
      reps[k].error = e.what();
    }
  });

  std::string summary =
      "case,d,T,sparsity,replicates,failed,median_mse_proposed,median_mse_naive,"
      "median_mse_ridge_var1,mean_auc_proposed,mean_auc_naive,mean_auc_ridge_var1\n";
  json chain_list = json::array();
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Case& cs = cases[c];
    std::string mse_csv =
        "replicate,seed,achieved_sparsity,mse_proposed,mse_naive,mse_ridge_var1,auc_proposed,"
        "auc_naive,auc_ridge_var1\n";
    std::string roc_csv = "method,replicate,fpr,tpr,threshold\n";
    std::vector<double> mse[3], auc[3];
    int failed = 0;
    for (int r = 0; r < R; ++r) {
      const Replicate& rp = reps[c * R + r];
      chain_list.push_back({{"chain", cs.label + "/" + std::to_string(r + 1)}, {"seed", rp.seed}});
      if (!rp.ok) {
        ++failed;
        res.errors.push_back(cs.label + " replicate " + std::to_string(r + 1) + ": " + rp.error);
        continue;
      }
      mse_csv += std::to_string(r + 1) + "," + std::to_string(rp.seed) + "," + format_double(rp.achieved);
      for (int m = 0; m < 3; ++m) mse_csv += "," + format_double(rp.mse[m]);
      for (int m = 0; m < 3; ++m) mse_csv += "," + format_double(rp.roc[m].auc);
      mse_csv += "\n";
      for (int m = 0; m < 3; ++m) {
        mse[m].push_back(rp.mse[m]);
        auc[m].push_back(rp.roc[m].auc);
        const RocCurve& roc = rp.roc[m];
        for (std::size_t k = 0; k < roc.fpr.size(); ++k) {
          roc_csv += std::string(kMethods[m]) + "," + std::to_string(r + 1) + "," +
                     format_double(roc.fpr[k]) + "," + format_double(roc.tpr[k]) + "," +
                     (std::isinf(roc.threshold[k]) ? std::string("Inf") : format_double(roc.threshold[k])) +
                     "\n";
        }
      }
    }
    write_file(dir, "mse_" + cs.label + ".csv", mse_csv, res);
    write_file(dir, "roc_" + cs.label + ".csv", roc_csv, res);
    summary += cs.label + "," + std::to_string(sim.d) + "," + std::to_string(cs.T) + "," +
               format_double(sim.sparsity[cs.s]) + "," + std::to_string(R) + "," + std::to_string(failed);
    for (int m = 0; m < 3; ++m) summary += "," + format_double(median(mse[m]));
    for (int m = 0; m < 3; ++m) summary += "," + format_double(mean(auc[m]));
    summary += "\n";
  }
  write_file(dir, "sim_summary.csv", summary, res);
  write_file(dir, "errors.log", errors_log(res), res);
  write_manifest(config, dir, chain_list, res);
  return res;
}

}  // namespace

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

SimTruth make_truth(const SimulationSettings& sim, int T, double sparsity, int nei, Rng& rng) {
  SimTruth st;
  PrecisionSpec ps = sim.precision;
  ps.d = sim.d;
  ps.sparsity_target = sparsity;
  ps.nei = nei;
  st.precision = gen_sparse_precision(ps, rng);
  st.params = params_from_precision(st.precision.omega, sim.truth_order, sim.truth_rank);
  for (auto& L : st.params.L) {
    for (Eigen::Index i = 0; i < L.size(); ++i) L.data()[i] = sim.loading_sd * rng.normal();
  }
  for (auto& K : st.params.K) {
    for (Eigen::Index i = 0; i < K.size(); ++i) K.data()[i] = sim.loading_sd * rng.normal();
  }
  st.sample = simulate_var(st.params, T, rng);
  return st;
}

std::uint64_t job_seed(std::uint64_t seed, std::uint64_t stream) {
  return Rng::derive(seed, stream).next_u64();
}

std::string pairs_csv(const EdgeDiffReport& rep, const std::vector<std::string>& series,
                      bool changed_only) {
  std::string out = "i,j,series_i,series_j,theta_mean,theta_lo,theta_hi,changed\n";
  for (const PairSummary& p : rep.pairs) {
    if (changed_only && !p.changed) continue;
    const std::string si = p.i < static_cast<int>(series.size()) ? series[p.i] : "";
    const std::string sj = p.j < static_cast<int>(series.size()) ? series[p.j] : "";
    out += std::to_string(p.i + 1) + "," + std::to_string(p.j + 1) + "," + csv_escape(si) + "," +
           csv_escape(sj) + "," + format_double(p.mean) + "," + format_double(p.lo) + "," +
           format_double(p.hi) + "," + (p.changed ? "1" : "0") + "\n";
  }
  return out;
}

StudyResult run_study(const RunConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  return config.mode == "panel" ? run_panel(config, out_dir) : run_simulation(config, out_dir);
}

}  // namespace crvar::cli
