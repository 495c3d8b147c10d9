#pragma once

// Study driver. Panel mode fits every group before and after the event and
// summarizes edge differences; simulation mode runs replicated synthetic
// fits against the naive and ridge VAR(1) baselines.
//
// Panel mode writes
//   tableA.csv              group,series,pairs,changed,change_proportion,draws
//   tableB.csv              group,series,pairs,tau,exceed,change_score
//   pairs_<group>.csv       i,j,series_i,series_j,theta_mean,theta_lo,theta_hi,changed
//   change_graph_<group>.csv  the changed rows of pairs_<group>.csv
//   chains.csv              one diagnostic row per fitted chain
// Simulation mode writes
//   mse_<case>.csv          replicate,seed,achieved_sparsity,mse_proposed,mse_naive,
//                           mse_ridge_var1,auc_proposed,auc_naive,auc_ridge_var1
//   roc_<case>.csv          method,replicate,fpr,tpr,threshold
//   sim_summary.csv         one row per case with medians and mean AUCs
// Both modes write errors.log (one line per failed group or replicate) and
// manifest.json (resolved config, chain seeds, file list, creation time).

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "crvar/cli/config.hpp"
#include "crvar/cli/edge_diff.hpp"

namespace crvar::cli {

struct StudyResult {
  std::vector<std::string> files;   ///< written, relative to the output directory
  std::vector<std::string> errors;  ///< "label: message"
};

struct SimTruth {
  SparsePrecision precision;
  ReducedRankVarParams params;
  Sample sample;
};

/// Sparse precision for the case, (E1, f) from its modified Cholesky factor,
/// L_j and K_j entries ~ N(0, loading_sd²), then T simulated rows.
SimTruth make_truth(const SimulationSettings& sim, int T, double sparsity, int nei, Rng& rng);

/// Runs fn(0..n-1) on up to `threads` workers; results must be stored by index.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

/// Seed of chain/job `stream` under the study seed.
std::uint64_t job_seed(std::uint64_t seed, std::uint64_t stream);

/// Per-pair rows for one group in the fixed column order.
std::string pairs_csv(const EdgeDiffReport& rep, const std::vector<std::string>& series,
                      bool changed_only);

StudyResult run_study(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace crvar::cli
