#pragma once

// Run configuration: one JSON file with optional sections "mcmc", "panel"
// and "simulation". Every key is optional; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "crvar/cli/ingest.hpp"
#include "crvar/sampler.hpp"
#include "crvar/simgen.hpp"

namespace crvar::cli {

struct PanelSettings {
  std::filesystem::path csv;
  std::filesystem::path groups;  ///< series,group[,tcode] mapping file
  std::string date_column;
  DateWindow pre{"1997-04-01", "2007-10-01"};
  DateWindow post{"2009-07-01", "2020-01-01"};
  bool match_length = true;
  double tau = 0.1;
};

struct SimulationSettings {
  int d = 10;
  std::vector<int> T{40, 60};
  std::vector<double> sparsity{0.15, 0.25};
  std::vector<int> nei{5, 10};  ///< paired with sparsity
  int replicates = 10;
  double loading_sd = 2.5;  ///< truth L_1, K_1 entries ~ N(0, sd²)
  int truth_order = 1;
  int truth_rank = 1;
  double baseline_ridge = 0.1;
  PrecisionSpec precision;  ///< d, sparsity_target and nei are overridden per case
};

struct RunConfig {
  std::string mode = "simulation";  ///< "panel" or "simulation"
  std::uint64_t seed = 1;
  int threads = 1;
  McmcConfig mcmc;
  PanelSettings panel;
  SimulationSettings simulation;

  void validate() const;
};

/// Relative paths inside "panel" resolve against base_dir.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);
nlohmann::json to_json(const McmcConfig& c);

}  // namespace crvar::cli
