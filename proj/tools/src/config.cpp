#include "crvar/cli/config.hpp"

#include <fstream>
#include <set>

#include "crvar/cli/csv.hpp"

namespace crvar::cli {

using nlohmann::json;

namespace {

// Reads optional keys from one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw InputError("config: '" + name_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InputError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw InputError("config: unknown key " + name_ + "." + it.key());
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_window(const json* j, DateWindow& w, const std::string& name) {
  if (!j) return;
  Section s(*j, name);
  s.get("start", w.start);
  s.get("end", w.end);
  s.finish();
}

void read_prior(const json* j, PriorConstants& p) {
  if (!j) return;
  Section s(*j, "mcmc.prior");
  s.get("c1", p.c1);
  s.get("nu1", p.nu1);
  s.get("kappa1", p.kappa1);
  s.get("kappa2", p.kappa2);
  s.get("xi_prior_sd", p.xi_prior_sd);
  s.get("xi_step", p.xi_step);
  s.get("xi_steps", p.xi_steps);
  s.finish();
}

void read_mcmc(const json* j, McmcConfig& c) {
  if (!j) return;
  Section s(*j, "mcmc");
  s.get("n_iter", c.n_iter);
  s.get("n_burn", c.n_burn);
  s.get("n_keep", c.n_keep);
  s.get("adapt_start", c.adapt_start);
  s.get("adapt_every", c.adapt_every);
  s.get("accept_lo", c.accept_lo);
  s.get("accept_hi", c.accept_hi);
  s.get("prune_iter", c.prune_iter);
  s.get("prune_threshold", c.prune_threshold);
  s.get("p_max", c.p_max);
  s.get("r_init", c.r_init);
  s.get("s_min", c.s_min);
  s.get("s_max", c.s_max);
  s.get("s_div", c.s_div);
  s.get("rm_c", c.rm_c);
  s.get("rw_base", c.rw_base);
  s.get("freeze_adapt_at_burn", c.freeze_adapt_at_burn);
  s.get("store_coefficients", c.store_coefficients);
  std::string warm = c.warm_start == WarmStart::Glasso ? "glasso" : "ridge";
  s.get("warm_start", warm);
  if (warm == "glasso") {
    c.warm_start = WarmStart::Glasso;
  } else if (warm == "ridge") {
    c.warm_start = WarmStart::Ridge;
  } else {
    throw InputError("config: mcmc.warm_start must be \"glasso\" or \"ridge\"");
  }
  s.get("glasso_rho_factor", c.glasso_rho_factor);
  s.get("ridge_factor", c.ridge_factor);
  s.get("lambda_max_factor", c.lambda_max_factor);
  s.get("lambda_init_fraction", c.lambda_init_fraction);
  s.get("lambda_hold", c.lambda_hold);
  read_prior(s.sub("prior"), c.prior);
  s.finish();
}

void read_precision(const json* j, PrecisionSpec& p) {
  if (!j) return;
  Section s(*j, "simulation.precision");
  s.get("blocks", p.blocks);
  s.get("rewire", p.rewire);
  s.get("gwishart_scale", p.gwishart_scale);
  s.get("entry_floor", p.entry_floor);
  s.get("projection_iters", p.projection_iters);
  s.get("band", p.band);
  s.get("max_bisection", p.max_bisection);
  s.finish();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void RunConfig::validate() const {
  if (mode != "panel" && mode != "simulation") {
    throw InputError("config: mode must be \"panel\" or \"simulation\"");
  }
  if (threads < 1) throw InputError("config: threads must be >= 1");
  mcmc.validate();
  if (mode == "panel") {
    if (panel.csv.empty() || panel.groups.empty()) {
      throw InputError("config: panel.csv and panel.groups are required in panel mode");
    }
    if (!(panel.tau >= 0.0)) throw InputError("config: panel.tau must be >= 0");
  } else {
    const auto& s = simulation;
    if (s.d < 2 || s.replicates < 1 || s.T.empty() || s.sparsity.empty()) {
      throw InputError("config: simulation needs d >= 2, replicates >= 1 and non-empty T, sparsity");
    }
    if (s.nei.size() != s.sparsity.size()) {
      throw InputError("config: simulation.nei must pair with simulation.sparsity");
    }
    for (int t : s.T) {
      if (t < 2) throw InputError("config: simulation.T entries must be >= 2");
    }
    if (s.truth_order < 1 || s.truth_rank < 1 || s.truth_rank > s.d) {
      throw InputError("config: invalid truth_order / truth_rank");
    }
    if (!(s.loading_sd >= 0.0) || !(s.baseline_ridge >= 0.0)) {
      throw InputError("config: loading_sd and baseline_ridge must be >= 0");
    }
  }
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  Section top(j, "config");
  top.get("mode", c.mode);
  top.get("seed", c.seed);
  top.get("threads", c.threads);
  read_mcmc(top.sub("mcmc"), c.mcmc);
  if (const json* p = top.sub("panel")) {
    Section s(*p, "panel");
    std::string csv, groups;
    s.get("csv", csv);
    s.get("groups", groups);
    c.panel.csv = resolve(base_dir, csv);
    c.panel.groups = resolve(base_dir, groups);
    s.get("date_column", c.panel.date_column);
    read_window(s.sub("pre"), c.panel.pre, "panel.pre");
    read_window(s.sub("post"), c.panel.post, "panel.post");
    s.get("match_length", c.panel.match_length);
    s.get("tau", c.panel.tau);
    s.finish();
  }
  if (const json* p = top.sub("simulation")) {
    Section s(*p, "simulation");
    auto& sim = c.simulation;
    s.get("d", sim.d);
    s.get("T", sim.T);
    s.get("sparsity", sim.sparsity);
    s.get("nei", sim.nei);
    s.get("replicates", sim.replicates);
    s.get("loading_sd", sim.loading_sd);
    s.get("truth_order", sim.truth_order);
    s.get("truth_rank", sim.truth_rank);
    s.get("baseline_ridge", sim.baseline_ridge);
    read_precision(s.sub("precision"), sim.precision);
    s.finish();
  }
  top.finish();
  c.mcmc.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json to_json(const McmcConfig& c) {
  return json{
      {"n_iter", c.n_iter},
      {"n_burn", c.n_burn},
      {"n_keep", c.n_keep},
      {"adapt_start", c.adapt_start},
      {"adapt_every", c.adapt_every},
      {"accept_lo", c.accept_lo},
      {"accept_hi", c.accept_hi},
      {"prune_iter", c.prune_iter},
      {"prune_threshold", c.prune_threshold},
      {"p_max", c.p_max},
      {"r_init", c.r_init},
      {"s_min", c.s_min},
      {"s_max", c.s_max},
      {"s_div", c.s_div},
      {"rm_c", c.rm_c},
      {"rw_base", c.rw_base},
      {"freeze_adapt_at_burn", c.freeze_adapt_at_burn},
      {"store_coefficients", c.store_coefficients},
      {"warm_start", c.warm_start == WarmStart::Glasso ? "glasso" : "ridge"},
      {"glasso_rho_factor", c.glasso_rho_factor},
      {"ridge_factor", c.ridge_factor},
      {"lambda_max_factor", c.lambda_max_factor},
      {"lambda_init_fraction", c.lambda_init_fraction},
      {"lambda_hold", c.lambda_hold},
      {"prior",
       {{"c1", c.prior.c1},
        {"nu1", c.prior.nu1},
        {"kappa1", c.prior.kappa1},
        {"kappa2", c.prior.kappa2},
        {"xi_prior_sd", c.prior.xi_prior_sd},
        {"xi_step", c.prior.xi_step},
        {"xi_steps", c.prior.xi_steps}}},
  };
}

json to_json(const RunConfig& c) {
  const auto& s = c.simulation;
  const auto& pr = s.precision;
  return json{
      {"mode", c.mode},
      {"seed", c.seed},
      {"threads", c.threads},
      {"mcmc", to_json(c.mcmc)},
      {"panel",
       {{"csv", c.panel.csv.string()},
        {"groups", c.panel.groups.string()},
        {"date_column", c.panel.date_column},
        {"pre", {{"start", c.panel.pre.start}, {"end", c.panel.pre.end}}},
        {"post", {{"start", c.panel.post.start}, {"end", c.panel.post.end}}},
        {"match_length", c.panel.match_length},
        {"tau", c.panel.tau}}},
      {"simulation",
       {{"d", s.d},
        {"T", s.T},
        {"sparsity", s.sparsity},
        {"nei", s.nei},
        {"replicates", s.replicates},
        {"loading_sd", s.loading_sd},
        {"truth_order", s.truth_order},
        {"truth_rank", s.truth_rank},
        {"baseline_ridge", s.baseline_ridge},
        {"precision",
         {{"blocks", pr.blocks},
          {"rewire", pr.rewire},
          {"gwishart_scale", pr.gwishart_scale},
          {"entry_floor", pr.entry_floor},
          {"projection_iters", pr.projection_iters},
          {"band", pr.band},
          {"max_bisection", pr.max_bisection}}}}},
  };
}

}  // namespace crvar::cli
