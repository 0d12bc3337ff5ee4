// Acceptance gate: each criterion prints exactly one [PASS]/[FAIL] line.
// Run `acceptance` for all criteria or `acceptance <n>` for one.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "scbench/baselines.hpp"
#include "scbench/collection.hpp"
#include "scbench/dataset.hpp"
#include "scbench/env.hpp"
#include "scbench/errors.hpp"
#include "scbench/evaluator.hpp"
#include "scbench/gmrf.hpp"
#include "scbench/pipeline.hpp"
#include "scbench/rng.hpp"
#include "scbench/split.hpp"

using namespace scbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void gate(bool cond, const std::string& why) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += why;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

EnvConfig demo_env_config(std::uint64_t seed, TreatmentType type) {
  EnvConfig cfg;
  cfg.treatment = "a";
  cfg.outcome = "y";
  cfg.covariate_groups = {{"conf", {"conf"}}, {"mid", {"x2", "x3"}}, {"noise", {"noise"}}};
  cfg.treatment_type = type;
  cfg.seed = seed;
  return cfg;
}

SpaceDataset direct_dataset(SpatialGraph g, std::vector<std::pair<std::string, NodeField>> covs,
                            NodeField a, TreatmentType type, NodeField y,
                            std::vector<NodeField> cfs = {}) {
  SpaceDataset ds;
  ds.graph = std::move(g);
  ds.node_ids = ds.graph.node_ids;
  for (auto& [name, col] : covs) ds.observed.add_col(name, ColumnRole::covariate, std::move(col));
  ds.treatment_type = type;
  ds.grid = make_treatment_grid(a, type, type == TreatmentType::binary ? 2 : 100);
  if (type == TreatmentType::binary)
    for (double& v : a) v = (v == ds.grid.binary_levels[0]) ? 0.0 : 1.0;
  ds.treatment = std::move(a);
  ds.synthetic_outcome = std::move(y);
  ds.sigma_y = std_pop(ds.synthetic_outcome);
  if (cfs.empty()) cfs.assign(ds.grid.values.size(), NodeField(ds.graph.n(), 0.0));
  ds.counterfactuals = std::move(cfs);
  ds.masked_group_id = "Gaccept";
  return ds;
}

NodeField equilibrium(const SpatialGraph& g, double rho, const NodeField& rhs) {
  NodeField y(rhs.size(), 0.0);
  for (int it = 0; it < 400; ++it) {
    NodeField wy = lag_field(g, y);
    double delta = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double next = rhs[i] + rho * wy[i];
      delta = std::max(delta, std::fabs(next - y[i]));
      y[i] = next;
    }
    if (delta < 1e-13) break;
  }
  return y;
}

// ---- criterion 1: sampler covariance vs dense oracle --------------------

void mc_cov_check(const SpatialGraph& g, const char* name, bool allow_tail, Outcome& out) {
  const double rho = 0.9;
  const int draws = 200000;
  const auto cov = dense_covariance_oracle(g, rho, 1.0);
  const CarFactorization fac(g, rho);
  const std::size_t n = g.n();
  std::vector<double> acc(n * n, 0.0);
#pragma omp parallel
  {
    std::vector<double> loc(n * n, 0.0);
#pragma omp for
    for (int d = 0; d < draws; ++d) {
      const auto x = fac.draw(rng::derive_key(static_cast<std::uint64_t>(d), "accept-cov"));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) loc[i * n + j] += x[i] * x[j];
    }
#pragma omp critical
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += loc[k];
  }
  std::size_t within = 0, total = 0;
  double max_z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double emp = acc[i * n + j] / draws;
      const double se =
          std::sqrt((cov[i * n + i] * cov[j * n + j] + cov[i * n + j] * cov[i * n + j]) / draws);
      const double z = std::fabs(emp - cov[i * n + j]) / se;
      max_z = std::max(max_z, z);
      ++total;
      if (z < 3.0) ++within;
    }
  const double frac = static_cast<double>(within) / static_cast<double>(total);
  if (allow_tail) {
    // With 2080 entries the nominal 3-SE coverage itself leaves a few
    // exceedances; gate on coverage plus a hard 5-SE cap instead.
    out.gate(frac >= 0.99 && max_z < 5.0,
             std::string(name) + " coverage " + fmt(frac) + " max z " + fmt(max_z));
  } else {
    out.gate(max_z < 3.0, std::string(name) + " max z " + fmt(max_z));
  }
  out.note(std::string(name) + " z " + fmt(max_z));
}

Outcome criterion1() {
  Outcome out;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> star;
  for (std::uint32_t i = 1; i < 9; ++i) star.push_back({0, i});
  mc_cov_check(path_graph(16), "path16", false, out);
  mc_cov_check(cycle_graph(12), "cycle12", false, out);
  mc_cov_check(build_graph_indexed(9, star), "star9", false, out);
  mc_cov_check(grid_graph(8, 8, false), "grid8x8", true, out);

  const double rho = 0.6, s = 1.0 / (1.0 - rho * rho);
  const auto c2 = dense_covariance_oracle(path_graph(2), rho, 1.0);
  out.gate(std::fabs(c2[0] - s) < 1e-9 && std::fabs(c2[1] - rho * s) < 1e-9 &&
               std::fabs(c2[2] - rho * s) < 1e-9 && std::fabs(c2[3] - s) < 1e-9,
           "2-node closed form mismatch");
  return out;
}

// ---- criterion 2: exact variance matching --------------------------------

Outcome criterion2() {
  Outcome out;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed)
    for (TreatmentType type : {TreatmentType::binary, TreatmentType::continuous}) {
      DataCollection col = demo_collection(16, 4, 1.0, seed, type == TreatmentType::binary);
      const SpaceEnv env = generate_env(col, demo_env_config(seed, type));
      const double rel = std::fabs(env.diagnostics.std_sampled - env.diagnostics.std_fitted) /
                         env.diagnostics.std_fitted;
      worst = std::max(worst, rel);
    }
  out.gate(worst < 1e-12, "relative std mismatch " + fmt(worst));
  out.note("max rel dev " + fmt(worst) + " over 6 environments");
  return out;
}

// ---- criterion 3: Moran's I fidelity --------------------------------------

Outcome criterion3() {
  Outcome out;
  double worst = 0.0;
  for (std::size_t side : {std::size_t{40}, std::size_t{50}})
    for (TreatmentType type : {TreatmentType::binary, TreatmentType::continuous})
      for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        DataCollection col = demo_collection(side, 4, 1.0, seed, type == TreatmentType::binary);
        const SpaceEnv env = generate_env(col, demo_env_config(seed, type));
        const double gap = std::fabs(env.diagnostics.moran_sampled - env.diagnostics.moran_fitted);
        worst = std::max(worst, gap);
      }
  out.gate(worst < 0.05, "max Moran gap " + fmt(worst));
  out.note("max |dI| " + fmt(worst) + " over 40 environments");
  return out;
}

// ---- criterion 4: split proportions ---------------------------------------

Outcome criterion4() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t side : {std::size_t{50}, std::size_t{100}, std::size_t{173}}) {
    const SpatialGraph g = grid_graph(side, side, true);
    SplitParams p;
    p.seed = 1;
    const TrainValSplit s = spatial_split(g, p);
    const double n = static_cast<double>(g.n());
    const double ftrain = s.train.size() / n, fval = s.val.size() / n;
    out.gate(ftrain >= 0.50 && ftrain <= 0.70,
             "train fraction " + fmt(ftrain) + " at side " + std::to_string(side));
    out.gate(fval >= 0.10 && fval <= 0.20,
             "val fraction " + fmt(fval) + " at side " + std::to_string(side));
    const auto roles = split_roles(g, s);
    bool clean = true;
    for (std::size_t i = 0; i < g.n() && clean; ++i)
      if (roles[i] == kRoleTrain)
        for (std::uint32_t j : g.neighbors(i))
          if (roles[j] == kRoleVal) {
            clean = false;
            break;
          }
    out.gate(clean, "train/val edge found at side " + std::to_string(side));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.gate(secs < 10.0, "runtime " + fmt(secs) + " s");
  out.note(fmt(secs) + " s");
  return out;
}

// ---- criterion 5: masking degrades accuracy -------------------------------

Outcome criterion5() {
  Outcome out;
  const std::vector<std::string> methods{"ols", "spatial", "spatialplus", "gmerror", "s2sls"};
  std::map<std::string, double> masked_sum, full_sum;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    DataCollection col = demo_collection(16, 4, 1.0, seed, true);
    const SpaceEnv env = generate_env(col, demo_env_config(seed, TreatmentType::binary));
    DatasetOptions opts;
    opts.compute_scores = false;
    const SpaceDataset masked = make_dataset(env, "conf", nullptr, opts);
    const SpaceDataset full = make_dataset(env, "", nullptr, opts);
    for (const auto& m : methods) {
      EstimatorSpec spec;
      spec.method = m;
      spec.seed = seed;
      const auto rm = run_baseline(masked, spec);
      const auto rf = run_baseline(full, spec);
      out.gate(!rm.divergent && !rf.divergent, m + " divergent at seed " + std::to_string(seed));
      if (rm.divergent || rf.divergent) continue;
      masked_sum[m] += *eval_report(rm.estimates, masked).rmise;
      full_sum[m] += *eval_report(rf.estimates, full).rmise;
    }
  }
  for (const auto& m : methods) {
    out.gate(masked_sum[m] > full_sum[m], m + " not degraded");
    out.note(m + " x" + fmt(masked_sum[m] / full_sum[m]));
  }
  return out;
}

// ---- criterion 6: smooth confounder ordering ------------------------------

Outcome criterion6() {
  Outcome out;
  double bias_ols = 0.0, bias_sp = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SpatialGraph g = grid_graph(20, 20, true);
    const std::size_t n = g.n();
    NodeField conf(n), x2(n), pre(n), eps(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = g.coords[i][0] / 19.0, c = g.coords[i][1] / 19.0;
      conf[i] = std::sin(2.0 * 3.14159265358979 * r) + std::cos(2.0 * 3.14159265358979 * c);
    }
    rng::fill_normal(rng::derive_key(seed, "x2"), x2);
    rng::fill_normal(rng::derive_key(seed, "pre"), pre);
    rng::fill_normal(rng::derive_key(seed, "eps"), eps);
    NodeField a(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = conf[i] + 0.5 * pre[i] > 0.0 ? 1.0 : 0.0;
      y[i] = a[i] + 1.5 * conf[i] + 0.3 * x2[i] + 0.2 * eps[i];
    }
    const auto ds = direct_dataset(std::move(g), {{"X1", x2}}, a, TreatmentType::binary, y);
    const auto ro = run_ols(ds);
    EstimatorSpec spec;
    spec.method = "spatialplus";
    spec.seed = seed;
    const auto rp = run_baseline(ds, spec);
    bias_ols += std::fabs(*ro.estimates.ate - 1.0);
    bias_sp += std::fabs(*rp.estimates.ate - 1.0);
  }
  out.gate(bias_sp < bias_ols, "spatialplus not better");
  out.note("ols " + fmt(bias_ols / 10) + " vs spatialplus " + fmt(bias_sp / 10));
  return out;
}

// ---- criterion 7: metric identities ----------------------------------------

Outcome criterion7() {
  Outcome out;
  SpatialGraph g = path_graph(40);
  const std::size_t n = g.n();
  NodeField a(n), cf0(n), gap(n);
  rng::fill_normal(rng::derive_key(70, "a"), a);
  rng::fill_normal(rng::derive_key(70, "cf0"), cf0);
  rng::fill_normal(rng::derive_key(70, "gap"), gap);
  NodeField cf1(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = a[i] > 0.0 ? 1.0 : 0.0;
    cf1[i] = cf0[i] + 1.0 + 0.5 * gap[i];
    y[i] = a[i] == 1.0 ? cf1[i] : cf0[i];
  }
  NodeField x(n);
  rng::fill_normal(rng::derive_key(70, "x"), x);
  const auto ds = direct_dataset(std::move(g), {{"X1", x}}, a, TreatmentType::binary, y,
                                 {cf0, cf1});

  CausalEstimates oracle;
  oracle.ate = true_ate(ds);
  oracle.erf = true_erf(ds);
  oracle.ite = ds.counterfactuals;
  const EvalReport r0 = eval_report(oracle, ds);
  out.gate(*r0.bias == 0.0 && *r0.rmise == 0.0 && *r0.pehe == 0.0, "oracle metrics not zero");

  const double c = 0.37;
  CausalEstimates off = oracle;
  for (auto& v : *off.erf) v += c;
  const EvalReport r1 = eval_report(off, ds);
  out.gate(std::fabs(*r1.rmise - c / ds.sigma_y) < 1e-12,
           "offset rmise " + fmt(*r1.rmise) + " vs " + fmt(c / ds.sigma_y));

  const double scale = 37.5;
  SpaceDataset big = ds;
  for (auto& v : big.synthetic_outcome) v *= scale;
  for (auto& col : big.counterfactuals)
    for (auto& v : col) v *= scale;
  big.sigma_y = std_pop(big.synthetic_outcome);
  CausalEstimates est;
  est.ate = *oracle.ate + 0.2;
  est.erf = *oracle.erf;
  (*est.erf)[0] -= 0.1;
  est.ite = *oracle.ite;
  for (auto& v : (*est.ite)[1]) v += 0.3;
  CausalEstimates est_big = est;
  *est_big.ate *= scale;
  for (auto& v : *est_big.erf) v *= scale;
  for (auto& col : *est_big.ite)
    for (auto& v : col) v *= scale;
  const EvalReport ra = eval_report(est, ds);
  const EvalReport rb = eval_report(est_big, big);
  out.gate(std::fabs(*ra.bias - *rb.bias) < 1e-9 && std::fabs(*ra.rmise - *rb.rmise) < 1e-9 &&
               std::fabs(*ra.pehe - *rb.pehe) < 1e-9,
           "rescale changed normalized metrics");
  return out;
}

// ---- criterion 8: generative recovery --------------------------------------

Outcome criterion8() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  double rho_sum = 0.0, tau_s = 0.0, lam_sum = 0.0;
  const int seeds = 20;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    SpatialGraph g = grid_graph(30, 30, false);
    const std::size_t n = g.n();
    NodeField x(n), a(n), eps(n);
    rng::fill_normal(rng::derive_key(seed, "x"), x);
    rng::fill_normal(rng::derive_key(seed, "a"), a);
    rng::fill_normal(rng::derive_key(seed, "e"), eps);
    NodeField rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = 0.5 + a[i] + 1.3 * x[i] + 0.5 * eps[i];
    {
      NodeField y = equilibrium(g, 0.4, rhs);
      const auto ds =
          direct_dataset(grid_graph(30, 30, false), {{"X1", x}}, a, TreatmentType::continuous, y);
      const auto r = run_s2sls(ds);
      rho_sum += r.details.at("rho_hat");
      tau_s += r.details.at("tau_hat");
    }
    {
      NodeField u = equilibrium(g, 0.6, eps);
      NodeField y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = 0.5 + a[i] + 1.3 * x[i] + u[i];
      const auto ds =
          direct_dataset(grid_graph(30, 30, false), {{"X1", x}}, a, TreatmentType::continuous, y);
      lam_sum += run_gmerror(ds).details.at("lambda_e");
    }
  }
  const double rho_bar = rho_sum / seeds, tau_bar = tau_s / seeds, lam_bar = lam_sum / seeds;
  out.gate(std::fabs(rho_bar - 0.4) < 0.1, "mean rho_hat " + fmt(rho_bar));
  out.gate(std::fabs(tau_bar - 1.0) < 0.1, "mean tau_hat " + fmt(tau_bar));
  out.gate(std::fabs(lam_bar - 0.6) < 0.2, "mean lambda_e " + fmt(lam_bar));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.gate(secs < 300.0, "runtime " + fmt(secs) + " s");
  out.note("rho " + fmt(rho_bar) + ", tau " + fmt(tau_bar) + ", lambda " + fmt(lam_bar));
  return out;
}

// ---- criterion 9: million-node scalability ---------------------------------

double vm_hwm_gb() {
  std::ifstream is("/proc/self/status");
  std::string line;
  while (std::getline(is, line))
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream ss(line.substr(6));
      double kb = 0.0;
      ss >> kb;
      return kb / (1024.0 * 1024.0);
    }
  return -1.0;
}

Outcome criterion9() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const SpatialGraph g = grid_graph(1000, 1000, false);
  NodeField target(g.n());
  rng::fill_normal(rng::derive_key(90, "target"), target);
  for (double& v : target) v *= 2.0;
  const ResidualSample s = sample_residual_field(g, 0.9, target, 90);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rel = std::fabs(std_pop(s.field) - std_pop(target)) / std_pop(target);
  out.gate(rel < 1e-12, "variance mismatch " + fmt(rel));
  out.gate(secs < 180.0, "runtime " + fmt(secs) + " s");
  const double gb = vm_hwm_gb();
  out.gate(gb < 8.0, "peak memory " + fmt(gb) + " GB");
  out.note(fmt(secs) + " s, " + fmt(gb) + " GB peak");
  return out;
}

// ---- criterion 10: pipeline determinism ------------------------------------

Outcome criterion10() {
  Outcome out;
  const fs::path root =
      fs::temp_directory_path() /
      ("scbench_accept_" + std::to_string(rng::mix64(static_cast<std::uint64_t>(
                               std::chrono::steady_clock::now().time_since_epoch().count()))));
  fs::create_directories(root);
  nlohmann::json cfg;
  cfg["seed"] = 5;
  cfg["collection"] = "demo";
  cfg["demo"] = {{"n_grid", 12}, {"n_covariates", 4}, {"strength", 0.8}, {"binary", true}};
  cfg["env"] = {{"treatment", "a"},
                {"outcome", "y"},
                {"treatment_type", "binary"},
                {"covariate_groups",
                 nlohmann::json::array({{{"name", "conf"}, {"columns", {"conf"}}},
                                        {{"name", "mid"}, {"columns", {"x2", "x3"}}},
                                        {{"name", "noise"}, {"columns", {"noise"}}}})}};
  cfg["mask_groups"] = {"conf", "noise"};
  cfg["baselines"] = {"ols", "spatial"};
  cfg["tuning_budget"] = 4;
  {
    std::ofstream os(root / "cfg.json");
    os << cfg.dump(2) << "\n";
  }
  const auto r1 = run_pipeline((root / "cfg.json").string(), (root / "run1").string());
  const auto r2 = run_pipeline((root / "cfg.json").string(), (root / "run2").string());
  out.gate(r1.digest == r2.digest, "digests differ");

  auto files = [](const fs::path& dir) {
    std::set<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) out.insert(fs::relative(e.path(), dir).string());
    return out;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
  };
  const auto f1 = files(root / "run1");
  out.gate(f1 == files(root / "run2"), "file sets differ");
  std::size_t compared = 0;
  for (const auto& rel : f1) {
    if (fs::path(rel).filename() == "manifest.json") continue;
    if (slurp(root / "run1" / rel) != slurp(root / "run2" / rel)) {
      out.gate(false, "byte mismatch in " + rel);
      break;
    }
    ++compared;
  }
  out.note(std::to_string(compared) + " files byte-identical");
  fs::remove_all(root);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* label;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, "sampler covariance matches the dense oracle", criterion1},
      {2, "sampled residual variance matches the empirical residuals", criterion2},
      {3, "synthetic spatial autocorrelation tracks the fitted residuals", criterion3},
      {4, "spatial split proportions with a clean train/val cut", criterion4},
      {5, "masking the confounder degrades every baseline", criterion5},
      {6, "spline residualization beats ols under a smooth masked confounder", criterion6},
      {7, "evaluator metric identities", criterion7},
      {8, "lag and error models recover their generative parameters", criterion8},
      {9, "million-node residual draw within desk-scale time and memory", criterion9},
      {10, "pipeline reruns are byte-identical", criterion10},
  };

  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 10) {
      std::fprintf(stderr, "usage: %s [1-10]\n", argv[0]);
      return 2;
    }
  }

  bool all_ok = true;
  for (const auto& e : entries) {
    if (only && e.id != only) continue;
    Outcome out;
    try {
      out = e.fn();
    } catch (const std::exception& ex) {
      out.ok = false;
      out.detail = std::string("exception: ") + ex.what();
    }
    all_ok = all_ok && out.ok;
    std::printf("[%s] criterion %2d: %s%s%s\n", out.ok ? "PASS" : "FAIL", e.id, e.label,
                out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
  }
  return all_ok ? 0 : 1;
}
