#include "scbench/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "scbench/errors.hpp"
#include "scbench/rng.hpp"

namespace scbench {

std::string to_string(TreatmentType t) {
  return t == TreatmentType::binary ? "binary" : "continuous";
}
std::string to_string(OutcomeTransform t) { return t == OutcomeTransform::none ? "none" : "log1p"; }

TreatmentType treatment_type_from(const std::string& s) {
  if (s == "binary") return TreatmentType::binary;
  if (s == "continuous") return TreatmentType::continuous;
  throw ValidationError("unknown treatment_type '" + s + "'");
}
OutcomeTransform outcome_transform_from(const std::string& s) {
  if (s == "none") return OutcomeTransform::none;
  if (s == "log1p") return OutcomeTransform::log1p;
  throw ValidationError("unknown outcome_transform '" + s + "'");
}

namespace {

TreatmentGrid make_treatment_grid_binary(const NodeField& a) {
  std::set<double> levels(a.begin(), a.end());
  if (levels.size() != 2)
    throw ValidationError("binary treatment must take exactly 2 observed values, found " +
                          std::to_string(levels.size()));
  TreatmentGrid g;
  g.type = TreatmentType::binary;
  g.values = {0.0, 1.0};
  g.binary_levels = {*levels.begin(), *std::next(levels.begin())};
  return g;
}

}  // namespace

TreatmentGrid make_treatment_grid(const NodeField& treatment, TreatmentType type,
                                  std::size_t grid_size) {
  if (treatment.empty()) throw ValidationError("treatment grid needs observations");
  if (type == TreatmentType::binary) return make_treatment_grid_binary(treatment);
  if (grid_size < 2) throw ValidationError("grid_size must be >= 2");

  TreatmentGrid g;
  g.type = TreatmentType::continuous;
  std::vector<double> distinct(treatment);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw ValidationError("treatment grid collapsed to a single value");
  if (distinct.size() < grid_size) {
    g.values = std::move(distinct);
    g.degraded = true;
    std::fprintf(stderr,
                 "warning: treatment has only %zu distinct values; grid degraded to those\n",
                 g.values.size());
    return g;
  }
  g.values.reserve(grid_size);
  for (std::size_t j = 0; j < grid_size; ++j) {
    double q = 0.01 + (0.99 - 0.01) * static_cast<double>(j) / static_cast<double>(grid_size - 1);
    double v = quantile_of(treatment, q);
    if (g.values.empty() || v > g.values.back()) g.values.push_back(v);
  }
  if (g.values.size() < 2) throw ValidationError("treatment grid collapsed to a single value");
  return g;
}

namespace {

// Group columns in config order with any "<col>_missing" indicator attached
// to its parent's group; returns (column name, source group index).
std::vector<std::pair<std::string, std::size_t>> resolve_covariates(const DataCollection& c,
                                                                    const EnvConfig& cfg) {
  std::set<std::string> taken;
  std::vector<std::pair<std::string, std::size_t>> out;
  for (std::size_t gi = 0; gi < cfg.covariate_groups.size(); ++gi) {
    const auto& [name, cols] = cfg.covariate_groups[gi];
    if (cols.empty()) throw ValidationError("covariate group '" + name + "' is empty");
    for (const auto& col : cols) {
      if (!c.table.has_col(col))
        throw ValidationError("covariate group '" + name + "' references unknown column '" + col +
                              "'");
      if (col == cfg.treatment || col == cfg.outcome)
        throw ValidationError("column '" + col + "' cannot be both a covariate and " +
                              (col == cfg.treatment ? "the treatment" : "the outcome"));
      if (!taken.insert(col).second)
        throw ValidationError("column '" + col + "' appears in more than one covariate group");
      out.emplace_back(col, gi);
      std::string ind = col + "_missing";
      if (c.table.has_col(ind) && taken.insert(ind).second) out.emplace_back(ind, gi);
    }
  }
  if (out.empty()) throw ValidationError("config declares no covariates");
  return out;
}

void check_finite(const NodeField& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string(what) + " contains a non-finite value");
}

}  // namespace

SpaceEnv generate_env(const DataCollection& c, const EnvConfig& cfg) {
  if (cfg.treatment == cfg.outcome)
    throw ValidationError("treatment and outcome must be distinct columns");
  if (!c.table.has_col(cfg.treatment))
    throw ValidationError("treatment column '" + cfg.treatment + "' not in collection");
  if (!c.table.has_col(cfg.outcome))
    throw ValidationError("outcome column '" + cfg.outcome + "' not in collection");

  SpaceEnv env;
  env.config = cfg;
  env.graph = c.graph;
  env.node_ids = c.node_ids;

  for (const auto& [col, gi] : resolve_covariates(c, cfg))
    env.features.add_col(col, ColumnRole::covariate, c.table.col(col));

  NodeField a = c.table.col(cfg.treatment);
  check_finite(a, "treatment");
  const std::size_t grid_size = cfg.treatment_type == TreatmentType::binary ? 2 : cfg.grid_size;
  env.grid = make_treatment_grid(a, cfg.treatment_type, grid_size);
  if (env.grid.type == TreatmentType::binary)
    for (double& v : a) v = (v == env.grid.binary_levels[0]) ? 0.0 : 1.0;
  env.features.add_col(cfg.treatment, ColumnRole::treatment, std::move(a));

  env.observed_outcome = c.table.col(cfg.outcome);
  check_finite(env.observed_outcome, "outcome");
  env.transformed_outcome = env.observed_outcome;
  if (cfg.outcome_transform == OutcomeTransform::log1p) {
    for (double& v : env.transformed_outcome) {
      if (v <= -1.0) throw ValidationError("log1p transform requires outcome > -1");
      v = std::log1p(v);
    }
  }

  SplitParams sp = cfg.split;
  sp.seed = cfg.seed;
  env.split = spatial_split(env.graph, sp);

  env.model = fit_ensemble(env.features, env.transformed_outcome, env.split, cfg.grids);
  env.residual_fitted = residuals(*env.model, env.features, env.transformed_outcome);

  const double rho = estimate_rho(env.graph, env.residual_fitted);
  ResidualSample rs = sample_residual_field(env.graph, rho, env.residual_fitted,
                                            rng::derive_key(cfg.seed, "gmrf"));
  env.residual_sampled = std::move(rs.field);
  env.gmrf = rs.params;

  const NodeField yhat = env.model->predict(env.features);
  const std::size_t n = env.graph.n();
  auto finish_scale = [&](NodeField v) {
    if (cfg.outcome_transform == OutcomeTransform::log1p)
      for (double& x : v) x = std::expm1(x);
    return v;
  };

  NodeField ytilde(n);
  for (std::size_t i = 0; i < n; ++i) ytilde[i] = yhat[i] + env.residual_sampled[i];
  env.synthetic_outcome = finish_scale(std::move(ytilde));
  check_finite(env.synthetic_outcome, "synthetic outcome");

  env.counterfactuals.reserve(env.grid.values.size());
  for (double av : env.grid.values) {
    NodeField col = env.model->predict(with_treatment(env.features, av));
    for (std::size_t i = 0; i < n; ++i) col[i] += env.residual_sampled[i];
    col = finish_scale(std::move(col));
    check_finite(col, "counterfactual column");
    env.counterfactuals.push_back(std::move(col));
  }

  // Eq-style consistency: with the treatment mapped onto grid values, the
  // counterfactual column at each node's observed treatment must reproduce
  // the synthetic outcome bit for bit (binary treatments always qualify).
  if (env.grid.type == TreatmentType::binary) {
    const auto& obs = env.features.cols[env.features.treatment_index()];
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = obs[i] == 0.0 ? 0 : 1;
      if (env.counterfactuals[j][i] != env.synthetic_outcome[i])
        throw NumericError("counterfactual consistency violated");
    }
  }

  auto& d = env.diagnostics;
  d.moran_fitted = morans_i(env.graph, env.residual_fitted);
  d.moran_sampled = morans_i(env.graph, env.residual_sampled);
  d.std_fitted = std_pop(env.residual_fitted);
  d.std_sampled = std_pop(env.residual_sampled);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* f : {&env.residual_fitted, &env.residual_sampled})
    for (double v : *f) lo = std::min(lo, v), hi = std::max(hi, v);
  if (hi <= lo) hi = lo + 1.0;
  constexpr std::size_t kBins = 20;
  d.hist_edges.resize(kBins + 1);
  for (std::size_t b = 0; b <= kBins; ++b)
    d.hist_edges[b] = lo + (hi - lo) * static_cast<double>(b) / kBins;
  d.hist_fitted.assign(kBins, 0);
  d.hist_sampled.assign(kBins, 0);
  auto bin_of = [&](double v) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * kBins);
    return std::min(b, kBins - 1);
  };
  for (double v : env.residual_fitted) ++d.hist_fitted[bin_of(v)];
  for (double v : env.residual_sampled) ++d.hist_sampled[bin_of(v)];

  if (env.grid.type == TreatmentType::continuous) {
    const auto& obs = env.features.cols[env.features.treatment_index()];
    double total = 0.0;
    for (double v : obs) {
      auto it = std::lower_bound(env.grid.values.begin(), env.grid.values.end(), v);
      double gap = std::numeric_limits<double>::infinity();
      if (it != env.grid.values.end()) gap = *it - v;
      if (it != env.grid.values.begin()) gap = std::min(gap, v - *std::prev(it));
      d.grid_gap_max = std::max(d.grid_gap_max, gap);
      total += gap;
    }
    d.grid_gap_mean = total / static_cast<double>(n);
  }
  return env;
}

const ResidualDiagnostics& residual_diagnostics(const SpaceEnv& env) { return env.diagnostics; }

}  // namespace scbench
