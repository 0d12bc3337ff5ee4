#include "scbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "scbench/errors.hpp"
#include "scbench/rng.hpp"

namespace scbench {

namespace {

const std::vector<std::string>* find_group(const SpaceEnv& env, const std::string& name) {
  for (const auto& [g, cols] : env.config.covariate_groups)
    if (g == name) return &cols;
  return nullptr;
}

// Effective column set of a group inside env.features (indicators included).
std::set<std::string> group_columns(const SpaceEnv& env, const std::string& name) {
  std::set<std::string> out;
  const auto* cols = find_group(env, name);
  if (!cols) throw ValidationError("unknown covariate group '" + name + "'");
  for (const auto& c : *cols) {
    out.insert(c);
    if (env.features.has_col(c + "_missing")) out.insert(c + "_missing");
  }
  return out;
}

FeatureMatrix drop_group(const FeatureMatrix& features, const std::set<std::string>& masked) {
  FeatureMatrix out;
  for (std::size_t j = 0; j < features.ncols(); ++j)
    if (!masked.count(features.names[j]))
      out.add_col(features.names[j], features.roles[j], features.cols[j]);
  return out;
}

std::string group_token(const SpaceEnv& env, const std::string& group) {
  std::uint64_t h = rng::mix64(rng::derive_key(env.config.seed, "group-id:" + group));
  char buf[20];
  std::snprintf(buf, sizeof buf, "G%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct PlugIn {
  std::vector<double> erf;             // grid-aligned means
  std::vector<NodeField> ite;          // one column per grid value
};

PlugIn plug_in_estimates(const EnsembleModel& m, const FeatureMatrix& features,
                         const TreatmentGrid& grid) {
  PlugIn p;
  p.ite.reserve(grid.values.size());
  p.erf.reserve(grid.values.size());
  for (double a : grid.values) {
    NodeField col = m.predict(with_treatment(features, a));
    p.erf.push_back(mean_of(col));
    p.ite.push_back(std::move(col));
  }
  return p;
}

}  // namespace

double smoothness_score(const SpaceEnv& env, const std::string& group_name) {
  if (group_name.empty()) throw ValidationError("smoothness score needs a nonempty group");
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& c : group_columns(env, group_name)) {
    const auto& col = env.features.col(c);
    if (std_pop(col) == 0.0) continue;
    sum += morans_i(env.graph, col);
    ++used;
  }
  if (used == 0)
    throw ValidationError("group '" + group_name + "' has only zero-variance columns");
  return sum / static_cast<double>(used);
}

std::map<std::string, double> confounding_scores(const SpaceEnv& env,
                                                 const std::string& group_name) {
  std::set<std::string> masked;
  if (!group_name.empty()) masked = group_columns(env, group_name);

  const FeatureMatrix& full = env.features;
  FeatureMatrix reduced = drop_group(full, masked);
  if (reduced.ncols() < 2)  // treatment plus at least one covariate must survive
    throw ValidationError("masking group '" + group_name + "' removes every covariate");

  // Both fits target the synthetic outcome so the score isolates what the
  // masked columns contribute to the causal read-out, not to raw fit quality.
  EnsembleModel m_full = fit_ensemble(full, env.synthetic_outcome, env.split, env.config.grids);
  EnsembleModel m_red = fit_ensemble(reduced, env.synthetic_outcome, env.split, env.config.grids);

  PlugIn a = plug_in_estimates(m_full, full, env.grid);
  PlugIn b = plug_in_estimates(m_red, reduced, env.grid);

  const double sigma = std_pop(env.synthetic_outcome);
  if (sigma <= 0.0) throw NumericError("synthetic outcome has zero variance");
  const std::size_t n = env.graph.n(), k = env.grid.values.size();

  std::map<std::string, double> out;
  if (env.grid.type == TreatmentType::binary)
    out["ate"] = std::fabs((a.erf[1] - a.erf[0]) - (b.erf[1] - b.erf[0])) / sigma;

  double se = 0.0;
  for (std::size_t j = 0; j < k; ++j) se += (a.erf[j] - b.erf[j]) * (a.erf[j] - b.erf[j]);
  out["erf"] = std::sqrt(se / static_cast<double>(k)) / sigma;

  double sp = 0.0;
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i)
      sp += (a.ite[j][i] - b.ite[j][i]) * (a.ite[j][i] - b.ite[j][i]);
  out["ite"] = std::sqrt(sp / static_cast<double>(k * n)) / sigma;
  return out;
}

double confounding_score(const SpaceEnv& env, const std::string& group_name,
                         const std::string& estimand) {
  if (estimand == "ate" && env.grid.type != TreatmentType::binary)
    throw ValidationError("ate confounding score requires a binary treatment");
  auto all = confounding_scores(env, group_name);
  auto it = all.find(estimand);
  if (it == all.end()) throw ValidationError("unknown estimand '" + estimand + "'");
  return it->second;
}

SpaceDataset make_dataset(const SpaceEnv& env, const std::string& group_name, NameMap* name_map,
                          const DatasetOptions& opts) {
  std::set<std::string> masked;
  if (!group_name.empty()) masked = group_columns(env, group_name);

  SpaceDataset ds;
  ds.node_ids = env.node_ids;
  ds.graph = env.graph;
  ds.treatment = env.features.cols[env.features.treatment_index()];
  ds.treatment_type = env.grid.type;
  ds.grid = env.grid;
  ds.synthetic_outcome = env.synthetic_outcome;
  ds.counterfactuals = env.counterfactuals;
  ds.sigma_y = std_pop(env.synthetic_outcome);
  ds.masked_group_id = group_token(env, group_name);

  std::vector<std::size_t> keep;
  for (std::size_t j : env.features.covariate_indices())
    if (!masked.count(env.features.names[j])) keep.push_back(j);
  if (keep.empty())
    throw ValidationError("masking group '" + group_name + "' removes every covariate");

  // Seeded shuffle so anonymized positions leak nothing about group layout.
  rng::Stream s(env.config.seed, "anonymize:" + group_name);
  std::vector<std::size_t> order(keep.size());
  std::iota(order.begin(), order.end(), 0);
  rng::shuffle(s, order);

  if (name_map) {
    name_map->group = group_name;
    name_map->token = ds.masked_group_id;
    name_map->pairs.clear();
  }
  for (std::size_t p = 0; p < order.size(); ++p) {
    const std::size_t j = keep[order[p]];
    std::string anon = "X" + std::to_string(p + 1);
    if (name_map) name_map->pairs.emplace_back(anon, env.features.names[j]);
    ds.observed.add_col(std::move(anon), ColumnRole::covariate, env.features.cols[j]);
  }

  if (opts.compute_scores) {
    if (!group_name.empty()) ds.smoothness = smoothness_score(env, group_name);
    ds.confounding = confounding_scores(env, group_name);
  }
  return ds;
}

std::vector<ScoreRecord> classify_scores(std::vector<ScoreRecord> records) {
  std::vector<double> sm, cf;
  for (const auto& r : records) {
    sm.push_back(r.smoothness);
    auto it = r.confounding.find("erf");
    if (it == r.confounding.end())
      throw ValidationError("score record for '" + r.group + "' lacks an erf score");
    cf.push_back(it->second);
  }
  if (records.empty()) return records;
  const double sm_med = median_of(sm), cf_med = median_of(cf);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].smoothness_class = sm[i] >= sm_med ? "high" : "low";
    records[i].confounding_class = cf[i] >= cf_med ? "high" : "low";
  }
  return records;
}

}  // namespace scbench
