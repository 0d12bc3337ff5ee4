#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "scbench/dataset.hpp"
#include "scbench/evaluator.hpp"

namespace scbench {

// Reference estimators. Hyperparameter spaces follow the fixed defaults
// below; `tune` searches them against a spatial validation split (outcome
// MSE) except for dapsm, which optimizes covariate balance only.
struct EstimatorSpec {
  std::string method;  // ols | s2sls | gmerror | spatial | spatialplus | dapsm
  std::uint64_t seed = 0;
  std::size_t tuning_budget = 16;  // sampled points for continuous spaces
  bool dapsm_optimal = false;      // optimal assignment instead of greedy
  // Forces the error-lag parameter, bypassing the moment stage (test hook).
  std::optional<double> gmerror_lambda;
};

struct BaselineResult {
  CausalEstimates estimates;
  std::map<std::string, double> details;
  // Lag parameter left the stable region; estimates withheld.
  bool divergent = false;
};

// Row-normalized adjacency applied to a field: neighbor mean per node,
// zero at isolated nodes.
NodeField lag_field(const SpatialGraph& g, const NodeField& v);

BaselineResult run_ols(const SpaceDataset& ds);
BaselineResult run_s2sls(const SpaceDataset& ds);
BaselineResult run_gmerror(const SpaceDataset& ds, std::optional<double> forced_lambda = {});
BaselineResult run_spatial(const SpaceDataset& ds, double lam, std::uint64_t seed = 0);
BaselineResult run_spatialplus(const SpaceDataset& ds, double lam_t, double lam_y,
                               std::uint64_t seed = 0);

struct DapsmParams {
  std::string penalty_type = "l2";  // l1 | l2
  double penalty = 0.1;
  double w = 0.05;         // weight on propensity difference inside DAPS
  double caliper_q = 0.9;  // caliper = this quantile of candidate DAPS values
  bool optimal = false;
};
BaselineResult run_dapsm(const SpaceDataset& ds, const DapsmParams& p);

// Chosen hyperparameters for the requested method (empty map for methods
// without any). Deterministic given spec.seed.
std::map<std::string, double> tune(const EstimatorSpec& spec, const SpaceDataset& ds);

// tune + run with the chosen hyperparameters folded into details.
BaselineResult run_baseline(const SpaceDataset& ds, const EstimatorSpec& spec);

}  // namespace scbench
