#pragma once

#include <optional>
#include <vector>

#include "scbench/dataset.hpp"

namespace scbench {

// Estimator output. ite columns align to the dataset grid; entries may be
// NaN for estimators that only cover matched nodes, and such entries are
// skipped by the metrics (as are NaN erf entries).
struct CausalEstimates {
  std::optional<double> ate;
  std::optional<std::vector<double>> erf;
  std::optional<std::vector<NodeField>> ite;
};

struct EvalReport {
  std::optional<double> bias, rmise, pehe;
  double sigma_y = 0.0;
};

// Mean over nodes of counterfactual column 1 minus column 0. Binary only.
double true_ate(const SpaceDataset& ds);

// Column means of the counterfactual matrix, grid-aligned.
std::vector<double> true_erf(const SpaceDataset& ds);

// bias = |ate - truth| / sigma_y, rmise = sqrt(mean_a (erf_a - truth_a)^2)
// / sigma_y, pehe = sqrt(mean_{s,a} (cf - ite)^2) / sigma_y. At least one
// estimate must be present and shapes must match the dataset.
EvalReport eval_report(const CausalEstimates& est, const SpaceDataset& ds);

}  // namespace scbench
