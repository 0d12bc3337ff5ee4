#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scbench/collection.hpp"
#include "scbench/ensemble.hpp"
#include "scbench/gmrf.hpp"
#include "scbench/split.hpp"

namespace scbench {

enum class TreatmentType { binary, continuous };
enum class OutcomeTransform { none, log1p };

std::string to_string(TreatmentType t);
std::string to_string(OutcomeTransform t);
TreatmentType treatment_type_from(const std::string& s);
OutcomeTransform outcome_transform_from(const std::string& s);

struct EnvConfig {
  std::string treatment, outcome;
  std::vector<std::pair<std::string, std::vector<std::string>>> covariate_groups;
  TreatmentType treatment_type = TreatmentType::continuous;
  OutcomeTransform outcome_transform = OutcomeTransform::none;
  std::size_t grid_size = 100;  // forced to 2 for binary treatments
  std::uint64_t seed = 0;
  SplitParams split;  // split.seed is ignored; the env seed drives it
  EnsembleGrids grids;
};

struct TreatmentGrid {
  std::vector<double> values;  // strictly increasing
  TreatmentType type = TreatmentType::continuous;
  bool degraded = false;  // fewer distinct observed values than requested
  // Observed levels mapped onto {0,1} when binary.
  std::array<double, 2> binary_levels{0.0, 1.0};
};

struct ResidualDiagnostics {
  double moran_fitted = 0.0, moran_sampled = 0.0;
  double std_fitted = 0.0, std_sampled = 0.0;
  std::vector<double> hist_edges;  // 21 shared bin edges
  std::vector<std::size_t> hist_fitted, hist_sampled;
  // Continuous treatments only: |A_s - nearest grid value| summary.
  double grid_gap_max = 0.0, grid_gap_mean = 0.0;
};

// Generated environment: synthetic outcome plus the full counterfactual
// surface over the treatment grid, sharing one exogenous residual field.
struct SpaceEnv {
  EnvConfig config;
  SpatialGraph graph;
  std::vector<std::string> node_ids;
  // Covariates (group order, indicators attached) then the treatment column;
  // binary treatments are already mapped onto {0,1} here.
  FeatureMatrix features;
  NodeField observed_outcome;    // as ingested
  NodeField transformed_outcome; // model scale
  TreatmentGrid grid;
  NodeField synthetic_outcome;             // outcome scale
  std::vector<NodeField> counterfactuals;  // one column per grid value
  NodeField residual_fitted;   // Rhat, model scale
  NodeField residual_sampled;  // R, model scale
  GmrfParams gmrf;
  TrainValSplit split;
  // Absent when rebuilt from a bundle; dataset creation refits what it needs.
  std::optional<EnsembleModel> model;
  ResidualDiagnostics diagnostics;
};

// Binary: the two observed levels mapped to {0,1}. Continuous: `grid_size`
// equally spaced quantiles between the 1st and 99th percentile, deduplicated;
// fewer distinct observed values than requested degrade to those values
// (flagged, and a warning is printed to stderr).
TreatmentGrid make_treatment_grid(const NodeField& treatment, TreatmentType type,
                                  std::size_t grid_size = 100);

// Fits the ensemble on (X, A) under a spatial split, replaces its residuals
// with a variance-matched CAR field, and materializes Y(a) for every grid
// value a; the inverse outcome transform is applied last. Deterministic:
// (collection, config) fix every byte, via substreams named "split"/"gmrf".
SpaceEnv generate_env(const DataCollection& c, const EnvConfig& cfg);

const ResidualDiagnostics& residual_diagnostics(const SpaceEnv& env);

}  // namespace scbench
