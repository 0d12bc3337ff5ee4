#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scbench/env.hpp"

namespace scbench {

// Benchmark dataset: one covariate group hidden, remaining covariate names
// anonymized, ground-truth counterfactuals carried along for evaluation.
struct SpaceDataset {
  std::vector<std::string> node_ids;
  SpatialGraph graph;
  FeatureMatrix observed;  // anonymized covariates only
  NodeField treatment;
  TreatmentType treatment_type = TreatmentType::continuous;
  TreatmentGrid grid;
  NodeField synthetic_outcome;
  std::vector<NodeField> counterfactuals;  // identical to the parent env's
  double sigma_y = 0.0;
  // NaN when nothing was masked (the empty-name sentinel dataset).
  double smoothness = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> confounding;  // keys: ate (binary), erf, ite
  std::string masked_group_id;                // opaque token
};

// Anonymous-to-original covariate names; lives in the env bundle only.
struct NameMap {
  std::string group, token;
  std::vector<std::pair<std::string, std::string>> pairs;
};

struct DatasetOptions {
  bool compute_scores = true;
};

// group_name "" is the mask-nothing sentinel (full covariates, no
// smoothness score, zero confounding). Masking every covariate is an error.
SpaceDataset make_dataset(const SpaceEnv& env, const std::string& group_name,
                          NameMap* name_map = nullptr, const DatasetOptions& opts = {});

// Mean Moran's I over the group's columns; zero-variance columns are
// skipped, all-zero-variance groups are an error.
double smoothness_score(const SpaceEnv& env, const std::string& group_name);

// Refits the env's ensemble spec on the synthetic outcome with and without
// the group and returns the sigma_y-normalized discrepancy of the plug-in
// estimate per estimand ("ate" binary-only, "erf", "ite").
std::map<std::string, double> confounding_scores(const SpaceEnv& env,
                                                 const std::string& group_name);
double confounding_score(const SpaceEnv& env, const std::string& group_name,
                         const std::string& estimand);

struct ScoreRecord {
  std::string group;
  double smoothness = 0.0;
  std::map<std::string, double> confounding;
  std::string smoothness_class, confounding_class;  // "low" / "high"
};

// Median thresholding across the sibling records; the confounding axis uses
// the erf score. Scores >= median classify as "high".
std::vector<ScoreRecord> classify_scores(std::vector<ScoreRecord> records);

}  // namespace scbench
