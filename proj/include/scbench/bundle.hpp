#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scbench/baselines.hpp"
#include "scbench/collection.hpp"
#include "scbench/dataset.hpp"
#include "scbench/env.hpp"
#include "scbench/evaluator.hpp"

namespace scbench {

inline constexpr const char* kToolVersion = "scbench 0.1.0";

struct RunManifest {
  std::string command;
  std::string config_digest;  // hex FNV-1a of the canonicalized config
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string started_at, finished_at;  // the only non-reproducible fields
  std::vector<std::string> outputs;
};

// Stable hex digest of a canonical (sorted-key) JSON text.
std::string config_digest(const std::string& canonical_json);

void write_manifest(const RunManifest& m, const std::string& dir);

// Environment bundle: config echo, features/outcome/counterfactual tables,
// graph files, diagnostics and model summary. Tabular payloads round-trip
// bit-exactly through the shortest-decimal formatter.
void write_env_bundle(const SpaceEnv& env, const std::string& dir);

// Rebuilds everything dataset creation needs; env.model stays empty (scores
// refit from the stored synthetic outcome).
SpaceEnv read_env_bundle(const std::string& dir);

// Dataset bundle: anonymized covariates, treatment, synthetic outcome,
// counterfactuals, graph files, and a scores/metadata document. The private
// name map goes into the env bundle, never here.
void write_dataset_bundle(const SpaceDataset& ds, const std::string& dir);
SpaceDataset read_dataset_bundle(const std::string& dir);

void write_name_map(const NameMap& nm, const std::string& env_dir);

void write_estimates(const CausalEstimates& est, const std::vector<std::string>& node_ids,
                     const std::string& dir);
CausalEstimates read_estimates(const std::string& dir);

void write_eval_report(const EvalReport& rep, const std::string& path);

// True exactly once per process; callers print the synthetic-data banner
// when it flips.
bool claim_synthetic_warning();

}  // namespace scbench
