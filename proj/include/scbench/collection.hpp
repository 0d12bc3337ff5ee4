#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "scbench/graph.hpp"
#include "scbench/table.hpp"

namespace scbench {

// Entry point for environment generation: a node table, the graph over the
// same nodes, and named covariate groups. Roles (treatment/outcome) are not
// fixed here; an EnvConfig picks them later.
struct DataCollection {
  std::vector<std::string> node_ids;
  FeatureMatrix table;  // every column ColumnRole::covariate at this stage
  SpatialGraph graph;
  std::vector<std::pair<std::string, std::vector<std::string>>> group_map;
  std::string provenance;
  // Generating parameters of synthetic collections, for oracle tests.
  std::map<std::string, double> truth;
};

struct IngestReport {
  std::size_t n_nodes = 0, n_edges = 0, n_columns = 0, n_isolated = 0;
  std::vector<std::string> imputed_columns;
  std::string to_string() const;
};

// Reads nodes.csv, edges.csv, optional coords.csv and collection.json from
// `dir`, validates node/graph alignment, median-imputes missing cells (one
// "<col>_missing" indicator per affected column) and reports the alignment.
DataCollection ingest(const std::string& dir, IngestReport* report = nullptr);

void write_collection(const DataCollection& c, const std::string& dir);

// Synthetic queen-lattice collection with known generating process:
// column "conf" is a smooth confounder driving both treatment "a"
// (strength in [0,1]) and outcome "y"; middle columns carry decreasing
// spatial correlation; "noise" is iid and unused by a and y. Groups:
// {conf}, {x2..}, {noise}. Deterministic in seed.
DataCollection demo_collection(std::size_t n_grid, std::size_t n_covariates,
                               double confounding_strength, std::uint64_t seed,
                               bool binary_treatment = true);

}  // namespace scbench
