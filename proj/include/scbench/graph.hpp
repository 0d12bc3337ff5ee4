#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace scbench {

// Per-node real vector aligned to a SpatialGraph's node order.
using NodeField = std::vector<double>;

// Immutable undirected graph in CSR form. Edges are stored in both
// directions; there are no self-loops and no duplicates. Node order is
// fixed at construction and every NodeField aligns to it.
struct SpatialGraph {
  std::vector<std::string> node_ids;
  std::vector<std::uint64_t> offsets;  // size n()+1
  std::vector<std::uint32_t> nbrs;     // sorted within each row
  std::vector<std::array<double, 2>> coords;  // empty when absent

  std::size_t n() const { return node_ids.size(); }
  std::size_t edge_count() const { return nbrs.size() / 2; }
  std::size_t degree(std::size_t i) const {
    return static_cast<std::size_t>(offsets[i + 1] - offsets[i]);
  }
  bool isolated(std::size_t i) const { return degree(i) == 0; }
  bool has_coords() const { return !coords.empty(); }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {nbrs.data() + offsets[i], nbrs.data() + offsets[i + 1]};
  }
  // Exported unordered pairs (i < j), sorted lexicographically.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_pairs() const;
};

// Deduplicates, symmetrizes and drops self-loops. Node order = input order.
// Throws ValidationError on duplicate node ids or unknown edge endpoints.
SpatialGraph build_graph(std::vector<std::string> node_ids,
                         const std::vector<std::pair<std::string, std::string>>& edges,
                         std::vector<std::array<double, 2>> coords = {});

// Index-pair variant for synthetic graphs; node ids become "0".."n-1".
SpatialGraph build_graph_indexed(std::size_t n,
                                 const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                                 std::vector<std::array<double, 2>> coords = {});

// Synthetic builders; all carry planar coordinates.
SpatialGraph path_graph(std::size_t n);
SpatialGraph cycle_graph(std::size_t n);
SpatialGraph star_graph(std::size_t leaves);
// 4-neighbor lattice; queen=true adds the 4 diagonal neighbors.
SpatialGraph grid_graph(std::size_t rows, std::size_t cols, bool queen = false);

// Entry i = mean of field over neighbors of i; isolated nodes yield 0 and
// are skipped by downstream consumers. Throws on length mismatch.
NodeField neighbor_means(const SpatialGraph& g, const NodeField& field);

// Moran's I with binary weights: I = (n/S0) * sum_ij w_ij (x_i-m)(x_j-m) /
// sum_i (x_i-m)^2, S0 counting both directions. Isolated nodes contribute
// zero weight rows. Throws on zero-variance field or edgeless graph.
double morans_i(const SpatialGraph& g, const NodeField& field);

void write_edge_list(std::ostream& os, const SpatialGraph& g);
void write_coords(std::ostream& os, const SpatialGraph& g);

// Field/graph alignment guard shared by graph consumers.
void require_aligned(const SpatialGraph& g, const NodeField& field, const char* what);

}  // namespace scbench
