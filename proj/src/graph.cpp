#include "scbench/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "scbench/errors.hpp"
#include "scbench/kernels.hpp"
#include "scbench/table.hpp"

namespace scbench {

std::vector<std::pair<std::uint32_t, std::uint32_t>> SpatialGraph::edge_pairs() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(edge_count());
  for (std::uint32_t i = 0; i < n(); ++i)
    for (std::uint32_t j : neighbors(i))
      if (i < j) out.emplace_back(i, j);
  return out;
}

SpatialGraph build_graph_indexed(std::size_t n,
                                 const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges,
                                 std::vector<std::array<double, 2>> coords) {
  if (!coords.empty() && coords.size() != n)
    throw ValidationError("graph: coordinate count does not match node count");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> canon;
  canon.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw ValidationError("graph: edge endpoint out of range");
    if (a == b) continue;
    canon.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  SpatialGraph g;
  g.node_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.node_ids[i] = std::to_string(i);
  g.coords = std::move(coords);

  std::vector<std::uint64_t> deg(n, 0);
  for (auto [a, b] : canon) {
    ++deg[a];
    ++deg[b];
  }
  g.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets[i + 1] = g.offsets[i] + deg[i];
  g.nbrs.resize(g.offsets[n]);
  std::vector<std::uint64_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (auto [a, b] : canon) {
    g.nbrs[cursor[a]++] = b;
    g.nbrs[cursor[b]++] = a;
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(g.nbrs.begin() + static_cast<std::ptrdiff_t>(g.offsets[i]),
              g.nbrs.begin() + static_cast<std::ptrdiff_t>(g.offsets[i + 1]));
  return g;
}

SpatialGraph build_graph(std::vector<std::string> node_ids,
                         const std::vector<std::pair<std::string, std::string>>& edges,
                         std::vector<std::array<double, 2>> coords) {
  std::unordered_map<std::string, std::uint32_t> index;
  index.reserve(node_ids.size());
  for (std::uint32_t i = 0; i < node_ids.size(); ++i)
    if (!index.emplace(node_ids[i], i).second)
      throw ValidationError("graph: duplicate node id '" + node_ids[i] + "'");

  std::vector<std::pair<std::uint32_t, std::uint32_t>> idx_edges;
  idx_edges.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    const auto ia = index.find(a);
    if (ia == index.end()) throw ValidationError("graph: unknown node id '" + a + "' in edge");
    const auto ib = index.find(b);
    if (ib == index.end()) throw ValidationError("graph: unknown node id '" + b + "' in edge");
    idx_edges.emplace_back(ia->second, ib->second);
  }
  SpatialGraph g = build_graph_indexed(node_ids.size(), idx_edges, std::move(coords));
  g.node_ids = std::move(node_ids);
  return g;
}

SpatialGraph path_graph(std::size_t n) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  std::vector<std::array<double, 2>> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = {static_cast<double>(i), 0.0};
    if (i + 1 < n) e.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1));
  }
  return build_graph_indexed(n, e, std::move(c));
}

SpatialGraph cycle_graph(std::size_t n) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  std::vector<std::array<double, 2>> c(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    c[i] = {std::cos(a), std::sin(a)};
    e.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>((i + 1) % n));
  }
  return build_graph_indexed(n, e, std::move(c));
}

SpatialGraph star_graph(std::size_t leaves) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  std::vector<std::array<double, 2>> c(leaves + 1);
  c[0] = {0.0, 0.0};
  for (std::size_t i = 1; i <= leaves; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(leaves);
    c[i] = {std::cos(a), std::sin(a)};
    e.emplace_back(0u, static_cast<std::uint32_t>(i));
  }
  return build_graph_indexed(leaves + 1, e, std::move(c));
}

SpatialGraph grid_graph(std::size_t rows, std::size_t cols, bool queen) {
  const std::size_t n = rows * cols;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e;
  e.reserve(n * (queen ? 4 : 2));
  std::vector<std::array<double, 2>> c(n);
  auto id = [cols](std::size_t r, std::size_t col) {
    return static_cast<std::uint32_t>(r * cols + col);
  };
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t col = 0; col < cols; ++col) {
      c[id(r, col)] = {static_cast<double>(r), static_cast<double>(col)};
      if (col + 1 < cols) e.emplace_back(id(r, col), id(r, col + 1));
      if (r + 1 < rows) e.emplace_back(id(r, col), id(r + 1, col));
      if (queen && r + 1 < rows) {
        if (col + 1 < cols) e.emplace_back(id(r, col), id(r + 1, col + 1));
        if (col > 0) e.emplace_back(id(r, col), id(r + 1, col - 1));
      }
    }
  return build_graph_indexed(n, e, std::move(c));
}

void require_aligned(const SpatialGraph& g, const NodeField& field, const char* what) {
  if (field.size() != g.n())
    throw ValidationError(std::string(what) + ": field length " + std::to_string(field.size()) +
                          " does not match node count " + std::to_string(g.n()));
}

NodeField neighbor_means(const SpatialGraph& g, const NodeField& field) {
  require_aligned(g, field, "neighbor_means");
  NodeField out(g.n(), 0.0);
  kernels::neighbor_sums(g.offsets, g.nbrs, field, out);
  for (std::size_t i = 0; i < g.n(); ++i) {
    const auto d = g.degree(i);
    if (d > 0) out[i] /= static_cast<double>(d);
  }
  return out;
}

double morans_i(const SpatialGraph& g, const NodeField& field) {
  require_aligned(g, field, "morans_i");
  if (g.edge_count() == 0) throw ValidationError("morans_i: graph has no edges");
  const double n = static_cast<double>(g.n());
  const double m = kernels::sum(field) / n;
  const auto [cross, ss] = kernels::moran_parts(g.offsets, g.nbrs, field, m);
  if (ss <= 0.0) throw ValidationError("morans_i: field has zero variance");
  const double s0 = static_cast<double>(g.nbrs.size());
  return (n / s0) * (cross / ss);
}

void write_edge_list(std::ostream& os, const SpatialGraph& g) {
  os << "src,dst\n";
  for (auto [i, j] : g.edge_pairs())
    os << g.node_ids[i] << ',' << g.node_ids[j] << '\n';
}

void write_coords(std::ostream& os, const SpatialGraph& g) {
  os << "node_id,x,y\n";
  for (std::size_t i = 0; i < g.n(); ++i)
    os << g.node_ids[i] << ',' << format_double(g.coords[i][0]) << ','
       << format_double(g.coords[i][1]) << '\n';
}

}  // namespace scbench
