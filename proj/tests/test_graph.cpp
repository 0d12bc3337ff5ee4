#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "scbench/errors.hpp"
#include "scbench/gmrf.hpp"
#include "scbench/graph.hpp"
#include "scbench/rng.hpp"

using namespace scbench;

TEST_CASE("build_graph dedups, symmetrizes, and drops self-loops") {
  const auto g = build_graph({"a", "b", "c"}, {{"a", "b"}, {"b", "a"}, {"b", "b"}});
  CHECK(g.edge_count() == 1);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 1);
  CHECK(g.degree(2) == 0);
  CHECK(g.isolated(2));
}

TEST_CASE("4-node cycle has uniform degree 2") {
  const auto g = cycle_graph(4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(g.degree(i) == 2);
  CHECK(g.edge_count() == 4);
}

TEST_CASE("path of 100 nodes has 99 edges and unit end degrees") {
  const auto g = path_graph(100);
  CHECK(g.edge_count() == 99);
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(99) == 1);
  for (std::size_t i = 1; i < 99; ++i) CHECK(g.degree(i) == 2);
}

TEST_CASE("build_graph rejects bad ids") {
  CHECK_THROWS_AS(build_graph({"a", "a"}, {}), ValidationError);
  CHECK_THROWS_AS(build_graph({"a", "b"}, {{"a", "z"}}), ValidationError);
}

TEST_CASE("rebuild from exported edges reproduces the graph") {
  const auto g = grid_graph(7, 9, true);
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto [i, j] : g.edge_pairs()) edges.emplace_back(g.node_ids[i], g.node_ids[j]);
  const auto h = build_graph(g.node_ids, edges);
  CHECK(h.edge_count() == g.edge_count());
  for (std::size_t i = 0; i < g.n(); ++i) CHECK(h.degree(i) == g.degree(i));
  CHECK(h.nbrs == g.nbrs);
}

TEST_CASE("neighbor_means on a path averages the two sides") {
  const auto g = path_graph(3);
  const auto nm = neighbor_means(g, {1.0, 3.0, 5.0});
  CHECK(nm[0] == 3.0);
  CHECK(nm[1] == 3.0);
  CHECK(nm[2] == 3.0);
}

TEST_CASE("neighbor_means of a constant field is that constant off isolated nodes") {
  auto g = build_graph({"a", "b", "c", "d"}, {{"a", "b"}, {"b", "c"}});
  const auto nm = neighbor_means(g, {7.5, 7.5, 7.5, 7.5});
  CHECK(nm[0] == 7.5);
  CHECK(nm[1] == 7.5);
  CHECK(nm[2] == 7.5);
  CHECK(nm[3] == 0.0);  // isolated marker value, skipped downstream
}

TEST_CASE("neighbor_means matches a brute-force loop on a random graph") {
  const auto g = grid_graph(2, 5);
  NodeField x(g.n());
  rng::fill_normal(17, x);
  const auto nm = neighbor_means(g, x);
  for (std::size_t i = 0; i < g.n(); ++i) {
    double s = 0.0;
    for (auto j : g.neighbors(i)) s += x[j];
    CHECK(nm[i] == doctest::Approx(s / static_cast<double>(g.degree(i))).epsilon(1e-14));
  }
}

TEST_CASE("neighbor_means rejects misaligned fields") {
  CHECK_THROWS_AS(neighbor_means(path_graph(3), {1.0, 2.0}), ValidationError);
}

TEST_CASE("morans_i of a 2-node seesaw is -1") {
  const auto g = path_graph(2);
  CHECK(morans_i(g, {1.0, -1.0}) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("morans_i of iid noise on a 50x50 grid is near the null value") {
  const auto g = grid_graph(50, 50);
  const double null_value = -1.0 / static_cast<double>(g.n() - 1);
  double mean_i = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    NodeField x(g.n());
    rng::fill_normal(rng::derive_key(static_cast<std::uint64_t>(s), "moran-null"), x);
    const double I = morans_i(g, x);
    CHECK(std::abs(I) < 0.05);
    mean_i += I;
  }
  mean_i /= seeds;
  CHECK(std::abs(mean_i - null_value) < 0.005);
}

TEST_CASE("morans_i of a smooth autoregressive draw is strongly positive") {
  const auto g = grid_graph(50, 50);
  const CarFactorization fac(g, 0.95);
  const auto x = fac.draw(rng::derive_key(1, "moran-smooth"));
  CHECK(morans_i(g, x) > 0.3);
}

TEST_CASE("morans_i is affine invariant") {
  const auto g = grid_graph(12, 13, true);
  NodeField x(g.n());
  rng::fill_normal(23, x);
  NodeField y(g.n());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = -3.25 * x[i] + 10.0;
  CHECK(morans_i(g, x) == doctest::Approx(morans_i(g, y)).epsilon(1e-10));
}

TEST_CASE("morans_i is invariant to node relabeling") {
  const auto g = grid_graph(8, 8);
  NodeField x(g.n());
  rng::fill_normal(29, x);
  // Reverse relabeling i -> n-1-i.
  const std::size_t n = g.n();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (auto [i, j] : g.edge_pairs())
    edges.emplace_back(static_cast<std::uint32_t>(n - 1 - i), static_cast<std::uint32_t>(n - 1 - j));
  const auto h = build_graph_indexed(n, edges);
  NodeField y(n);
  for (std::size_t i = 0; i < n; ++i) y[n - 1 - i] = x[i];
  CHECK(morans_i(g, x) == doctest::Approx(morans_i(h, y)).epsilon(1e-12));
}

TEST_CASE("morans_i error cases") {
  const auto g = path_graph(4);
  CHECK_THROWS_AS(morans_i(g, {2.0, 2.0, 2.0, 2.0}), ValidationError);
  const auto edgeless = build_graph({"a", "b"}, {});
  CHECK_THROWS_AS(morans_i(edgeless, {1.0, 2.0}), ValidationError);
}

TEST_CASE("edge and coordinate writers emit aligned rows") {
  const auto g = path_graph(3);
  std::ostringstream es, cs;
  write_edge_list(es, g);
  write_coords(cs, g);
  CHECK(es.str() == "src,dst\n0,1\n1,2\n");
  CHECK(cs.str().substr(0, 13) == "node_id,x,y\n0");
}
