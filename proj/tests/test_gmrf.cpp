#include <cmath>
#include <vector>

#include "doctest.h"
#include "scbench/errors.hpp"
#include "scbench/gmrf.hpp"
#include "scbench/graph.hpp"
#include "scbench/rng.hpp"
#include "scbench/table.hpp"

using namespace scbench;

TEST_CASE("estimate_rho on iid noise is near zero") {
  const auto g = grid_graph(50, 50);
  // Per-seed estimates scatter with sd ~0.06 on this grid; the mean is the
  // sharp null check while each seed stays inside a generous band.
  double mean = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    NodeField x(g.n());
    rng::fill_normal(rng::derive_key(static_cast<std::uint64_t>(s), "rho-null"), x);
    const double rho = estimate_rho(g, x);
    CHECK(rho > -0.2);
    CHECK(rho < 0.2);
    mean += rho;
  }
  CHECK(std::abs(mean / seeds) < 0.02);
}

TEST_CASE("estimate_rho of smoothed noise is clearly positive") {
  const auto g = grid_graph(50, 50);
  NodeField x(g.n());
  rng::fill_normal(rng::derive_key(4, "rho-smooth"), x);
  // Two closed-neighborhood smoothing passes (own value averaged in; pure
  // neighbor averaging would alternate between the bipartite halves of the
  // lattice and decorrelate the parities instead of smoothing).
  for (int pass = 0; pass < 2; ++pass) {
    const auto nm = neighbor_means(g, x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = static_cast<double>(g.degree(i));
      x[i] = (x[i] + d * nm[i]) / (d + 1.0);
    }
  }
  CHECK(estimate_rho(g, x) > 0.5);
}

TEST_CASE("estimate_rho requires variance") {
  const auto g = path_graph(5);
  CHECK_THROWS_AS(estimate_rho(g, {2.0, 2.0, 2.0, 2.0, 2.0}), ValidationError);
}

TEST_CASE("estimate_rho recovers the generating parameter of a draw") {
  const auto g = grid_graph(100, 100);
  for (double rho : {0.0, 0.5, 0.9}) {
    const CarFactorization fac(g, rho);
    const auto x = fac.draw(rng::derive_key(static_cast<std::uint64_t>(rho * 100), "rho-rec"));
    CHECK(estimate_rho(g, x) == doctest::Approx(rho).epsilon(0.12));
  }
}

TEST_CASE("draws with rho=0 carry no spatial signal") {
  const auto g = grid_graph(100, 100);
  const CarFactorization fac(g, 0.0);
  const auto x = fac.draw(rng::derive_key(9, "null-draw"));
  const double I = morans_i(g, x);
  CHECK(I > -0.05);
  CHECK(I < 0.05);
}

TEST_CASE("variance matching is exact and recenters the field") {
  const auto g = grid_graph(30, 30);
  NodeField target(g.n());
  rng::fill_normal(rng::derive_key(5, "target"), target);
  for (double& v : target) v = 3.0 * v + 100.0;
  const auto sample = sample_residual_field(g, 0.8, target, 321);
  CHECK(std_pop(sample.field) == doctest::Approx(std_pop(target)).epsilon(1e-13));
  CHECK(std::abs(mean_of(sample.field)) < 1e-12);
  CHECK(sample.params.rho == 0.8);
  CHECK(sample.params.lambda > 0.0);
  // Same seed reproduces the field bit for bit.
  const auto again = sample_residual_field(g, 0.8, target, 321);
  CHECK(again.field == sample.field);
}

TEST_CASE("high-rho sampling passes the self-consistency checks") {
  const auto g = grid_graph(100, 100);
  const CarFactorization fac(g, 0.9);
  const auto x = fac.draw(rng::derive_key(11, "smooth-draw"));
  CHECK(estimate_rho(g, x) > 0.8);
  CHECK(estimate_rho(g, x) < 0.99);
  CHECK(morans_i(g, x) > 0.3);
}

TEST_CASE("distinct seeds decorrelate and treatments stay exogenous") {
  const auto g = grid_graph(100, 100);
  NodeField target(g.n());
  rng::fill_normal(rng::derive_key(6, "target2"), target);
  const auto a = sample_residual_field(g, 0.6, target, 1).field;
  const auto b = sample_residual_field(g, 0.6, target, 2).field;
  const double ma = mean_of(a), mb = mean_of(b);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(std::abs(num / std::sqrt(da * db)) < 0.05);
}

TEST_CASE("oracle covariance closed forms") {
  const auto one = build_graph({"solo"}, {});
  const auto c1 = dense_covariance_oracle(one, 0.5, 2.5);
  CHECK(c1.size() == 1);
  CHECK(c1[0] == doctest::Approx(2.5).epsilon(1e-14));

  const auto two = path_graph(2);
  const double rho = 0.7;
  const auto c2 = dense_covariance_oracle(two, rho, 1.0);
  const double scale = 1.0 / (1.0 - rho * rho);
  CHECK(c2[0] == doctest::Approx(scale).epsilon(1e-12));
  CHECK(c2[1] == doctest::Approx(scale * rho).epsilon(1e-12));
  CHECK(c2[2] == doctest::Approx(scale * rho).epsilon(1e-12));
  CHECK(c2[3] == doctest::Approx(scale).epsilon(1e-12));
}

TEST_CASE("oracle matches the sparse route on a cycle") {
  const auto g = cycle_graph(8);
  const double rho = 0.6;
  const auto cov = dense_covariance_oracle(g, rho, 1.0);
  // Monte Carlo second moments from the factorized sampler.
  const CarFactorization fac(g, rho);
  const std::size_t n = g.n();
  std::vector<double> acc(n * n, 0.0);
  const int draws = 200000;
  for (int d = 0; d < draws; ++d) {
    const auto x = fac.draw(rng::derive_key(static_cast<std::uint64_t>(d), "cycle-mc"));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) acc[i * n + j] += x[i] * x[j];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double emp = acc[i * n + j] / draws;
      const double se = std::sqrt((cov[i * n + i] * cov[j * n + j] + cov[i * n + j] * cov[i * n + j]) /
                                  draws);
      CHECK(std::abs(emp - cov[i * n + j]) < 3.5 * se);
    }
}

TEST_CASE("oracle rejects oversized graphs and bad lambda") {
  const auto g = grid_graph(40, 40);
  CHECK_THROWS_AS(dense_covariance_oracle(g, 0.5, 1.0), ValidationError);
  CHECK_THROWS_AS(dense_covariance_oracle(path_graph(2), 0.5, 0.0), ValidationError);
}
