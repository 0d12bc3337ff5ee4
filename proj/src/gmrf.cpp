#include "scbench/gmrf.hpp"

#include <algorithm>
#include <cmath>

#include "scbench/errors.hpp"
#include "scbench/kernels.hpp"
#include "scbench/linalg.hpp"
#include "scbench/rng.hpp"
#include "scbench/table.hpp"

namespace scbench {

double estimate_rho(const SpatialGraph& g, const NodeField& residuals) {
  require_aligned(g, residuals, "estimate_rho");
  const NodeField nm = neighbor_means(g, residuals);
  double sx = 0.0, sn = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < g.n(); ++i)
    if (!g.isolated(i)) {
      sx += residuals[i];
      sn += nm[i];
      ++cnt;
    }
  if (cnt < 2) throw ValidationError("estimate_rho: needs at least 2 non-isolated nodes");
  const double mx = sx / static_cast<double>(cnt), mn = sn / static_cast<double>(cnt);
  double sxx = 0.0, snn = 0.0, sxn = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i)
    if (!g.isolated(i)) {
      const double dx = residuals[i] - mx, dn = nm[i] - mn;
      sxx += dx * dx;
      snn += dn * dn;
      sxn += dx * dn;
    }
  if (sxx <= 0.0) throw ValidationError("estimate_rho: residuals have zero variance");
  if (snn <= 0.0) throw ValidationError("estimate_rho: neighbor means have zero variance");
  const double slope = sxn / snn;
  return std::clamp(slope, -0.99, 0.99);
}

Eigen::SparseMatrix<double> build_precision(const SpatialGraph& g, double rho) {
  if (std::abs(rho) > 0.99) throw ValidationError("gmrf: |rho| must be <= 0.99");
  const auto n = static_cast<Eigen::Index>(g.n());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.nbrs.size() + g.n());
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double deg = static_cast<double>(g.degree(i));
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), deg > 0.0 ? deg : 1.0);
    for (std::uint32_t j : g.neighbors(i))
      trip.emplace_back(static_cast<int>(i), static_cast<int>(j), -rho);
  }
  Eigen::SparseMatrix<double> Q(n, n);
  Q.setFromTriplets(trip.begin(), trip.end());
  return Q;
}

CarFactorization::CarFactorization(const SpatialGraph& g, double rho) : rho_(rho), n_(g.n()) {
  const Eigen::SparseMatrix<double> Q = build_precision(g, rho);
  llt_.compute(Q);
  if (llt_.info() != Eigen::Success)
    throw NumericError("gmrf: sparse Cholesky factorization failed");
}

NodeField CarFactorization::draw(std::uint64_t key) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(n_));
  rng::fill_normal(key, {z.data(), n_});
  // Q = P^T L L^T P  =>  x = P^{-1} L^{-T} z has covariance Q^{-1}.
  const Eigen::VectorXd w = llt_.matrixU().solve(z);
  const Eigen::VectorXd x = llt_.permutationPinv() * w;
  return NodeField(x.data(), x.data() + n_);
}

ResidualSample sample_residual_field(const SpatialGraph& g, double rho,
                                     const NodeField& target_residuals, std::uint64_t seed) {
  require_aligned(g, target_residuals, "sample_residual_field");
  const double target_sd = std_pop(target_residuals);
  if (target_sd <= 0.0)
    throw ValidationError("sample_residual_field: target residuals are constant");

  CarFactorization fac(g, rho);
  NodeField x = fac.draw(rng::derive_key(seed, "car-draw"));

  const double m = kernels::sum(x) / static_cast<double>(x.size());
  for (double& v : x) v -= m;
  const double raw_sd = std_pop(x);
  if (raw_sd <= 0.0) throw NumericError("sample_residual_field: degenerate draw");
  const double scale = target_sd / raw_sd;
  for (double& v : x) v *= scale;

  ResidualSample out;
  out.field = std::move(x);
  out.params = {rho, scale * scale, seed};
  return out;
}

std::vector<double> dense_covariance_oracle(const SpatialGraph& g, double rho, double lambda) {
  const std::size_t n = g.n();
  if (n > 1000) throw ValidationError("dense_covariance_oracle: graph too large (> 1000 nodes)");
  if (lambda <= 0.0) throw ValidationError("dense_covariance_oracle: lambda must be positive");
  std::vector<double> Q(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double deg = static_cast<double>(g.degree(i));
    Q[i * n + i] = deg > 0.0 ? deg : 1.0;
    for (std::uint32_t j : g.neighbors(i)) Q[i * n + j] = -rho;
  }
  std::vector<double> cov = linalg::spd_inverse(Q, n);
  for (double& v : cov) v *= lambda;
  return cov;
}

}  // namespace scbench
