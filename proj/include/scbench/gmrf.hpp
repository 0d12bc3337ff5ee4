#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

#include "scbench/graph.hpp"

namespace scbench {

struct GmrfParams {
  double rho = 0.0;     // |rho| <= 0.99
  double lambda = 1.0;  // realized variance scale, > 0
  std::uint64_t seed = 0;
};

// Fitted spatial-correlation parameter: slope of residuals on their neighbor
// means over non-isolated nodes, clamped to [-0.99, 0.99]. Under the CAR
// model E[x_i | x_-i] = rho * neighbor_mean_i, so the slope recovers rho;
// plain correlation shrinks badly on high-rho fields and would break the
// smoothness-fidelity guarantees downstream.
double estimate_rho(const SpatialGraph& g, const NodeField& residuals);

// Precision Q = D - rho*A with unit diagonal substituted for isolated nodes;
// positive definite for |rho| < 1. Yields draws via sparse LL^T under a
// fill-reducing ordering.
class CarFactorization {
 public:
  CarFactorization(const SpatialGraph& g, double rho);
  // x ~ N(0, Q^{-1}); value i of the underlying normal stream is a pure
  // function of (key, i), so draws are reproducible and thread-count free.
  NodeField draw(std::uint64_t key) const;
  double rho() const { return rho_; }
  std::size_t n() const { return n_; }

 private:
  double rho_;
  std::size_t n_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

Eigen::SparseMatrix<double> build_precision(const SpatialGraph& g, double rho);

struct ResidualSample {
  NodeField field;
  GmrfParams params;  // params.lambda = realized rescale factor squared
};

// Draws from N(0, (D-rho*A)^{-1}), recenters to mean 0, then rescales so the
// sample std equals std(target_residuals) exactly; the rescale realizes the
// variance-matching scale. Deterministic given seed.
ResidualSample sample_residual_field(const SpatialGraph& g, double rho,
                                     const NodeField& target_residuals, std::uint64_t seed);

// lambda * (D - rho*A)^{-1} by dense inversion, for graphs up to 1000 nodes.
// Row-major n*n result; independent of the sparse solver route.
std::vector<double> dense_covariance_oracle(const SpatialGraph& g, double rho, double lambda);

}  // namespace scbench
