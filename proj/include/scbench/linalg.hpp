#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace scbench::linalg {

// Dense SPD inverse via an in-house Cholesky (kept free of the sparse
// solver stack so oracle comparisons cross-check an independent route).
// Row-major n*n input; throws NumericError when a pivot fails.
std::vector<double> spd_inverse(const std::vector<double>& a, std::size_t n);

// argmin (1/n)||y - X b||^2 + lambda * ||b_tail||^2 where the first
// `unpenalized` coefficients escape the penalty.
Eigen::VectorXd ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                      std::size_t unpenalized);

struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd se;     // conventional standard errors
  double sigma2 = 0.0;    // residual variance, RSS/(n-p)
  bool used_ridge = false;  // near-singular normal equations, tiny ridge added
};
OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// Nonnegative least squares min ||y - P w||, w >= 0, by exact active-set
// enumeration; intended for a handful of columns.
Eigen::VectorXd nnls(const Eigen::MatrixXd& P, const Eigen::VectorXd& y);

}  // namespace scbench::linalg
