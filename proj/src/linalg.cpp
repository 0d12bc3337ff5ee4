#include "scbench/linalg.hpp"

#include <cmath>
#include <limits>

#include "scbench/errors.hpp"

namespace scbench::linalg {

std::vector<double> spd_inverse(const std::vector<double>& a, std::size_t n) {
  if (a.size() != n * n) throw NumericError("linalg: bad dense matrix shape");
  // Lower-triangular Cholesky factor, row-major.
  std::vector<double> L(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
      if (i == j) {
        if (s <= 0.0) throw NumericError("linalg: matrix is not positive definite");
        L[i * n + i] = std::sqrt(s);
      } else {
        L[i * n + j] = s / L[j * n + j];
      }
    }
  }
  // Invert L in place (forward substitution against the identity).
  std::vector<double> Linv(n * n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    Linv[col * n + col] = 1.0 / L[col * n + col];
    for (std::size_t i = col + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = col; k < i; ++k) s -= L[i * n + k] * Linv[k * n + col];
      Linv[i * n + col] = s / L[i * n + i];
    }
  }
  // inv(A) = Linv^T * Linv.
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = std::max(i, j); k < n; ++k) s += Linv[k * n + i] * Linv[k * n + j];
      inv[i * n + j] = s;
      inv[j * n + i] = s;
    }
  return inv;
}

Eigen::VectorXd ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                      std::size_t unpenalized) {
  const double n = static_cast<double>(X.rows());
  Eigen::MatrixXd G = X.transpose() * X / n;
  for (Eigen::Index j = static_cast<Eigen::Index>(unpenalized); j < G.rows(); ++j)
    G(j, j) += lambda;
  Eigen::VectorXd rhs = X.transpose() * y / n;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("linalg: ridge normal equations failed to factorize");
  return ldlt.solve(rhs);
}

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows(), p = X.cols();
  if (n <= p) throw NumericError("linalg: ols needs more rows than columns");
  Eigen::MatrixXd G = X.transpose() * X;
  OlsFit fit;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  const double tol = 1e-10 * G.diagonal().maxCoeff();
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < tol) {
    fit.used_ridge = true;
    G.diagonal().array() += 1e-8 * G.diagonal().mean();
    ldlt.compute(G);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
      throw NumericError("linalg: design matrix is rank deficient");
  }
  fit.coef = ldlt.solve(X.transpose() * y);
  const Eigen::VectorXd resid = y - X * fit.coef;
  fit.sigma2 = resid.squaredNorm() / static_cast<double>(n - p);
  Eigen::MatrixXd Ginv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  fit.se = (fit.sigma2 * Ginv.diagonal().array()).cwiseMax(0.0).sqrt();
  return fit;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& P, const Eigen::VectorXd& y) {
  const int k = static_cast<int>(P.cols());
  if (k > 20) throw NumericError("linalg: nnls supports only a few columns");
  Eigen::VectorXd best = Eigen::VectorXd::Zero(k);
  double best_obj = y.squaredNorm();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> active;
    for (int j = 0; j < k; ++j)
      if (mask & (1u << j)) active.push_back(j);
    Eigen::MatrixXd Ps(P.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j)
      Ps.col(static_cast<Eigen::Index>(j)) = P.col(active[j]);
    Eigen::MatrixXd G = Ps.transpose() * Ps;
    G.diagonal().array() += 1e-12 * (1.0 + G.diagonal().maxCoeff());
    const Eigen::VectorXd ws = Eigen::LDLT<Eigen::MatrixXd>(G).solve(Ps.transpose() * y);
    if ((ws.array() < 0.0).any()) continue;
    const double obj = (y - Ps * ws).squaredNorm();
    if (obj < best_obj - 1e-15 * (1.0 + best_obj)) {
      best_obj = obj;
      best.setZero();
      for (std::size_t j = 0; j < active.size(); ++j)
        best[active[j]] = ws[static_cast<Eigen::Index>(j)];
    }
  }
  return best;
}

}  // namespace scbench::linalg
