#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "scbench/errors.hpp"
#include "scbench/linalg.hpp"
#include "scbench/rng.hpp"

using namespace scbench;

TEST_CASE("spd_inverse inverts a known 2x2") {
  // [[2, -1], [-1, 2]] has inverse (1/3)[[2, 1], [1, 2]].
  const auto inv = linalg::spd_inverse({2.0, -1.0, -1.0, 2.0}, 2);
  CHECK(inv[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(inv[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(inv[3] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("spd_inverse agrees with Eigen on a random SPD matrix") {
  const int n = 24;
  Eigen::MatrixXd B(n, n);
  std::vector<double> raw(static_cast<std::size_t>(n * n));
  scbench::rng::fill_normal(1234, raw);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = raw[static_cast<std::size_t>(i * n + j)];
  Eigen::MatrixXd A = B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  std::vector<double> a(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i * n + j)] = A(i, j);
  const auto inv = linalg::spd_inverse(a, static_cast<std::size_t>(n));
  const Eigen::MatrixXd ref = A.inverse();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      CHECK(inv[static_cast<std::size_t>(i * n + j)] == doctest::Approx(ref(i, j)).epsilon(1e-9));
}

TEST_CASE("spd_inverse rejects indefinite input") {
  CHECK_THROWS_AS(linalg::spd_inverse({1.0, 2.0, 2.0, 1.0}, 2), NumericError);
}

TEST_CASE("ridge shrinks toward zero and respects unpenalized prefix") {
  const int n = 200;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  std::vector<double> noise(static_cast<std::size_t>(n));
  scbench::rng::fill_normal(77, noise);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::sin(0.1 * i);
    y(i) = 3.0 + 2.0 * X(i, 1) + 0.01 * noise[static_cast<std::size_t>(i)];
  }
  const auto small = linalg::ridge(X, y, 1e-8, 1);
  CHECK(small[0] == doctest::Approx(3.0).epsilon(1e-2));
  CHECK(small[1] == doctest::Approx(2.0).epsilon(1e-2));
  const auto big = linalg::ridge(X, y, 1e6, 1);
  CHECK(std::abs(big[1]) < 1e-3);          // slope fully shrunk
  CHECK(std::abs(big[0] - y.mean()) < 0.1);  // intercept survives
}

TEST_CASE("ols recovers coefficients and reports sane standard errors") {
  const int n = 500;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  std::vector<double> z(static_cast<std::size_t>(2 * n));
  scbench::rng::fill_normal(99, z);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = z[static_cast<std::size_t>(i)];
    X(i, 2) = std::cos(0.05 * i);
    y(i) = 1.0 - 2.0 * X(i, 1) + 0.5 * X(i, 2) + 0.1 * z[static_cast<std::size_t>(n + i)];
  }
  const auto fit = linalg::ols(X, y);
  CHECK(fit.coef[0] == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fit.coef[1] == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(fit.coef[2] == doctest::Approx(0.5).epsilon(0.1));
  CHECK(!fit.used_ridge);
  for (int j = 0; j < 3; ++j) {
    CHECK(fit.se[j] > 0.0);
    CHECK(fit.se[j] < 0.05);
  }
  // Duplicated column triggers the ridge fallback instead of exploding.
  Eigen::MatrixXd Xd(n, 4);
  Xd.leftCols(3) = X;
  Xd.col(3) = X.col(1);
  const auto fallback = linalg::ols(Xd, y);
  CHECK(fallback.used_ridge);
  CHECK(fallback.coef[1] + fallback.coef[3] == doctest::Approx(-2.0).epsilon(0.05));
}

TEST_CASE("nnls matches the unconstrained solution when it is feasible") {
  Eigen::MatrixXd P(4, 2);
  P << 1, 0, 0, 1, 1, 1, 1, -1;
  Eigen::VectorXd target(2);
  target << 2.0, 0.5;
  const Eigen::VectorXd y = P * target;
  const auto w = linalg::nnls(P, y);
  CHECK(w[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("nnls clips negative directions at zero") {
  Eigen::MatrixXd P(3, 2);
  P << 1, -1, 1, -1, 1, -1;
  Eigen::VectorXd y(3);
  y << 1.0, 1.0, 1.0;
  const auto w = linalg::nnls(P, y);
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(w[1] == 0.0);
}
