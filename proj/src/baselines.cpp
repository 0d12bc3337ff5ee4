#include "scbench/baselines.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scbench/errors.hpp"
#include "scbench/linalg.hpp"
#include "scbench/rng.hpp"
#include "scbench/split.hpp"

namespace scbench {

NodeField lag_field(const SpatialGraph& g, const NodeField& v) { return neighbor_means(g, v); }

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Design [1, A, X...] with covariates standardized over all rows. The
// treatment stays on its native scale so its coefficient reads as an effect.
struct Design {
  Eigen::MatrixXd X;
  std::size_t a_col = 1, p = 0;  // p = covariate count
};

Design base_design(const SpaceDataset& ds) {
  const std::size_t n = ds.graph.n(), p = ds.observed.ncols();
  std::vector<const std::vector<double>*> cols;
  for (const auto& c : ds.observed.cols) cols.push_back(&c);
  Standardizer st = fit_standardizer(cols);
  Design d;
  d.p = p;
  d.X.resize(n, 2 + p);
  for (std::size_t i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    d.X(i, 1) = ds.treatment[i];
    for (std::size_t j = 0; j < p; ++j) d.X(i, 2 + j) = st.transform(j, (*cols[j])[i]);
  }
  return d;
}

// Estimates from per-node affine predictions base_s + tau * a.
CausalEstimates affine_estimates(const SpaceDataset& ds, const Eigen::VectorXd& base, double tau) {
  CausalEstimates est;
  const std::size_t n = ds.graph.n(), k = ds.grid.values.size();
  est.ite.emplace();
  est.erf.emplace();
  for (std::size_t j = 0; j < k; ++j) {
    NodeField col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = base(i) + tau * ds.grid.values[j];
    est.erf->push_back(mean_of(col));
    est.ite->push_back(std::move(col));
  }
  if (ds.treatment_type == TreatmentType::binary) est.ate = (*est.erf)[1] - (*est.erf)[0];
  return est;
}

Eigen::VectorXd to_eigen(const NodeField& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// I - rho*W with W the row-normalized adjacency (isolated rows zero).
Eigen::SparseMatrix<double> lag_system(const SpatialGraph& g, double rho) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.nbrs.size() + g.n());
  for (std::size_t i = 0; i < g.n(); ++i) {
    t.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
    const double d = static_cast<double>(g.degree(i));
    for (auto j : g.neighbors(i))
      t.emplace_back(static_cast<int>(i), static_cast<int>(j), -rho / d);
  }
  Eigen::SparseMatrix<double> M(static_cast<int>(g.n()), static_cast<int>(g.n()));
  M.setFromTriplets(t.begin(), t.end());
  M.makeCompressed();
  return M;
}

}  // namespace

BaselineResult run_ols(const SpaceDataset& ds) {
  Design d = base_design(ds);
  linalg::OlsFit fit = linalg::ols(d.X, to_eigen(ds.synthetic_outcome));
  const double tau = fit.coef(1);
  Eigen::VectorXd base = d.X * fit.coef - tau * d.X.col(1);
  BaselineResult r;
  r.estimates = affine_estimates(ds, base, tau);
  r.details = {{"tau_hat", tau},
               {"se_tau", fit.se(1)},
               {"sigma2", fit.sigma2},
               {"used_ridge", fit.used_ridge ? 1.0 : 0.0}};
  return r;
}

BaselineResult run_s2sls(const SpaceDataset& ds) {
  Design d = base_design(ds);
  const std::size_t n = ds.graph.n(), p = d.p;
  const Eigen::VectorXd y = to_eigen(ds.synthetic_outcome);
  const NodeField wy = lag_field(ds.graph, ds.synthetic_outcome);

  bool lag_degenerate = true;
  for (double v : wy)
    if (v != 0.0) lag_degenerate = false;

  if (lag_degenerate) {
    // W = 0 (edgeless graph): the lag term vanishes and the model is OLS.
    BaselineResult r = run_ols(ds);
    r.details["rho_hat"] = 0.0;
    return r;
  }

  // Instruments [1, A, X, WX, W^2X]; regressors [1, A, X, Wy].
  Eigen::MatrixXd Z(n, 2 + 3 * p);
  Z.leftCols(2 + p) = d.X;
  for (std::size_t j = 0; j < p; ++j) {
    NodeField xj(n);
    for (std::size_t i = 0; i < n; ++i) xj[i] = d.X(i, 2 + j);
    NodeField wx = lag_field(ds.graph, xj);
    NodeField wwx = lag_field(ds.graph, wx);
    for (std::size_t i = 0; i < n; ++i) {
      Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 + p + j)) = wx[i];
      Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 + 2 * p + j)) = wwx[i];
    }
  }
  if (static_cast<std::size_t>(Z.cols()) < 3 + p)
    throw ValidationError("s2sls order condition fails: fewer instruments than parameters");

  const Eigen::VectorXd wy_hat = Z * linalg::ols(Z, to_eigen(wy)).coef;
  Eigen::MatrixXd D2(n, 3 + p);
  D2.leftCols(2 + p) = d.X;
  D2.col(2 + p) = wy_hat;
  linalg::OlsFit fit = linalg::ols(D2, y);

  const double rho = fit.coef(2 + p), tau = fit.coef(1);
  BaselineResult r;
  r.details = {{"rho_hat", rho}, {"tau_hat", tau}};
  if (std::fabs(rho) >= 1.0) {
    r.divergent = true;
    return r;
  }

  // Equilibrium counterfactuals: (I - rho W) y(a) = c + tau a + X beta.
  Eigen::VectorXd exo = d.X * fit.coef.head(2 + p) - tau * d.X.col(1);
  Eigen::SparseMatrix<double> M = lag_system(ds.graph, rho);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(M);
  if (lu.info() != Eigen::Success) throw NumericError("s2sls equilibrium solve failed");

  CausalEstimates est;
  est.ite.emplace();
  est.erf.emplace();
  for (double a : ds.grid.values) {
    Eigen::VectorXd rhs = exo.array() + tau * a;
    Eigen::VectorXd ya = lu.solve(rhs);
    NodeField col(ya.data(), ya.data() + n);
    est.erf->push_back(mean_of(col));
    est.ite->push_back(std::move(col));
  }
  if (ds.treatment_type == TreatmentType::binary) est.ate = (*est.erf)[1] - (*est.erf)[0];
  r.estimates = std::move(est);
  return r;
}

BaselineResult run_gmerror(const SpaceDataset& ds, std::optional<double> forced_lambda) {
  Design d = base_design(ds);
  const std::size_t n = ds.graph.n();
  const Eigen::VectorXd y = to_eigen(ds.synthetic_outcome);
  linalg::OlsFit stage1 = linalg::ols(d.X, y);

  double lam;
  if (forced_lambda) {
    lam = *forced_lambda;
  } else {
    Eigen::VectorXd ev = y - d.X * stage1.coef;
    NodeField e(ev.data(), ev.data() + n);
    NodeField eb = lag_field(ds.graph, e);
    NodeField ebb = lag_field(ds.graph, eb);
    double tr_ww = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!ds.graph.isolated(i)) tr_ww += 1.0 / static_cast<double>(ds.graph.degree(i));
    const double t = tr_ww / static_cast<double>(n);

    auto dot = [](const NodeField& a, const NodeField& b) {
      return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    };
    const double see = dot(e, e), seb = dot(e, eb), sbb = dot(eb, eb), sbc = dot(eb, ebb),
                 scc = dot(ebb, ebb), sec = dot(e, ebb);

    // Three Kelejian-Prucha moment conditions on (e - lam We, We - lam W^2e)
    // with sigma^2 profiled out; scanned over the stable lam interval.
    auto objective = [&](double l) {
      const double m1 = (see - 2 * l * seb + l * l * sbb) / n;
      const double m2 = (sbb - 2 * l * sbc + l * l * scc) / n;
      const double m3 = (seb - l * (sbb + sec) + l * l * sbc) / n;
      const double s2 = (m1 + t * m2) / (1.0 + t * t);
      const double r1 = m1 - s2, r2 = m2 - t * s2;
      return r1 * r1 + r2 * r2 + m3 * m3;
    };
    lam = 0.0;
    double best = objective(0.0);
    for (double l = -0.99; l <= 0.99 + 1e-12; l += 0.0005) {
      const double o = objective(l);
      if (o < best) best = o, lam = l;
    }
  }

  // Feasible GLS on the spatially filtered system (I - lam W)(y, design).
  NodeField ynf(ds.synthetic_outcome);
  NodeField wyn = lag_field(ds.graph, ynf);
  Eigen::VectorXd yf(n);
  for (std::size_t i = 0; i < n; ++i) yf(i) = ynf[i] - lam * wyn[i];
  Eigen::MatrixXd Xf(n, d.X.cols());
  for (Eigen::Index c = 0; c < d.X.cols(); ++c) {
    NodeField xc(n);
    for (std::size_t i = 0; i < n; ++i) xc[i] = d.X(i, c);
    NodeField wxc = lag_field(ds.graph, xc);
    for (std::size_t i = 0; i < n; ++i) Xf(i, c) = xc[i] - lam * wxc[i];
  }
  linalg::OlsFit fit = linalg::ols(Xf, yf);
  if (fit.used_ridge) throw NumericError("gmerror filtered design is rank deficient");

  const double tau = fit.coef(1);
  Eigen::VectorXd base = d.X * fit.coef - tau * d.X.col(1);
  BaselineResult r;
  r.estimates = affine_estimates(ds, base, tau);
  r.details = {{"lambda_e", lam}, {"tau_hat", tau}, {"sigma2", fit.sigma2}};
  return r;
}

namespace {

// Seeded k-means (Lloyd) over node coordinates; empty clusters keep their
// previous center so the run stays deterministic.
std::vector<std::array<double, 2>> kmeans_centers(const SpatialGraph& g, std::size_t k,
                                                  std::uint64_t seed) {
  rng::Stream s(seed, "kmeans");
  auto idx = rng::sample_without_replacement(s, g.n(), k);
  std::vector<std::array<double, 2>> centers;
  centers.reserve(k);
  for (auto i : idx) centers.push_back(g.coords[i]);
  std::vector<std::size_t> assign(g.n());
  for (int it = 0; it < 25; ++it) {
    for (std::size_t i = 0; i < g.n(); ++i) {
      double best = kInf;
      for (std::size_t c = 0; c < k; ++c) {
        const double dx = g.coords[i][0] - centers[c][0], dy = g.coords[i][1] - centers[c][1];
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) best = d2, assign[i] = c;
      }
    }
    std::vector<std::array<double, 2>> sum(k, {0.0, 0.0});
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < g.n(); ++i) {
      sum[assign[i]][0] += g.coords[i][0];
      sum[assign[i]][1] += g.coords[i][1];
      ++cnt[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (cnt[c]) centers[c] = {sum[c][0] / cnt[c], sum[c][1] / cnt[c]};
  }
  return centers;
}

// Gaussian bumps at k-means centers, width = median pairwise center
// distance, columns centered.
Eigen::MatrixXd rbf_basis(const SpatialGraph& g, std::uint64_t seed) {
  if (!g.has_coords()) throw ValidationError("spline baselines require coordinates");
  const std::size_t k = std::min<std::size_t>(200, std::max<std::size_t>(4, g.n() / 20));
  if (g.n() < k) throw ValidationError("too few nodes for the spline basis");
  auto centers = kmeans_centers(g, k, seed);
  std::vector<double> dists;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      dists.push_back(std::hypot(centers[a][0] - centers[b][0], centers[a][1] - centers[b][1]));
  double h = dists.empty() ? 1.0 : median_of(std::move(dists));
  if (h <= 0.0) h = 1.0;
  Eigen::MatrixXd phi(g.n(), k);
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t c = 0; c < k; ++c) {
      const double dx = g.coords[i][0] - centers[c][0], dy = g.coords[i][1] - centers[c][1];
      phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          std::exp(-(dx * dx + dy * dy) / (2.0 * h * h));
    }
  phi.rowwise() -= phi.colwise().mean();
  return phi;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<std::uint32_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, const std::vector<std::uint32_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

// Penalized fit of y on [design, phi] (phi penalized), optionally on a row
// subset, returning full-sample predictions and the coefficient vector.
struct SplineFit {
  Eigen::VectorXd coef, fitted;
};

SplineFit spline_fit(const Eigen::MatrixXd& D, const Eigen::MatrixXd& phi,
                     const Eigen::VectorXd& y, double lam,
                     const std::vector<std::uint32_t>& rows) {
  Eigen::MatrixXd X(D.rows(), D.cols() + phi.cols());
  X << D, phi;
  SplineFit f;
  if (rows.empty())
    f.coef = linalg::ridge(X, y, lam, static_cast<std::size_t>(D.cols()));
  else
    f.coef = linalg::ridge(take_rows(X, rows), take_rows(y, rows), lam,
                           static_cast<std::size_t>(D.cols()));
  f.fitted = X * f.coef;
  return f;
}

}  // namespace

BaselineResult run_spatial(const SpaceDataset& ds, double lam, std::uint64_t seed) {
  if (lam <= 0.0) throw ValidationError("spatial penalty must be positive");
  Design d = base_design(ds);
  Eigen::MatrixXd phi = rbf_basis(ds.graph, seed);
  SplineFit fit = spline_fit(d.X, phi, to_eigen(ds.synthetic_outcome), lam, {});
  const double tau = fit.coef(1);
  Eigen::VectorXd base = fit.fitted - tau * d.X.col(1);
  BaselineResult r;
  r.estimates = affine_estimates(ds, base, tau);
  r.details = {{"tau_hat", tau}, {"lam", lam}};
  return r;
}

BaselineResult run_spatialplus(const SpaceDataset& ds, double lam_t, double lam_y,
                               std::uint64_t seed) {
  if (lam_t <= 0.0 || lam_y <= 0.0) throw ValidationError("spatialplus penalties must be positive");
  Design d = base_design(ds);
  const std::size_t n = ds.graph.n();
  Eigen::MatrixXd phi = rbf_basis(ds.graph, seed);

  // Stage one residualizes the treatment on covariates and space.
  Eigen::MatrixXd DT(n, 1 + d.p);
  DT.col(0).setOnes();
  DT.rightCols(d.p) = d.X.rightCols(d.p);
  SplineFit ft = spline_fit(DT, phi, d.X.col(1), lam_t, {});
  Eigen::VectorXd a_res = d.X.col(1) - ft.fitted;

  Eigen::MatrixXd DY(n, 2 + d.p);
  DY.col(0).setOnes();
  DY.col(1) = a_res;
  DY.rightCols(d.p) = d.X.rightCols(d.p);
  SplineFit fy = spline_fit(DY, phi, to_eigen(ds.synthetic_outcome), lam_y, {});
  const double tau = fy.coef(1);

  // Plug-in with A := a shifts only the residualized treatment column.
  Eigen::VectorXd base = fy.fitted - tau * a_res + tau * (-ft.fitted);
  BaselineResult r;
  r.estimates = affine_estimates(ds, base, tau);
  r.details = {{"tau_hat", tau}, {"lam_t", lam_t}, {"lam_y", lam_y}};
  return r;
}

namespace {

Eigen::VectorXd logistic_l2(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lam) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd eta = X * b;
    Eigen::VectorXd p = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    Eigen::VectorXd w = (p.array() * (1.0 - p.array())).cwiseMax(1e-6).matrix();
    Eigen::VectorXd grad = X.transpose() * (p - y) / X.rows();
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X / X.rows();
    for (Eigen::Index j = 1; j < X.cols(); ++j) {
      grad(j) += lam * b(j);
      H(j, j) += lam;
    }
    Eigen::VectorXd step = H.ldlt().solve(grad);
    b -= step;
    if (step.norm() < 1e-10) break;
  }
  return b;
}

Eigen::VectorXd logistic_l1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lam) {
  const double n = static_cast<double>(X.rows());
  // Lipschitz bound for the logistic gradient: ||X||_2^2 / (4n).
  Eigen::VectorXd v = Eigen::VectorXd::Ones(X.cols()).normalized();
  for (int it = 0; it < 50; ++it) v = (X.transpose() * (X * v)).normalized();
  const double L = (X * v).squaredNorm() / n / 4.0 + 1e-12;
  const double step = 1.0 / L, thresh = lam * step;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols()), z = b;
  double tk = 1.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd p = (1.0 / (1.0 + (-(X * z).array()).exp())).matrix();
    Eigen::VectorXd grad = X.transpose() * (p - y) / n;
    Eigen::VectorXd bn = z - step * grad;
    for (Eigen::Index j = 1; j < bn.size(); ++j)
      bn(j) = std::copysign(std::max(0.0, std::fabs(bn(j)) - thresh), bn(j));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    z = bn + ((tk - 1.0) / tn) * (bn - b);
    if ((bn - b).norm() < 1e-10) {
      b = bn;
      break;
    }
    b = bn;
    tk = tn;
  }
  return b;
}

struct MatchSet {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (treated, control)
  double caliper = 0.0;
};

// Covariate matrix standardized over all rows plus arm indices.
struct DapsmFrame {
  Eigen::MatrixXd X;  // [1, Xstd]
  std::vector<std::uint32_t> treated, control;
};

DapsmFrame dapsm_frame(const SpaceDataset& ds) {
  if (ds.treatment_type != TreatmentType::binary)
    throw ValidationError("dapsm requires a binary treatment");
  if (!ds.graph.has_coords()) throw ValidationError("dapsm requires coordinates");
  DapsmFrame f;
  const std::size_t n = ds.graph.n(), p = ds.observed.ncols();
  std::vector<const std::vector<double>*> cols;
  for (const auto& c : ds.observed.cols) cols.push_back(&c);
  Standardizer st = fit_standardizer(cols);
  f.X.resize(n, 1 + p);
  for (std::size_t i = 0; i < n; ++i) {
    f.X(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) f.X(i, 1 + j) = st.transform(j, (*cols[j])[i]);
    (ds.treatment[i] == 1.0 ? f.treated : f.control).push_back(static_cast<std::uint32_t>(i));
  }
  if (f.treated.empty() || f.control.empty())
    throw ValidationError("dapsm requires both treatment arms to be nonempty");
  return f;
}

MatchSet dapsm_match(const SpaceDataset& ds, const DapsmFrame& f, const DapsmParams& prm) {
  const auto& T = f.treated;
  const auto& C = f.control;
  if (T.size() * C.size() > 40'000'000)
    throw ValidationError("dapsm pair matrix too large");

  Eigen::VectorXd yv = Eigen::VectorXd::Zero(f.X.rows());
  for (auto i : T) yv(i) = 1.0;
  Eigen::VectorXd beta = prm.penalty_type == "l1"   ? logistic_l1(f.X, yv, prm.penalty)
                         : prm.penalty_type == "l2" ? logistic_l2(f.X, yv, prm.penalty)
                                                    : throw ValidationError(
                                                          "dapsm penalty_type must be l1 or l2");
  Eigen::VectorXd ps = (1.0 / (1.0 + (-(f.X * beta).array()).exp())).matrix();

  std::vector<double> dist(T.size() * C.size());
  double dmin = kInf, dmax = -kInf;
  for (std::size_t a = 0; a < T.size(); ++a)
    for (std::size_t b = 0; b < C.size(); ++b) {
      const auto& ct = ds.graph.coords[T[a]];
      const auto& cc = ds.graph.coords[C[b]];
      const double dd = std::hypot(ct[0] - cc[0], ct[1] - cc[1]);
      dist[a * C.size() + b] = dd;
      dmin = std::min(dmin, dd);
      dmax = std::max(dmax, dd);
    }
  const double span = dmax > dmin ? dmax - dmin : 1.0;

  std::vector<double> daps(dist.size());
  for (std::size_t a = 0; a < T.size(); ++a)
    for (std::size_t b = 0; b < C.size(); ++b)
      daps[a * C.size() + b] = prm.w * std::fabs(ps(T[a]) - ps(C[b])) +
                               (1.0 - prm.w) * (dist[a * C.size() + b] - dmin) / span;

  MatchSet m;
  m.caliper = quantile_of(daps, prm.caliper_q);

  if (prm.optimal) {
    // Hungarian assignment on the cost matrix, rows = smaller arm; caliper
    // violations get a large-but-finite cost and are dropped afterwards.
    if (T.size() * C.size() > 250'000)
      throw ValidationError("optimal dapsm matching limited to 250k pairs");
    const bool flip = T.size() > C.size();
    const std::size_t nr = flip ? C.size() : T.size(), nc = flip ? T.size() : C.size();
    const double big = 1e6;
    auto cost = [&](std::size_t a, std::size_t b) {
      const double v = flip ? daps[b * C.size() + a] : daps[a * C.size() + b];
      return v <= m.caliper ? v : big;
    };
    // O(nr^2 nc) shortest augmenting path assignment.
    std::vector<double> u(nr + 1, 0.0), vpot(nc + 1, 0.0);
    std::vector<std::size_t> way(nc + 1, 0), matched(nc + 1, nr);
    for (std::size_t a = 0; a < nr; ++a) {
      std::size_t j0 = nc;
      std::vector<double> minv(nc + 1, kInf);
      std::vector<char> used(nc + 1, 0);
      matched[nc] = a;
      do {
        used[j0] = 1;
        const std::size_t i0 = matched[j0];
        double delta = kInf;
        std::size_t j1 = nc;
        for (std::size_t j = 0; j < nc; ++j) {
          if (used[j]) continue;
          const double cur = cost(i0, j) - u[i0] - vpot[j];
          if (cur < minv[j]) minv[j] = cur, way[j] = j0;
          if (minv[j] < delta) delta = minv[j], j1 = j;
        }
        for (std::size_t j = 0; j <= nc; ++j) {
          if (used[j]) u[matched[j]] += delta, vpot[j] -= delta;
          else minv[j] -= delta;
        }
        j0 = j1;
      } while (matched[j0] != nr);
      do {
        const std::size_t j1 = way[j0];
        matched[j0] = matched[j1];
        j0 = j1;
      } while (j0 != nc);
    }
    for (std::size_t j = 0; j < nc; ++j) {
      if (matched[j] == nr) continue;
      const std::size_t ti = flip ? j : matched[j], ci = flip ? matched[j] : j;
      if (daps[ti * C.size() + ci] <= m.caliper) m.pairs.emplace_back(T[ti], C[ci]);
    }
  } else {
    // Greedy: globally cheapest admissible pair first, both nodes retired.
    std::vector<std::size_t> order;
    order.reserve(daps.size());
    for (std::size_t e = 0; e < daps.size(); ++e)
      if (daps[e] <= m.caliper) order.push_back(e);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return daps[a] != daps[b] ? daps[a] < daps[b] : a < b;
    });
    std::vector<char> t_used(T.size(), 0), c_used(C.size(), 0);
    for (std::size_t e : order) {
      const std::size_t a = e / C.size(), b = e % C.size();
      if (t_used[a] || c_used[b]) continue;
      t_used[a] = c_used[b] = 1;
      m.pairs.emplace_back(T[a], C[b]);
    }
  }
  std::sort(m.pairs.begin(), m.pairs.end());
  if (m.pairs.empty()) throw ValidationError("dapsm found no matches under the caliper");
  return m;
}

// Mean absolute standardized mean difference over covariates; the
// normalizer is the pre-match pooled arm sd, so values compare across
// candidate match sets. Outcome-free by construction.
double matched_asmd(const Eigen::MatrixXd& X, const std::vector<std::uint32_t>& treated,
                    const std::vector<std::uint32_t>& control,
                    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
  const Eigen::Index p = X.cols() - 1;
  if (p == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index j = 1; j <= p; ++j) {
    double mt = 0.0, mc = 0.0, vt = 0.0, vc = 0.0;
    for (auto i : treated) mt += X(i, j);
    for (auto i : control) mc += X(i, j);
    mt /= treated.size();
    mc /= control.size();
    for (auto i : treated) vt += (X(i, j) - mt) * (X(i, j) - mt);
    for (auto i : control) vc += (X(i, j) - mc) * (X(i, j) - mc);
    const double sd = std::sqrt(0.5 * (vt / treated.size() + vc / control.size()));
    double pt = 0.0, pc = 0.0;
    for (const auto& [a, b] : pairs) {
      pt += X(a, j);
      pc += X(b, j);
    }
    pt /= pairs.size();
    pc /= pairs.size();
    total += std::fabs(pt - pc) / (sd > 0.0 ? sd : 1.0);
  }
  return total / static_cast<double>(p);
}

}  // namespace

BaselineResult run_dapsm(const SpaceDataset& ds, const DapsmParams& prm) {
  if (prm.w < 0.0 || prm.w > 1.0) throw ValidationError("dapsm w must lie in [0, 1]");
  DapsmFrame f = dapsm_frame(ds);
  MatchSet m = dapsm_match(ds, f, prm);

  const std::size_t n = ds.graph.n();
  CausalEstimates est;
  est.ite.emplace(2, NodeField(n, kNaN));
  double sum = 0.0;
  for (const auto& [t, c] : m.pairs) {
    (*est.ite)[1][t] = ds.synthetic_outcome[t];
    (*est.ite)[0][t] = ds.synthetic_outcome[c];
    sum += ds.synthetic_outcome[t] - ds.synthetic_outcome[c];
  }
  est.ate = sum / static_cast<double>(m.pairs.size());
  double m0 = 0.0, m1 = 0.0;
  for (const auto& [t, c] : m.pairs) {
    m1 += ds.synthetic_outcome[t];
    m0 += ds.synthetic_outcome[c];
  }
  est.erf = {m0 / static_cast<double>(m.pairs.size()), m1 / static_cast<double>(m.pairs.size())};

  BaselineResult r;
  r.estimates = std::move(est);
  r.details = {{"n_matched", static_cast<double>(m.pairs.size())},
               {"caliper", m.caliper},
               {"w", prm.w},
               {"penalty", prm.penalty},
               {"penalty_l1", prm.penalty_type == "l1" ? 1.0 : 0.0},
               {"balance", matched_asmd(f.X, f.treated, f.control, m.pairs)}};
  return r;
}

namespace {

// Validation MSE of a fitted baseline's observed-treatment predictions.
// Fits see train rows only; val outcomes are scoring data.
double holdout_mse(const SpaceDataset& ds, const TrainValSplit& split, const std::string& method,
                   double lam_or_lt, double ly, std::uint64_t seed) {
  Design d = base_design(ds);
  Eigen::MatrixXd phi = rbf_basis(ds.graph, seed);
  const Eigen::VectorXd y = to_eigen(ds.synthetic_outcome);
  Eigen::VectorXd fitted;
  if (method == "spatial") {
    fitted = spline_fit(d.X, phi, y, lam_or_lt, split.train).fitted;
  } else {
    Eigen::MatrixXd DT(d.X.rows(), 1 + d.p);
    DT.col(0).setOnes();
    DT.rightCols(d.p) = d.X.rightCols(d.p);
    SplineFit ft = spline_fit(DT, phi, d.X.col(1), lam_or_lt, split.train);
    Eigen::MatrixXd DY(d.X.rows(), 2 + d.p);
    DY.col(0).setOnes();
    DY.col(1) = d.X.col(1) - ft.fitted;
    DY.rightCols(d.p) = d.X.rightCols(d.p);
    fitted = spline_fit(DY, phi, y, ly, split.train).fitted;
  }
  double mse = 0.0;
  for (auto i : split.val) mse += (fitted(i) - y(i)) * (fitted(i) - y(i));
  return mse / static_cast<double>(split.val.size());
}

std::vector<DapsmParams> dapsm_grid(bool optimal) {
  std::vector<DapsmParams> out;
  for (const char* pt : {"l1", "l2"})
    for (double pen : {0.001, 0.01, 0.1, 1.0})
      for (double w : {0.0, 0.02, 0.04, 0.06, 0.08, 0.1}) {
        DapsmParams p;
        p.penalty_type = pt;
        p.penalty = pen;
        p.w = w;
        p.optimal = optimal;
        out.push_back(p);
      }
  return out;
}

}  // namespace

std::map<std::string, double> tune(const EstimatorSpec& spec, const SpaceDataset& ds) {
  if (spec.tuning_budget < 1) throw ValidationError("tuning budget must be >= 1");
  std::map<std::string, double> chosen;
  if (spec.method == "ols" || spec.method == "s2sls" || spec.method == "gmerror") return chosen;

  if (spec.method == "spatial" || spec.method == "spatialplus") {
    SplitParams sp;
    sp.seed = spec.seed;
    TrainValSplit split = spatial_split(ds.graph, sp);
    rng::Stream s(spec.seed, "tune");
    double best = kInf;
    for (std::size_t t = 0; t < spec.tuning_budget; ++t) {
      const double lam = std::pow(10.0, -5.0 + 5.0 * s.uniform01());
      const double ly = std::pow(10.0, -5.0 + 5.0 * s.uniform01());
      const double mse = holdout_mse(ds, split, spec.method, lam, ly, spec.seed);
      if (mse < best) {
        best = mse;
        chosen["lam"] = lam;
        if (spec.method == "spatialplus") {
          chosen["lam_t"] = lam;
          chosen["lam_y"] = ly;
          chosen.erase("lam");
        }
      }
    }
    chosen["val_mse"] = best;
    return chosen;
  }

  if (spec.method == "dapsm") {
    // Balance objective: outcomes never enter this loop.
    DapsmFrame f = dapsm_frame(ds);
    double best = kInf;
    std::size_t pick = 0;
    const auto grid = dapsm_grid(spec.dapsm_optimal);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      double score;
      try {
        MatchSet m = dapsm_match(ds, f, grid[gi]);
        score = matched_asmd(f.X, f.treated, f.control, m.pairs);
      } catch (const ValidationError&) {
        continue;  // zero matches under this configuration
      }
      if (score < best) best = score, pick = gi;
    }
    if (best == kInf) throw ValidationError("no dapsm configuration produced matches");
    chosen["penalty"] = grid[pick].penalty;
    chosen["penalty_l1"] = grid[pick].penalty_type == "l1" ? 1.0 : 0.0;
    chosen["w"] = grid[pick].w;
    chosen["balance"] = best;
    return chosen;
  }
  throw ValidationError("unknown baseline method '" + spec.method + "'");
}

BaselineResult run_baseline(const SpaceDataset& ds, const EstimatorSpec& spec) {
  std::map<std::string, double> hp = tune(spec, ds);
  BaselineResult r;
  if (spec.method == "ols") r = run_ols(ds);
  else if (spec.method == "s2sls") r = run_s2sls(ds);
  else if (spec.method == "gmerror") r = run_gmerror(ds, spec.gmerror_lambda);
  else if (spec.method == "spatial") r = run_spatial(ds, hp.at("lam"), spec.seed);
  else if (spec.method == "spatialplus")
    r = run_spatialplus(ds, hp.at("lam_t"), hp.at("lam_y"), spec.seed);
  else if (spec.method == "dapsm") {
    DapsmParams p;
    p.penalty_type = hp.at("penalty_l1") == 1.0 ? "l1" : "l2";
    p.penalty = hp.at("penalty");
    p.w = hp.at("w");
    p.optimal = spec.dapsm_optimal;
    r = run_dapsm(ds, p);
  } else
    throw ValidationError("unknown baseline method '" + spec.method + "'");
  for (const auto& [k, v] : hp) r.details.emplace("tuned_" + k, v);
  return r;
}

}  // namespace scbench
