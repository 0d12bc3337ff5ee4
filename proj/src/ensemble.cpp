#include "scbench/ensemble.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scbench/errors.hpp"
#include "scbench/kernels.hpp"
#include "scbench/linalg.hpp"

namespace scbench {

namespace {

void check_schema(const std::vector<std::string>& names, const std::vector<ColumnRole>& roles,
                  const FeatureMatrix& X) {
  if (X.names != names)
    throw ValidationError("ensemble: feature columns do not match training schema");
  if (X.roles != roles)
    throw ValidationError("ensemble: column roles do not match training schema");
}

// ---------------------------------------------------------------- ridge ----

class RidgeInteractions final : public BaseModel {
 public:
  RidgeInteractions(const FeatureMatrix& X, const std::vector<double>& y,
                    const std::vector<std::uint32_t>& rows, double penalty)
      : names_(X.names), roles_(X.roles), penalty_(penalty) {
    const std::size_t p = X.ncols();
    base_st_ = fit_standardizer(col_ptrs(X), {rows.begin(), rows.end()});
    // Degree-2 terms on standardized bases; falls back to treatment-only
    // interactions when the full expansion would be too wide.
    if ((p + 1) * (p + 2) / 2 <= 2000) {
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) pairs_.emplace_back(i, j);
    } else {
      const std::size_t treat = X.treatment_index();
      for (std::size_t i = 0; i < p; ++i)
        if (i != treat) pairs_.emplace_back(i, treat);
    }

    Eigen::MatrixXd Z = expand(X, rows);
    exp_mean_.resize(static_cast<std::size_t>(Z.cols()));
    exp_sd_.resize(static_cast<std::size_t>(Z.cols()));
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
      const double m = Z.col(j).mean();
      double sd = std::sqrt((Z.col(j).array() - m).square().sum() /
                            static_cast<double>(Z.rows()));
      if (sd <= 0.0) sd = 1.0;
      exp_mean_[static_cast<std::size_t>(j)] = m;
      exp_sd_[static_cast<std::size_t>(j)] = sd;
      Z.col(j) = (Z.col(j).array() - m) / sd;
    }
    double ym = 0.0;
    for (std::uint32_t r : rows) ym += y[r];
    ym /= static_cast<double>(rows.size());
    intercept_ = ym;
    Eigen::VectorXd yc(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) yc[static_cast<Eigen::Index>(i)] = y[rows[i]] - ym;
    beta_ = linalg::ridge(Z, yc, penalty, 0);
  }

  std::vector<double> predict(const FeatureMatrix& X) const override {
    check_schema(names_, roles_, X);
    const std::size_t n = X.rows();
    std::vector<double> out(n, intercept_);
    const std::int64_t ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < ni; ++r) {
      const std::size_t row = static_cast<std::size_t>(r);
      double acc = 0.0;
      std::size_t t = 0;
      for (std::size_t j = 0; j < names_.size(); ++j, ++t) {
        const double z = base_st_.transform(j, X.cols[j][row]);
        acc += beta_[static_cast<Eigen::Index>(t)] * (z - exp_mean_[t]) / exp_sd_[t];
      }
      for (const auto& pr : pairs_) {
        const double zi = base_st_.transform(pr.first, X.cols[pr.first][row]);
        const double zj = base_st_.transform(pr.second, X.cols[pr.second][row]);
        acc += beta_[static_cast<Eigen::Index>(t)] * (zi * zj - exp_mean_[t]) / exp_sd_[t];
        ++t;
      }
      out[row] += acc;
    }
    return out;
  }

  std::string family() const override { return "ridge_interactions"; }
  std::string hyperparams() const override { return "penalty=" + format_double(penalty_); }

 private:
  static std::vector<const std::vector<double>*> col_ptrs(const FeatureMatrix& X) {
    std::vector<const std::vector<double>*> p;
    for (const auto& c : X.cols) p.push_back(&c);
    return p;
  }

  Eigen::MatrixXd expand(const FeatureMatrix& X, const std::vector<std::uint32_t>& rows) const {
    const std::size_t p = names_.size();
    Eigen::MatrixXd Z(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(p + pairs_.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::size_t row = rows[i];
      for (std::size_t j = 0; j < p; ++j)
        Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            base_st_.transform(j, X.cols[j][row]);
      for (std::size_t q = 0; q < pairs_.size(); ++q) {
        const auto [a, b] = pairs_[q];
        Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p + q)) =
            base_st_.transform(a, X.cols[a][row]) * base_st_.transform(b, X.cols[b][row]);
      }
    }
    return Z;
  }

  std::vector<std::string> names_;
  std::vector<ColumnRole> roles_;
  double penalty_;
  Standardizer base_st_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::vector<double> exp_mean_, exp_sd_;
  Eigen::VectorXd beta_;
  double intercept_ = 0.0;
};

// ----------------------------------------------------------------- trees ---

struct TreeNode {
  int feat = -1;
  double thresh = 0.0;
  int left = -1, right = -1;
  double value = 0.0;  // leaf payout (already scaled by the learning rate)
};

class BoostedTrees final : public BaseModel {
 public:
  BoostedTrees(const FeatureMatrix& X, const std::vector<double>& y,
               const std::vector<std::uint32_t>& rows, int depth, int rounds, double lr)
      : names_(X.names), roles_(X.roles), depth_(depth), rounds_(rounds), lr_(lr) {
    const std::size_t n = rows.size(), p = X.ncols();
    if (n < 2) throw ValidationError("ensemble: boosted trees need at least 2 rows");

    base_ = 0.0;
    for (std::uint32_t r : rows) base_ += y[r];
    base_ /= static_cast<double>(n);
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[rows[i]] - base_;

    // Rows sorted once per feature; every level pass walks these orders.
    std::vector<std::vector<std::uint32_t>> order(p, std::vector<std::uint32_t>(n));
    for (std::size_t f = 0; f < p; ++f) {
      auto& o = order[f];
      std::iota(o.begin(), o.end(), 0u);
      const auto& col = X.cols[f];
      std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
        return col[rows[a]] < col[rows[b]];
      });
    }

    for (int t = 0; t < rounds_; ++t) {
      trees_.emplace_back(build_tree(X, rows, order, resid));
      const auto& tree = trees_.back();
      for (std::size_t i = 0; i < n; ++i) resid[i] -= eval_tree(tree, X, rows[i]);
    }
  }

  std::vector<double> predict(const FeatureMatrix& X) const override {
    check_schema(names_, roles_, X);
    const std::size_t n = X.rows();
    std::vector<double> out(n, base_);
    const std::int64_t ni = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < ni; ++r) {
      double acc = 0.0;
      for (const auto& tree : trees_) acc += eval_tree(tree, X, static_cast<std::size_t>(r));
      out[static_cast<std::size_t>(r)] += acc;
    }
    return out;
  }

  std::string family() const override { return "boosted_trees"; }
  std::string hyperparams() const override {
    return "depth=" + std::to_string(depth_) + ",rounds=" + std::to_string(rounds_) +
           ",lr=" + format_double(lr_);
  }

 private:
  static constexpr int kMinLeaf = 5;

  struct Best {
    double gain = 0.0;
    int feat = -1;
    double thresh = 0.0;
  };

  std::vector<TreeNode> build_tree(const FeatureMatrix& X, const std::vector<std::uint32_t>& rows,
                                   const std::vector<std::vector<std::uint32_t>>& order,
                                   const std::vector<double>& resid) {
    const std::size_t n = rows.size(), p = X.ncols();
    std::vector<TreeNode> nodes(1);
    std::vector<int> node_of(n, 0);
    std::vector<int> level = {0};
    std::vector<double> node_sum = {kernels::sum_serial(resid)};
    std::vector<std::size_t> node_cnt = {n};

    for (int d = 0; d < depth_ && !level.empty(); ++d) {
      const int nlev = static_cast<int>(level.size());
      // level-local slot per node id
      std::vector<int> slot(nodes.size(), -1);
      for (int s = 0; s < nlev; ++s) slot[static_cast<std::size_t>(level[s])] = s;

      // Per-feature bests computed in parallel, reduced serially in feature
      // order (strict >) so splits never depend on the thread count.
      std::vector<Best> per_feat(p * static_cast<std::size_t>(nlev));
      const std::int64_t pi = static_cast<std::int64_t>(p);
#pragma omp parallel for schedule(static)
      for (std::int64_t f = 0; f < pi; ++f) {
        const auto& col = X.cols[static_cast<std::size_t>(f)];
        Best* fbest = per_feat.data() + static_cast<std::size_t>(f) * static_cast<std::size_t>(nlev);
        std::vector<double> sum_left(static_cast<std::size_t>(nlev), 0.0);
        std::vector<std::size_t> cnt_left(static_cast<std::size_t>(nlev), 0);
        std::vector<double> prev(static_cast<std::size_t>(nlev), 0.0);
        std::vector<char> seen(static_cast<std::size_t>(nlev), 0);
        for (std::uint32_t oi : order[static_cast<std::size_t>(f)]) {
          const int nd = node_of[oi];
          const int s = slot[static_cast<std::size_t>(nd)];
          if (s < 0) continue;
          const std::size_t si = static_cast<std::size_t>(s);
          const double v = col[rows[oi]];
          if (seen[si] && v > prev[si] && cnt_left[si] >= kMinLeaf &&
              node_cnt[static_cast<std::size_t>(nd)] - cnt_left[si] >= kMinLeaf) {
            const double sl = sum_left[si];
            const double st = node_sum[static_cast<std::size_t>(nd)];
            const double cl = static_cast<double>(cnt_left[si]);
            const double ct = static_cast<double>(node_cnt[static_cast<std::size_t>(nd)]);
            const double gain = sl * sl / cl + (st - sl) * (st - sl) / (ct - cl) - st * st / ct;
            if (gain > fbest[si].gain) {
              fbest[si].gain = gain;
              fbest[si].feat = static_cast<int>(f);
              fbest[si].thresh = 0.5 * (prev[si] + v);
            }
          }
          sum_left[si] += resid[oi];
          ++cnt_left[si];
          prev[si] = v;
          seen[si] = 1;
        }
      }
      std::vector<Best> best(static_cast<std::size_t>(nlev));
      for (std::size_t f = 0; f < p; ++f)
        for (int s = 0; s < nlev; ++s) {
          const auto& cand = per_feat[f * static_cast<std::size_t>(nlev) + static_cast<std::size_t>(s)];
          if (cand.feat >= 0 && cand.gain > best[static_cast<std::size_t>(s)].gain)
            best[static_cast<std::size_t>(s)] = cand;
        }

      // Materialize splits and reassign rows.
      std::vector<int> next_level;
      for (int s = 0; s < nlev; ++s) {
        const int nd = level[static_cast<std::size_t>(s)];
        if (best[static_cast<std::size_t>(s)].feat < 0) continue;
        auto& parent = nodes[static_cast<std::size_t>(nd)];
        parent.feat = best[static_cast<std::size_t>(s)].feat;
        parent.thresh = best[static_cast<std::size_t>(s)].thresh;
        parent.left = static_cast<int>(nodes.size());
        parent.right = static_cast<int>(nodes.size() + 1);
        nodes.emplace_back();
        nodes.emplace_back();
        next_level.push_back(parent.left);
        next_level.push_back(parent.right);
      }
      if (next_level.empty()) break;
      node_sum.resize(nodes.size(), 0.0);
      node_cnt.resize(nodes.size(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& noderef = nodes[static_cast<std::size_t>(node_of[i])];
        if (noderef.left < 0) continue;
        const double v = X.cols[static_cast<std::size_t>(noderef.feat)][rows[i]];
        node_of[i] = v <= noderef.thresh ? noderef.left : noderef.right;
        node_sum[static_cast<std::size_t>(node_of[i])] += resid[i];
        ++node_cnt[static_cast<std::size_t>(node_of[i])];
      }
      level = std::move(next_level);
    }

    for (std::size_t nd = 0; nd < nodes.size(); ++nd)
      if (nodes[nd].left < 0 && node_cnt[nd] > 0)
        nodes[nd].value = lr_ * node_sum[nd] / static_cast<double>(node_cnt[nd]);
    return nodes;
  }

  double eval_tree(const std::vector<TreeNode>& tree, const FeatureMatrix& X,
                   std::size_t row) const {
    int nd = 0;
    while (tree[static_cast<std::size_t>(nd)].left >= 0) {
      const auto& node = tree[static_cast<std::size_t>(nd)];
      nd = X.cols[static_cast<std::size_t>(node.feat)][row] <= node.thresh ? node.left
                                                                           : node.right;
    }
    return tree[static_cast<std::size_t>(nd)].value;
  }

  std::vector<std::string> names_;
  std::vector<ColumnRole> roles_;
  int depth_, rounds_;
  double lr_;
  double base_ = 0.0;
  std::vector<std::vector<TreeNode>> trees_;
};

// ------------------------------------------------------------------ knn ----

class KnnRegressor final : public BaseModel {
 public:
  KnnRegressor(const FeatureMatrix& X, const std::vector<double>& y,
               const std::vector<std::uint32_t>& rows, int k)
      : names_(X.names), roles_(X.roles), k_(std::min<std::size_t>(static_cast<std::size_t>(k),
                                                                   rows.size())) {
    if (k_ == 0) throw ValidationError("ensemble: knn needs a nonempty training set");
    std::vector<const std::vector<double>*> cols;
    for (const auto& c : X.cols) cols.push_back(&c);
    st_ = fit_standardizer(cols, {rows.begin(), rows.end()});
    const std::size_t p = X.ncols();
    train_.resize(rows.size() * p);
    train_y_.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < p; ++j)
        train_[i * p + j] = st_.transform(j, X.cols[j][rows[i]]);
      train_y_[i] = y[rows[i]];
    }
  }

  std::vector<double> predict(const FeatureMatrix& X) const override {
    check_schema(names_, roles_, X);
    const std::size_t n = X.rows(), p = names_.size();
    std::vector<double> q(n * p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) q[i * p + j] = st_.transform(j, X.cols[j][i]);
    std::vector<std::uint32_t> idx(n * k_);
    kernels::knn_indices(train_, train_y_.size(), p, q, n, k_, idx);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k_; ++j) s += train_y_[idx[i * k_ + j]];
      out[i] = s / static_cast<double>(k_);
    }
    return out;
  }

  std::string family() const override { return "knn"; }
  std::string hyperparams() const override { return "k=" + std::to_string(k_); }

 private:
  std::vector<std::string> names_;
  std::vector<ColumnRole> roles_;
  std::size_t k_;
  Standardizer st_;
  std::vector<double> train_;
  std::vector<double> train_y_;
};

double mse_on(const std::vector<double>& pred, const std::vector<double>& y,
              const std::vector<std::uint32_t>& rows) {
  double s = 0.0;
  for (std::uint32_t r : rows) {
    const double d = pred[r] - y[r];
    s += d * d;
  }
  return s / static_cast<double>(rows.size());
}

}  // namespace

std::unique_ptr<BaseModel> fit_ridge_interactions(const FeatureMatrix& X,
                                                  const std::vector<double>& y,
                                                  const std::vector<std::uint32_t>& rows,
                                                  double penalty) {
  return std::make_unique<RidgeInteractions>(X, y, rows, penalty);
}

std::unique_ptr<BaseModel> fit_boosted_trees(const FeatureMatrix& X, const std::vector<double>& y,
                                             const std::vector<std::uint32_t>& rows, int depth,
                                             int rounds, double learning_rate) {
  return std::make_unique<BoostedTrees>(X, y, rows, depth, rounds, learning_rate);
}

std::unique_ptr<BaseModel> fit_knn(const FeatureMatrix& X, const std::vector<double>& y,
                                   const std::vector<std::uint32_t>& rows, int k) {
  return std::make_unique<KnnRegressor>(X, y, rows, k);
}

std::vector<double> EnsembleModel::predict(const FeatureMatrix& X) const {
  check_schema(schema_names, schema_roles, X);
  std::vector<double> out(X.rows(), 0.0);
  for (std::size_t b = 0; b < bases.size(); ++b) {
    if (weights_[b] == 0.0) continue;
    const auto p = bases[b]->predict(X);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights_[b] * p[i];
  }
  return out;
}

std::vector<std::vector<double>> EnsembleModel::base_predictions(const FeatureMatrix& X) const {
  std::vector<std::vector<double>> out;
  out.reserve(bases.size());
  for (const auto& b : bases) out.push_back(b->predict(X));
  return out;
}

EnsembleModel fit_ensemble(const FeatureMatrix& features, const std::vector<double>& outcome,
                           const TrainValSplit& split, const EnsembleGrids& grids) {
  if (outcome.size() != features.rows())
    throw ValidationError("ensemble: outcome length does not match feature rows");
  for (double v : outcome)
    if (!std::isfinite(v)) throw ValidationError("ensemble: outcome contains non-finite values");
  if (split.val.size() < 10)
    throw ValidationError("ensemble: validation set has fewer than 10 nodes");
  if (split.train.empty()) throw ValidationError("ensemble: empty training set");
  {
    const double first = outcome[split.train.front()];
    bool constant = true;
    for (std::uint32_t r : split.train)
      if (outcome[r] != first) {
        constant = false;
        break;
      }
    if (constant) throw ValidationError("ensemble: outcome is constant on the training set");
  }

  const auto& tr = split.train;
  const auto& va = split.val;

  struct Tuned {
    std::shared_ptr<const BaseModel> model;
    std::vector<double> val_pred;
    double val_mse = std::numeric_limits<double>::infinity();
  };
  auto consider = [&](Tuned& best, std::unique_ptr<BaseModel> cand) {
    auto pred = cand->predict(features);
    const double mse = mse_on(pred, outcome, va);
    if (mse < best.val_mse) {
      best.val_mse = mse;
      best.model = std::move(cand);
      best.val_pred = std::move(pred);
    }
  };

  Tuned ridge_best, tree_best, knn_best;
  for (double pen : grids.ridge_penalties)
    consider(ridge_best, fit_ridge_interactions(features, outcome, tr, pen));
  for (int depth : grids.tree_depths)
    for (int rounds : grids.tree_rounds)
      consider(tree_best,
               fit_boosted_trees(features, outcome, tr, depth, rounds, grids.tree_learning_rate));
  for (int k : grids.knn_ks) consider(knn_best, fit_knn(features, outcome, tr, k));

  std::vector<Tuned*> picks = {&ridge_best, &tree_best, &knn_best};
  Eigen::MatrixXd P(static_cast<Eigen::Index>(va.size()), 3);
  Eigen::VectorXd yv(static_cast<Eigen::Index>(va.size()));
  for (std::size_t i = 0; i < va.size(); ++i) {
    yv[static_cast<Eigen::Index>(i)] = outcome[va[i]];
    for (int b = 0; b < 3; ++b)
      P(static_cast<Eigen::Index>(i), b) = picks[static_cast<std::size_t>(b)]->val_pred[va[i]];
  }
  Eigen::VectorXd w = linalg::nnls(P, yv);
  if (w.sum() <= 0.0) {
    // Degenerate blend: fall back to the single best family.
    int arg = 0;
    for (int b = 1; b < 3; ++b)
      if (picks[static_cast<std::size_t>(b)]->val_mse < picks[static_cast<std::size_t>(arg)]->val_mse)
        arg = b;
    w.setZero();
    w[arg] = 1.0;
  }
  w /= w.sum();

  EnsembleModel model;
  model.schema_names = features.names;
  model.schema_roles = features.roles;
  for (int b = 0; b < 3; ++b) {
    auto& t = *picks[static_cast<std::size_t>(b)];
    model.bases.push_back(t.model);
    model.weights_.push_back(w[b]);
    model.summary_.bases.push_back(
        {t.model->family(), t.model->hyperparams(), t.val_mse, w[b]});
  }
  model.summary_.n_train = tr.size();
  model.summary_.n_val = va.size();
  double blend = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    double pred = 0.0;
    for (int b = 0; b < 3; ++b)
      pred += w[b] * picks[static_cast<std::size_t>(b)]->val_pred[va[i]];
    const double d = pred - outcome[va[i]];
    blend += d * d;
  }
  model.summary_.blend_val_mse = blend / static_cast<double>(va.size());
  return model;
}

std::vector<double> residuals(const EnsembleModel& model, const FeatureMatrix& features,
                              const std::vector<double>& outcome) {
  if (outcome.size() != features.rows())
    throw ValidationError("ensemble: outcome length does not match feature rows");
  auto pred = model.predict(features);
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = outcome[i] - pred[i];
  return pred;
}

FeatureMatrix with_treatment(const FeatureMatrix& features, double a) {
  FeatureMatrix out = features;
  auto& col = out.cols[out.treatment_index()];
  std::fill(col.begin(), col.end(), a);
  return out;
}

}  // namespace scbench
