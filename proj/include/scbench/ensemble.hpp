#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "scbench/split.hpp"
#include "scbench/table.hpp"

namespace scbench {

struct EnsembleGrids {
  std::vector<double> ridge_penalties = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  std::vector<int> tree_depths = {2, 3, 4};
  std::vector<int> tree_rounds = {100, 300};
  double tree_learning_rate = 0.1;
  std::vector<int> knn_ks = {5, 15, 50};
};

// A fitted base regressor. Fitting sees only the rows it was given; predict
// is a pure function of (model, features).
class BaseModel {
 public:
  virtual ~BaseModel() = default;
  virtual std::vector<double> predict(const FeatureMatrix& X) const = 0;
  virtual std::string family() const = 0;
  virtual std::string hyperparams() const = 0;
};

std::unique_ptr<BaseModel> fit_ridge_interactions(const FeatureMatrix& X,
                                                  const std::vector<double>& y,
                                                  const std::vector<std::uint32_t>& rows,
                                                  double penalty);
std::unique_ptr<BaseModel> fit_boosted_trees(const FeatureMatrix& X, const std::vector<double>& y,
                                             const std::vector<std::uint32_t>& rows, int depth,
                                             int rounds, double learning_rate);
std::unique_ptr<BaseModel> fit_knn(const FeatureMatrix& X, const std::vector<double>& y,
                                   const std::vector<std::uint32_t>& rows, int k);

struct BaseSummary {
  std::string family;
  std::string hyperparams;
  double val_mse = 0.0;
  double weight = 0.0;
};

struct EnsembleSummary {
  std::vector<BaseSummary> bases;
  double blend_val_mse = 0.0;
  std::size_t n_train = 0, n_val = 0;
};

class EnsembleModel {
 public:
  std::vector<double> predict(const FeatureMatrix& X) const;
  // Per-base predictions in summary order (used by leakage checks).
  std::vector<std::vector<double>> base_predictions(const FeatureMatrix& X) const;
  const EnsembleSummary& summary() const { return summary_; }
  const std::vector<double>& weights() const { return weights_; }

  std::vector<std::shared_ptr<const BaseModel>> bases;
  std::vector<double> weights_;  // nonnegative, sums to 1
  std::vector<std::string> schema_names;
  std::vector<ColumnRole> schema_roles;
  EnsembleSummary summary_;
};

// Each family grid-tuned by validation MSE (fit on train rows, scored on val
// rows); blend weights = nonnegative least squares of the validation outcome
// on base validation predictions, renormalized to sum 1. Validation outcomes
// influence only tuning and weights, never base-model parameters.
EnsembleModel fit_ensemble(const FeatureMatrix& features, const std::vector<double>& outcome,
                           const TrainValSplit& split, const EnsembleGrids& grids = {});

std::vector<double> residuals(const EnsembleModel& model, const FeatureMatrix& features,
                              const std::vector<double>& outcome);

// Copy of features with the treatment column set to the constant a.
FeatureMatrix with_treatment(const FeatureMatrix& features, double a);

}  // namespace scbench
