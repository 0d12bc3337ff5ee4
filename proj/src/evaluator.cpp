#include "scbench/evaluator.hpp"

#include <cmath>

#include "scbench/errors.hpp"

namespace scbench {

double true_ate(const SpaceDataset& ds) {
  if (ds.treatment_type != TreatmentType::binary)
    throw ValidationError("true_ate is defined for binary treatments only");
  const auto& c0 = ds.counterfactuals.at(0);
  const auto& c1 = ds.counterfactuals.at(1);
  double s = 0.0;
  for (std::size_t i = 0; i < c0.size(); ++i) s += c1[i] - c0[i];
  return s / static_cast<double>(c0.size());
}

std::vector<double> true_erf(const SpaceDataset& ds) {
  std::vector<double> out;
  out.reserve(ds.counterfactuals.size());
  for (const auto& col : ds.counterfactuals) out.push_back(mean_of(col));
  return out;
}

EvalReport eval_report(const CausalEstimates& est, const SpaceDataset& ds) {
  if (!est.ate && !est.erf && !est.ite) throw ValidationError("no estimates provided");
  const std::size_t n = ds.graph.n(), k = ds.grid.values.size();
  if (ds.counterfactuals.size() != k)
    throw ValidationError("dataset counterfactuals do not match its grid");

  EvalReport rep;
  rep.sigma_y = ds.sigma_y;
  if (!(rep.sigma_y > 0.0)) throw ValidationError("sigma_y must be positive");

  if (est.ate) {
    if (!std::isfinite(*est.ate)) throw ValidationError("ate estimate is not finite");
    rep.bias = std::fabs(*est.ate - true_ate(ds)) / rep.sigma_y;
  }

  if (est.erf) {
    if (est.erf->size() != k) throw ValidationError("erf estimate length does not match the grid");
    const std::vector<double> truth = true_erf(ds);
    double s = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = (*est.erf)[j];
      if (!std::isfinite(e)) continue;
      s += (e - truth[j]) * (e - truth[j]);
      ++used;
    }
    if (used == 0) throw ValidationError("erf estimate has no finite entries");
    rep.rmise = std::sqrt(s / static_cast<double>(used)) / rep.sigma_y;
  }

  if (est.ite) {
    if (est.ite->size() != k) throw ValidationError("ite estimate width does not match the grid");
    double s = 0.0;
    std::size_t used = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& col = (*est.ite)[j];
      if (col.size() != n) throw ValidationError("ite estimate height does not match node count");
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(col[i])) continue;
        const double d = ds.counterfactuals[j][i] - col[i];
        s += d * d;
        ++used;
      }
    }
    if (used == 0) throw ValidationError("ite estimate has no finite entries");
    rep.pehe = std::sqrt(s / static_cast<double>(used)) / rep.sigma_y;
  }
  return rep;
}

}  // namespace scbench
