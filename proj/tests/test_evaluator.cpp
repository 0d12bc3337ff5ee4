#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "scbench/errors.hpp"
#include "scbench/evaluator.hpp"
#include "scbench/rng.hpp"

using namespace scbench;

namespace {

// Hand-buildable dataset: k counterfactual columns over n nodes, sigma_y
// from the synthetic outcome.
SpaceDataset toy_dataset(std::size_t n, std::size_t k, std::uint64_t seed, bool binary) {
  SpaceDataset ds;
  ds.graph = path_graph(n);
  ds.node_ids = ds.graph.node_ids;
  ds.treatment_type = binary ? TreatmentType::binary : TreatmentType::continuous;
  ds.grid.type = ds.treatment_type;
  for (std::size_t j = 0; j < k; ++j) ds.grid.values.push_back(static_cast<double>(j));
  ds.treatment.assign(n, 0.0);
  ds.counterfactuals.assign(k, NodeField(n));
  for (std::size_t j = 0; j < k; ++j)
    rng::fill_normal(rng::derive_key(seed, "cf" + std::to_string(j)), ds.counterfactuals[j]);
  ds.synthetic_outcome = ds.counterfactuals[0];
  ds.sigma_y = std_pop(ds.synthetic_outcome);
  ds.masked_group_id = "Gtoy";
  return ds;
}

CausalEstimates oracle_estimates(const SpaceDataset& ds) {
  CausalEstimates est;
  if (ds.treatment_type == TreatmentType::binary) est.ate = true_ate(ds);
  est.erf = true_erf(ds);
  est.ite = ds.counterfactuals;
  return est;
}

}  // namespace

TEST_CASE("true_ate on shifted counterfactuals") {
  auto ds = toy_dataset(20, 2, 1, true);
  ds.counterfactuals[1] = ds.counterfactuals[0];
  CHECK(true_ate(ds) == 0.0);
  for (auto& v : ds.counterfactuals[1]) v += 2.0;
  CHECK(true_ate(ds) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("true_ate matches brute force and rejects continuous datasets") {
  auto ds = toy_dataset(7, 2, 2, true);
  double acc = 0.0;
  for (std::size_t i = 0; i < 7; ++i) acc += ds.counterfactuals[1][i] - ds.counterfactuals[0][i];
  CHECK(true_ate(ds) == doctest::Approx(acc / 7.0).epsilon(1e-14));

  auto cont = toy_dataset(7, 5, 2, false);
  CHECK_THROWS_AS(true_ate(cont), ValidationError);
}

TEST_CASE("true_erf: constants, per-column brute force, ate linkage") {
  auto ds = toy_dataset(9, 3, 3, false);
  for (auto& col : ds.counterfactuals) col.assign(9, 4.5);
  for (double v : true_erf(ds)) CHECK(v == 4.5);

  auto rnd = toy_dataset(9, 3, 4, false);
  const auto erf = true_erf(rnd);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = std::accumulate(rnd.counterfactuals[j].begin(), rnd.counterfactuals[j].end(), 0.0);
    CHECK(erf[j] == doctest::Approx(m / 9.0).epsilon(1e-14));
  }

  auto bin = toy_dataset(9, 2, 5, true);
  const auto e2 = true_erf(bin);
  CHECK(e2[1] - e2[0] == doctest::Approx(true_ate(bin)).epsilon(1e-14));
}

TEST_CASE("oracle estimates score zero on every metric") {
  auto ds = toy_dataset(15, 2, 6, true);
  const auto rep = eval_report(oracle_estimates(ds), ds);
  CHECK(*rep.bias == 0.0);
  CHECK(*rep.rmise == 0.0);
  CHECK(*rep.pehe == 0.0);
}

TEST_CASE("constant erf offset gives rmise = |c|/sigma_y") {
  auto ds = toy_dataset(25, 4, 7, false);
  CausalEstimates est;
  est.erf = true_erf(ds);
  const double c = -0.75;
  for (auto& v : *est.erf) v += c;
  const auto rep = eval_report(est, ds);
  CHECK(*rep.rmise == doctest::Approx(std::fabs(c) / ds.sigma_y).epsilon(1e-12));
  CHECK(!rep.bias);
  CHECK(!rep.pehe);
}

TEST_CASE("random estimates on a 5-node 3-level dataset match brute force") {
  auto ds = toy_dataset(5, 3, 8, false);
  CausalEstimates est;
  est.erf = std::vector<double>{0.3, -1.2, 0.9};
  est.ite = std::vector<NodeField>(3, NodeField(5));
  for (std::size_t j = 0; j < 3; ++j)
    rng::fill_normal(rng::derive_key(99, "ite" + std::to_string(j)), (*est.ite)[j]);

  const auto truth = true_erf(ds);
  double se = 0.0;
  for (std::size_t j = 0; j < 3; ++j) se += ((*est.erf)[j] - truth[j]) * ((*est.erf)[j] - truth[j]);
  double si = 0.0;
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 5; ++i) {
      const double d = ds.counterfactuals[j][i] - (*est.ite)[j][i];
      si += d * d;
    }
  const auto rep = eval_report(est, ds);
  CHECK(*rep.rmise == doctest::Approx(std::sqrt(se / 3.0) / ds.sigma_y).epsilon(1e-12));
  CHECK(*rep.pehe == doctest::Approx(std::sqrt(si / 15.0) / ds.sigma_y).epsilon(1e-12));
}

TEST_CASE("joint positive rescaling leaves normalized metrics unchanged") {
  auto ds = toy_dataset(12, 2, 9, true);
  CausalEstimates est;
  est.ate = 0.44;
  est.erf = std::vector<double>{0.1, 0.9};
  est.ite = std::vector<NodeField>(2, NodeField(12, 0.25));
  const auto rep = eval_report(est, ds);

  const double c = 37.5;
  auto scaled = ds;
  for (auto& col : scaled.counterfactuals)
    for (auto& v : col) v *= c;
  for (auto& v : scaled.synthetic_outcome) v *= c;
  scaled.sigma_y = ds.sigma_y * c;
  CausalEstimates est_c;
  est_c.ate = *est.ate * c;
  est_c.erf = *est.erf;
  for (auto& v : *est_c.erf) v *= c;
  est_c.ite = *est.ite;
  for (auto& col : *est_c.ite)
    for (auto& v : col) v *= c;
  const auto rep_c = eval_report(est_c, scaled);
  CHECK(*rep_c.bias == doctest::Approx(*rep.bias).epsilon(1e-9));
  CHECK(*rep_c.rmise == doctest::Approx(*rep.rmise).epsilon(1e-9));
  CHECK(*rep_c.pehe == doctest::Approx(*rep.pehe).epsilon(1e-9));
}

TEST_CASE("metrics are invariant under simultaneous node reordering") {
  auto ds = toy_dataset(10, 2, 10, true);
  CausalEstimates est;
  est.ate = 0.2;
  est.ite = std::vector<NodeField>(2, NodeField(10));
  for (std::size_t j = 0; j < 2; ++j)
    rng::fill_normal(rng::derive_key(11, "p" + std::to_string(j)), (*est.ite)[j]);
  const auto rep = eval_report(est, ds);

  std::vector<std::size_t> perm(10);
  std::iota(perm.begin(), perm.end(), 0u);
  std::reverse(perm.begin(), perm.end());
  auto pds = ds;
  auto pest = est;
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 10; ++i) {
      pds.counterfactuals[j][i] = ds.counterfactuals[j][perm[i]];
      (*pest.ite)[j][i] = (*est.ite)[j][perm[i]];
    }
  for (std::size_t i = 0; i < 10; ++i)
    pds.synthetic_outcome[i] = ds.synthetic_outcome[perm[i]];
  pds.sigma_y = std_pop(pds.synthetic_outcome);
  const auto prep = eval_report(pest, pds);
  CHECK(*prep.bias == doctest::Approx(*rep.bias).epsilon(1e-12));
  CHECK(*prep.pehe == doctest::Approx(*rep.pehe).epsilon(1e-12));
}

TEST_CASE("aggregation consistency: zero pehe with column-mean erf gives zero rmise") {
  auto ds = toy_dataset(8, 3, 12, false);
  CausalEstimates est;
  est.ite = ds.counterfactuals;
  est.erf = std::vector<double>(3);
  for (std::size_t j = 0; j < 3; ++j) (*est.erf)[j] = mean_of((*est.ite)[j]);
  const auto rep = eval_report(est, ds);
  CHECK(*rep.pehe == 0.0);
  CHECK(*rep.rmise == 0.0);
}

TEST_CASE("NaN entries are skipped, all-NaN estimates rejected") {
  auto ds = toy_dataset(6, 2, 13, true);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  CausalEstimates est;
  est.ite = ds.counterfactuals;  // start from the oracle
  (*est.ite)[0][2] = nan;
  (*est.ite)[1][4] = nan;
  const auto rep = eval_report(est, ds);
  CHECK(*rep.pehe == 0.0);  // remaining entries are exact

  // Perturb one finite entry; only that entry contributes.
  (*est.ite)[0][1] += 3.0;
  const auto rep2 = eval_report(est, ds);
  CHECK(*rep2.pehe == doctest::Approx(std::sqrt(9.0 / 10.0) / ds.sigma_y).epsilon(1e-12));

  CausalEstimates bad;
  bad.ite = std::vector<NodeField>(2, NodeField(6, nan));
  CHECK_THROWS_AS(eval_report(bad, ds), ValidationError);

  CausalEstimates erf_nan;
  erf_nan.erf = std::vector<double>{nan, 1.0};
  const auto truth = true_erf(ds);
  const auto rep3 = eval_report(erf_nan, ds);
  CHECK(*rep3.rmise == doctest::Approx(std::fabs(1.0 - truth[1]) / ds.sigma_y).epsilon(1e-12));
}

TEST_CASE("shape and input validation") {
  auto ds = toy_dataset(5, 2, 14, true);
  CausalEstimates none;
  CHECK_THROWS_AS(eval_report(none, ds), ValidationError);

  CausalEstimates wrong;
  wrong.erf = std::vector<double>{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(eval_report(wrong, ds), ValidationError);

  CausalEstimates tall;
  tall.ite = std::vector<NodeField>(2, NodeField(9, 0.0));
  CHECK_THROWS_AS(eval_report(tall, ds), ValidationError);

  CausalEstimates ok;
  ok.ate = 0.0;
  auto zero_sd = ds;
  zero_sd.sigma_y = 0.0;
  CHECK_THROWS_AS(eval_report(ok, zero_sd), ValidationError);
}
