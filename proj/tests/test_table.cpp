#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "scbench/errors.hpp"
#include "scbench/table.hpp"

using namespace scbench;

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.0, -0.0, 1.0, -1.5, 0.1, 1e-300, 3.141592653589793, 12345.6789e17,
                   std::numeric_limits<double>::denorm_min()}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("parse_cell maps missing markers to nullopt") {
  CHECK(!parse_cell("").has_value());
  CHECK(!parse_cell("NA").has_value());
  CHECK(!parse_cell("nan").has_value());
  CHECK(parse_cell("2.5").value() == 2.5);
  CHECK_THROWS_AS(parse_cell("abc"), ValidationError);
}

TEST_CASE("csv reader validates row widths") {
  std::istringstream ok("node_id,a,b\n1,2,3\n4,5,6\n");
  const auto csv = read_csv(ok);
  CHECK(csv.header.size() == 3);
  CHECK(csv.rows.size() == 2);
  CHECK(csv.rows[1][2] == "6");
  std::istringstream bad("a,b\n1,2,3\n");
  CHECK_THROWS_AS(read_csv(bad), ValidationError);
}

TEST_CASE("csv write/read/write is byte-identical") {
  std::vector<std::string> ids = {"n1", "n2", "n3"};
  std::vector<double> a = {1.0 / 3.0, -2.718281828459045, 1e-17};
  std::vector<double> b = {0.0, 5.0, -0.1};
  std::ostringstream first;
  write_columns_csv(first, ids, {"a", "b"}, {&a, &b});
  std::istringstream in(first.str());
  const auto csv = read_csv(in);
  std::vector<double> a2, b2;
  std::vector<std::string> ids2;
  for (const auto& row : csv.rows) {
    ids2.push_back(row[0]);
    a2.push_back(parse_double(row[1]));
    b2.push_back(parse_double(row[2]));
  }
  std::ostringstream second;
  write_columns_csv(second, ids2, {"a", "b"}, {&a2, &b2});
  CHECK(first.str() == second.str());
}

TEST_CASE("feature matrix enforces unique names and single treatment") {
  FeatureMatrix fm;
  fm.add_col("x1", ColumnRole::covariate, {1.0, 2.0});
  CHECK_THROWS_AS(fm.add_col("x1", ColumnRole::covariate, {0.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(fm.treatment_index(), ValidationError);
  fm.add_col("a", ColumnRole::treatment, {0.0, 1.0});
  CHECK(fm.treatment_index() == 1);
  CHECK(fm.covariate_indices() == std::vector<std::size_t>{0});
}

TEST_CASE("imputation fills medians and appends indicator columns") {
  FeatureMatrix fm;
  const double nan = std::nan("");
  fm.add_col("x1", ColumnRole::covariate, {1.0, nan, 3.0, nan, 100.0});
  fm.add_col("x2", ColumnRole::covariate, {1.0, 2.0, 3.0, 4.0, 5.0});
  const auto affected = impute_missing(fm);
  CHECK(affected == std::vector<std::string>{"x1"});
  CHECK(fm.ncols() == 3);  // one indicator per column with missingness
  CHECK(fm.col("x1")[1] == 3.0);  // median of {1,3,100}
  CHECK(fm.col("x1_missing") == std::vector<double>{0.0, 1.0, 0.0, 1.0, 0.0});
  FeatureMatrix all_missing;
  all_missing.add_col("x", ColumnRole::covariate, {nan, nan});
  CHECK_THROWS_AS(impute_missing(all_missing), ValidationError);
}

TEST_CASE("standardizer uses requested rows and guards constant columns") {
  std::vector<double> c1 = {0.0, 10.0, 20.0, 1000.0};
  std::vector<double> c2 = {5.0, 5.0, 5.0, 5.0};
  const auto st = fit_standardizer({&c1, &c2}, {0, 1, 2});
  CHECK(st.mean[0] == 10.0);
  CHECK(st.sd[1] == 1.0);
  CHECK(st.transform(1, 5.0) == 0.0);
}

TEST_CASE("quantile interpolation matches closed forms") {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(median_of(v) == 2.5);
  CHECK(quantile_of(v, 0.0) == 1.0);
  CHECK(quantile_of(v, 1.0) == 4.0);
  CHECK(quantile_of(v, 1.0 / 3.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std_pop({1.0, 1.0, 1.0}) == 0.0);
  CHECK(std_pop({0.0, 2.0}) == 1.0);
}
