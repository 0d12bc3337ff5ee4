#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scbench {

enum class ColumnRole { covariate, treatment };

// Named numeric columns aligned to a SpatialGraph's node order.
// Column names are unique; exactly one column may carry the treatment role.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<ColumnRole> roles;
  std::vector<std::vector<double>> cols;

  std::size_t rows() const { return cols.empty() ? 0 : cols.front().size(); }
  std::size_t ncols() const { return cols.size(); }
  bool has_col(std::string_view name) const;
  std::size_t col_index(std::string_view name) const;  // throws if absent
  const std::vector<double>& col(std::string_view name) const;
  void add_col(std::string name, ColumnRole role, std::vector<double> values);
  std::size_t treatment_index() const;  // throws unless exactly one
  std::vector<std::size_t> covariate_indices() const;
};

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);  // throws ValidationError
// Missing markers ("", "na", "nan", any case) map to nullopt.
std::optional<double> parse_cell(std::string_view s);

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
// Comma-separated, first line is the header; cells contain no quoting.
Csv read_csv(std::istream& is);
Csv read_csv_file(const std::string& path);

// Header then one row per node; values via format_double.
void write_columns_csv(std::ostream& os, const std::vector<std::string>& node_ids,
                       const std::vector<std::string>& names,
                       const std::vector<const std::vector<double>*>& cols);
void write_matrix_csv(std::ostream& os, const std::vector<std::string>& node_ids,
                      const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& matrix_rows);

// Column means/sds over the given rows (all rows when empty); sd of a
// constant column is forced to 1 so transforms stay finite.
struct Standardizer {
  std::vector<double> mean, sd;
  double transform(std::size_t col, double v) const { return (v - mean[col]) / sd[col]; }
};
Standardizer fit_standardizer(const std::vector<const std::vector<double>*>& cols,
                              const std::vector<std::size_t>& rows = {});

// Median-imputes missing entries in place and appends one companion
// indicator column "<name>_missing" per affected column; returns the
// affected names. A fully missing column is an error.
std::vector<std::string> impute_missing(FeatureMatrix& fm);

double mean_of(const std::vector<double>& v);
// Population (divide-by-n) standard deviation.
double std_pop(const std::vector<double>& v);
double median_of(std::vector<double> v);  // by value: sorts its copy
double quantile_of(std::vector<double> v, double q);  // type-7 interpolation

}  // namespace scbench
