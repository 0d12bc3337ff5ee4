#include "scbench/table.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "scbench/errors.hpp"
#include "scbench/kernels.hpp"

namespace scbench {

bool FeatureMatrix::has_col(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t FeatureMatrix::col_index(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw ValidationError("table: unknown column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

const std::vector<double>& FeatureMatrix::col(std::string_view name) const {
  return cols[col_index(name)];
}

void FeatureMatrix::add_col(std::string name, ColumnRole role, std::vector<double> values) {
  if (has_col(name)) throw ValidationError("table: duplicate column '" + name + "'");
  if (!cols.empty() && values.size() != rows())
    throw ValidationError("table: column '" + name + "' has mismatched length");
  names.push_back(std::move(name));
  roles.push_back(role);
  cols.push_back(std::move(values));
}

std::size_t FeatureMatrix::treatment_index() const {
  std::size_t found = ncols();
  for (std::size_t j = 0; j < ncols(); ++j)
    if (roles[j] == ColumnRole::treatment) {
      if (found != ncols()) throw ValidationError("table: multiple treatment columns");
      found = j;
    }
  if (found == ncols()) throw ValidationError("table: no treatment column");
  return found;
}

std::vector<std::size_t> FeatureMatrix::covariate_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < ncols(); ++j)
    if (roles[j] == ColumnRole::covariate) out.push_back(j);
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ValidationError("table: malformed number '" + std::string(s) + "'");
  return v;
}

std::optional<double> parse_cell(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "na" || lower == "nan") return std::nullopt;
  return parse_double(s);
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

Csv read_csv(std::istream& is) {
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_commas(line);
    if (first) {
      csv.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != csv.header.size())
      throw ValidationError("table: row with " + std::to_string(cells.size()) +
                            " cells, header has " + std::to_string(csv.header.size()));
    csv.rows.push_back(std::move(cells));
  }
  if (first) throw ValidationError("table: empty delimited file");
  return csv;
}

Csv read_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("table: cannot open '" + path + "'");
  return read_csv(is);
}

void write_columns_csv(std::ostream& os, const std::vector<std::string>& node_ids,
                       const std::vector<std::string>& names,
                       const std::vector<const std::vector<double>*>& cols) {
  assert(names.size() == cols.size());
  os << "node_id";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t r = 0; r < node_ids.size(); ++r) {
    os << node_ids[r];
    for (const auto* c : cols) os << ',' << format_double((*c)[r]);
    os << '\n';
  }
}

void write_matrix_csv(std::ostream& os, const std::vector<std::string>& node_ids,
                      const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& matrix_rows) {
  os << "node_id";
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t r = 0; r < node_ids.size(); ++r) {
    os << node_ids[r];
    for (double v : matrix_rows[r]) os << ',' << format_double(v);
    os << '\n';
  }
}

Standardizer fit_standardizer(const std::vector<const std::vector<double>*>& cols,
                              const std::vector<std::size_t>& rows) {
  Standardizer st;
  st.mean.resize(cols.size());
  st.sd.resize(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const auto& c = *cols[j];
    double m = 0.0, s2 = 0.0;
    const std::size_t n = rows.empty() ? c.size() : rows.size();
    if (n == 0) throw ValidationError("table: standardizer over empty row set");
    if (rows.empty()) {
      m = kernels::sum(c) / static_cast<double>(n);
      for (double v : c) s2 += (v - m) * (v - m);
    } else {
      for (std::size_t r : rows) m += c[r];
      m /= static_cast<double>(n);
      for (std::size_t r : rows) s2 += (c[r] - m) * (c[r] - m);
    }
    const double sd = std::sqrt(s2 / static_cast<double>(n));
    st.mean[j] = m;
    st.sd[j] = sd > 0.0 ? sd : 1.0;
  }
  return st;
}

std::vector<std::string> impute_missing(FeatureMatrix& fm) {
  std::vector<std::string> affected;
  const std::size_t base_cols = fm.ncols();
  for (std::size_t j = 0; j < base_cols; ++j) {
    auto& c = fm.cols[j];
    std::vector<double> present;
    present.reserve(c.size());
    for (double v : c)
      if (!std::isnan(v)) present.push_back(v);
    if (present.size() == c.size()) continue;
    if (present.empty())
      throw ValidationError("table: column '" + fm.names[j] + "' is entirely missing");
    const double med = median_of(std::move(present));
    std::vector<double> indicator(c.size(), 0.0);
    for (std::size_t r = 0; r < c.size(); ++r)
      if (std::isnan(c[r])) {
        c[r] = med;
        indicator[r] = 1.0;
      }
    affected.push_back(fm.names[j]);
    fm.add_col(fm.names[j] + "_missing", ColumnRole::covariate, std::move(indicator));
  }
  return affected;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw ValidationError("table: mean of empty vector");
  return kernels::sum(v) / static_cast<double>(v.size());
}

double std_pop(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s2 = 0.0;
  for (double x : v) s2 += (x - m) * (x - m);
  return std::sqrt(s2 / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) { return quantile_of(std::move(v), 0.5); }

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) throw ValidationError("table: quantile of empty vector");
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - std::floor(h);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace scbench
