#include "scbench/collection.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "scbench/errors.hpp"
#include "scbench/gmrf.hpp"
#include "scbench/rng.hpp"

namespace scbench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string IngestReport::to_string() const {
  std::ostringstream os;
  os << "ingested " << n_nodes << " nodes, " << n_edges << " edges, " << n_columns << " columns ("
     << n_isolated << " isolated nodes)";
  if (!imputed_columns.empty()) {
    os << "; imputed";
    for (const auto& c : imputed_columns) os << " " << c;
  }
  return os.str();
}

namespace {

json read_json_file(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw ValidationError("cannot open " + p.string());
  json j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw ValidationError("malformed JSON in " + p.string());
  return j;
}

void check_groups(const DataCollection& c) {
  std::set<std::string> seen;
  for (const auto& [name, cols] : c.group_map) {
    if (name.empty()) throw ValidationError("collection group with empty name");
    if (cols.empty()) throw ValidationError("collection group '" + name + "' has no columns");
    for (const auto& col : cols) {
      if (!c.table.has_col(col))
        throw ValidationError("group '" + name + "' references unknown column '" + col + "'");
      if (!seen.insert(col).second)
        throw ValidationError("column '" + col + "' appears in more than one group");
    }
  }
}

// Draw standardized to mean 0, population sd 1. rho = 0 short-circuits to
// iid normals: the CAR precision at rho 0 is the degree matrix, not I.
NodeField standardized_field(const SpatialGraph& g, double rho, std::uint64_t key) {
  NodeField x(g.n());
  if (rho == 0.0) {
    rng::fill_normal(key, x);
  } else {
    CarFactorization f(g, rho);
    x = f.draw(key);
  }
  const double m = mean_of(x);
  for (double& v : x) v -= m;
  const double s = std_pop(x);
  if (s <= 0.0) throw NumericError("degenerate covariate draw");
  for (double& v : x) v /= s;
  return x;
}

}  // namespace

DataCollection ingest(const std::string& dir, IngestReport* report) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ValidationError("collection directory not found: " + dir);

  Csv nodes = read_csv_file((root / "nodes.csv").string());
  if (nodes.header.empty() || nodes.header.front() != "node_id")
    throw ValidationError("nodes.csv must start with a node_id column");

  DataCollection c;
  c.node_ids.reserve(nodes.rows.size());
  for (const auto& row : nodes.rows) c.node_ids.push_back(row.front());

  for (std::size_t j = 1; j < nodes.header.size(); ++j) {
    std::vector<double> col(nodes.rows.size());
    for (std::size_t i = 0; i < nodes.rows.size(); ++i) {
      auto v = parse_cell(nodes.rows[i][j]);
      col[i] = v ? *v : std::numeric_limits<double>::quiet_NaN();
    }
    c.table.add_col(nodes.header[j], ColumnRole::covariate, std::move(col));
  }

  Csv edges = read_csv_file((root / "edges.csv").string());
  if (edges.header != std::vector<std::string>{"src", "dst"})
    throw ValidationError("edges.csv must have header src,dst");
  std::vector<std::pair<std::string, std::string>> e;
  e.reserve(edges.rows.size());
  for (const auto& row : edges.rows) e.emplace_back(row[0], row[1]);

  std::vector<std::array<double, 2>> coords;
  if (fs::exists(root / "coords.csv")) {
    Csv cs = read_csv_file((root / "coords.csv").string());
    if (cs.header != std::vector<std::string>{"node_id", "x", "y"})
      throw ValidationError("coords.csv must have header node_id,x,y");
    std::map<std::string, std::array<double, 2>> by_id;
    for (const auto& row : cs.rows) {
      if (!by_id.emplace(row[0], std::array<double, 2>{parse_double(row[1]), parse_double(row[2])})
               .second)
        throw ValidationError("coords.csv repeats node " + row[0]);
    }
    coords.reserve(c.node_ids.size());
    for (const auto& id : c.node_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ValidationError("coords.csv is missing node " + id);
      coords.push_back(it->second);
    }
    if (by_id.size() != c.node_ids.size())
      throw ValidationError("coords.csv lists nodes absent from nodes.csv");
  }

  // build_graph rejects duplicate ids and edge endpoints with no table row.
  c.graph = build_graph(c.node_ids, e, std::move(coords));

  json meta = read_json_file(root / "collection.json");
  if (meta.contains("provenance")) c.provenance = meta.at("provenance").get<std::string>();
  if (meta.contains("truth"))
    for (const auto& [k, v] : meta.at("truth").items()) c.truth[k] = v.get<double>();
  if (meta.contains("groups"))
    for (const auto& g : meta.at("groups"))
      c.group_map.emplace_back(g.at("name").get<std::string>(),
                               g.at("columns").get<std::vector<std::string>>());
  check_groups(c);

  IngestReport rep;
  rep.n_nodes = c.graph.n();
  rep.n_edges = c.graph.edge_count();
  rep.n_columns = c.table.ncols();
  for (std::size_t i = 0; i < c.graph.n(); ++i) rep.n_isolated += c.graph.isolated(i);
  rep.imputed_columns = impute_missing(c.table);
  if (report) *report = rep;
  return c;
}

void write_collection(const DataCollection& c, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);

  {
    std::ofstream os(root / "nodes.csv");
    std::vector<const std::vector<double>*> cols;
    for (const auto& col : c.table.cols) cols.push_back(&col);
    write_columns_csv(os, c.node_ids, c.table.names, cols);
  }
  {
    std::ofstream os(root / "edges.csv");
    write_edge_list(os, c.graph);
  }
  if (c.graph.has_coords()) {
    std::ofstream os(root / "coords.csv");
    write_coords(os, c.graph);
  }

  json meta;
  meta["provenance"] = c.provenance;
  meta["truth"] = c.truth;
  meta["groups"] = json::array();
  for (const auto& [name, cols] : c.group_map)
    meta["groups"].push_back({{"name", name}, {"columns", cols}});
  std::ofstream os(root / "collection.json");
  os << meta.dump(2) << "\n";
}

DataCollection demo_collection(std::size_t n_grid, std::size_t n_covariates,
                               double confounding_strength, std::uint64_t seed,
                               bool binary_treatment) {
  if (n_grid < 8) throw ValidationError("demo_collection requires n_grid >= 8");
  if (n_covariates < 3) throw ValidationError("demo_collection requires >= 3 covariates");
  if (confounding_strength < 0.0 || confounding_strength > 1.0)
    throw ValidationError("confounding_strength must lie in [0, 1]");

  DataCollection c;
  c.graph = grid_graph(n_grid, n_grid, /*queen=*/true);
  c.node_ids = c.graph.node_ids;
  const std::size_t n = c.graph.n();

  // conf is the designated confounder (strongly smooth); middles step down
  // in spatial correlation; the last column is pure iid noise that neither
  // the treatment nor the outcome touches.
  const double mid_rhos[] = {0.85, 0.6, 0.3, 0.0};
  std::vector<std::string> mids;
  c.table.add_col("conf", ColumnRole::covariate,
                  standardized_field(c.graph, 0.9, rng::derive_key(seed, "cov:conf")));
  for (std::size_t j = 1; j + 1 < n_covariates; ++j) {
    std::string name = "x" + std::to_string(j + 1);
    double rho = mid_rhos[(j - 1) % 4];
    c.table.add_col(name, ColumnRole::covariate,
                    standardized_field(c.graph, rho, rng::derive_key(seed, "cov:" + name)));
    mids.push_back(std::move(name));
  }
  c.table.add_col("noise", ColumnRole::covariate,
                  standardized_field(c.graph, 0.0, rng::derive_key(seed, "cov:noise")));

  const auto& conf = c.table.col("conf");
  NodeField eps(n);
  rng::fill_normal(rng::derive_key(seed, "treat"), eps);
  const double s = confounding_strength;
  const double comp = std::sqrt(1.0 - s * s);
  NodeField a(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = s * conf[i] + comp * eps[i];
    a[i] = binary_treatment ? (eta > 0.0 ? 1.0 : 0.0) : eta;
  }

  const double tau = 1.0, b_conf = 1.0, b_x2 = 0.8, b_x3 = 0.5, sd_r = 0.5;
  NodeField r = standardized_field(c.graph, 0.5, rng::derive_key(seed, "resid"));
  NodeField y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = tau * a[i] + b_conf * conf[i] + sd_r * r[i];
    if (!mids.empty()) y[i] += b_x2 * std::tanh(c.table.col(mids[0])[i]);
    if (mids.size() > 1) y[i] += b_x3 * c.table.col(mids[1])[i];
  }
  c.table.add_col("a", ColumnRole::covariate, std::move(a));
  c.table.add_col("y", ColumnRole::covariate, std::move(y));

  c.group_map.emplace_back("conf", std::vector<std::string>{"conf"});
  if (!mids.empty()) c.group_map.emplace_back("mid", mids);
  c.group_map.emplace_back("noise", std::vector<std::string>{"noise"});

  c.provenance = "synthetic demo lattice";
  c.truth = {{"tau", tau},
             {"beta_conf", b_conf},
             {"beta_x2", mids.empty() ? 0.0 : b_x2},
             {"beta_x3", mids.size() > 1 ? b_x3 : 0.0},
             {"sd_resid", sd_r},
             {"strength", s},
             {"binary", binary_treatment ? 1.0 : 0.0}};
  return c;
}

}  // namespace scbench
