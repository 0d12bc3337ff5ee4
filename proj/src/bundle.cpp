#include "scbench/bundle.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "config_io.hpp"
#include "scbench/errors.hpp"

namespace scbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

json env_config_json(const EnvConfig& cfg) {
  json groups = json::array();
  for (const auto& [name, cols] : cfg.covariate_groups)
    groups.push_back({{"name", name}, {"columns", cols}});
  return json{{"treatment", cfg.treatment},
              {"outcome", cfg.outcome},
              {"treatment_type", to_string(cfg.treatment_type)},
              {"outcome_transform", to_string(cfg.outcome_transform)},
              {"grid_size", cfg.grid_size},
              {"seed", cfg.seed},
              {"split",
               {{"alpha", cfg.split.alpha},
                {"levels", cfg.split.levels},
                {"buffer", cfg.split.buffer}}},
              {"covariate_groups", groups}};
}

EnvConfig env_config_parse(const json& j) {
  EnvConfig cfg;
  try {
    cfg.treatment = j.at("treatment").get<std::string>();
    cfg.outcome = j.at("outcome").get<std::string>();
    cfg.treatment_type = treatment_type_from(j.at("treatment_type").get<std::string>());
    if (j.contains("outcome_transform"))
      cfg.outcome_transform = outcome_transform_from(j.at("outcome_transform").get<std::string>());
    if (j.contains("grid_size")) cfg.grid_size = j.at("grid_size").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.contains("alpha")) cfg.split.alpha = s.at("alpha").get<double>();
      if (s.contains("levels")) cfg.split.levels = s.at("levels").get<std::uint32_t>();
      if (s.contains("buffer")) cfg.split.buffer = s.at("buffer").get<std::uint32_t>();
    }
    for (const auto& g : j.at("covariate_groups"))
      cfg.covariate_groups.emplace_back(g.at("name").get<std::string>(),
                                        g.at("columns").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad env config: ") + e.what());
  }
  return cfg;
}

json read_json_doc(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open " + path);
  json j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw ValidationError("malformed JSON in " + path);
  return j;
}

void write_json_doc(const json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path);
  os << j.dump(2) << "\n";
}

}  // namespace detail

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double json_opt_double(const json& j, const char* key, double fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<double>() : fallback;
}

void write_field_csv(const fs::path& p, const std::vector<std::string>& node_ids,
                     const std::vector<std::string>& names,
                     const std::vector<const std::vector<double>*>& cols) {
  std::ofstream os(p);
  if (!os) throw ValidationError("cannot write " + p.string());
  write_columns_csv(os, node_ids, names, cols);
}

void write_cf_csv(const fs::path& p, const std::vector<std::string>& node_ids,
                  const std::vector<NodeField>& cf) {
  std::vector<std::string> names;
  std::vector<const std::vector<double>*> cols;
  for (std::size_t j = 0; j < cf.size(); ++j) {
    names.push_back("cf" + std::to_string(j));
    cols.push_back(&cf[j]);
  }
  write_field_csv(p, node_ids, names, cols);
}

struct LoadedTable {
  std::vector<std::string> node_ids, names;
  std::vector<std::vector<double>> cols;
};

LoadedTable read_table(const fs::path& p) {
  Csv csv = read_csv_file(p.string());
  if (csv.header.empty() || csv.header.front() != "node_id")
    throw ValidationError(p.string() + " must start with a node_id column");
  LoadedTable t;
  for (const auto& row : csv.rows) t.node_ids.push_back(row.front());
  for (std::size_t j = 1; j < csv.header.size(); ++j) {
    t.names.push_back(csv.header[j]);
    std::vector<double> col(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
      auto v = parse_cell(csv.rows[i][j]);
      col[i] = v ? *v : std::numeric_limits<double>::quiet_NaN();
    }
    t.cols.push_back(std::move(col));
  }
  return t;
}

SpatialGraph read_graph(const fs::path& dir, const std::vector<std::string>& node_ids) {
  Csv edges = read_csv_file((dir / "edges.csv").string());
  if (edges.header != std::vector<std::string>{"src", "dst"})
    throw ValidationError("edges.csv must have header src,dst");
  std::vector<std::pair<std::string, std::string>> e;
  for (const auto& row : edges.rows) e.emplace_back(row[0], row[1]);

  std::vector<std::array<double, 2>> coords;
  if (fs::exists(dir / "coords.csv")) {
    LoadedTable ct = read_table(dir / "coords.csv");
    if (ct.node_ids != node_ids) throw ValidationError("coords.csv node order mismatch");
    coords.resize(node_ids.size());
    for (std::size_t i = 0; i < node_ids.size(); ++i)
      coords[i] = {ct.cols[0][i], ct.cols[1][i]};
  }
  return build_graph(node_ids, e, std::move(coords));
}

void write_graph_files(const SpatialGraph& g, const fs::path& dir) {
  {
    std::ofstream os(dir / "edges.csv");
    write_edge_list(os, g);
  }
  if (g.has_coords()) {
    std::ofstream os(dir / "coords.csv");
    write_coords(os, g);
  }
}

json grid_meta(const TreatmentGrid& g) {
  return json{{"type", to_string(g.type)},
              {"degraded", g.degraded},
              {"binary_levels", {g.binary_levels[0], g.binary_levels[1]}}};
}

TreatmentGrid grid_from(const json& meta, std::vector<double> values) {
  TreatmentGrid g;
  g.values = std::move(values);
  g.type = treatment_type_from(meta.at("type").get<std::string>());
  g.degraded = meta.at("degraded").get<bool>();
  g.binary_levels = {meta.at("binary_levels")[0].get<double>(),
                     meta.at("binary_levels")[1].get<double>()};
  return g;
}

}  // namespace

std::string config_digest(const std::string& canonical_json) {
  return hex64(fnv1a64(canonical_json));
}

void write_manifest(const RunManifest& m, const std::string& dir) {
  json j{{"command", m.command},       {"config_digest", m.config_digest},
         {"seed", m.seed},             {"tool_version", m.tool_version},
         {"started_at", m.started_at}, {"finished_at", m.finished_at},
         {"outputs", m.outputs}};
  detail::write_json_doc(j, (fs::path(dir) / "manifest.json").string());
}

void write_env_bundle(const SpaceEnv& env, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);

  detail::write_json_doc(detail::env_config_json(env.config), (root / "config.json").string());

  {
    std::vector<const std::vector<double>*> cols;
    for (const auto& c : env.features.cols) cols.push_back(&c);
    write_field_csv(root / "features.csv", env.node_ids, env.features.names, cols);
  }
  write_field_csv(root / "outcome.csv", env.node_ids,
                  {"observed", "transformed", "synthetic", "residual_fitted", "residual_sampled"},
                  {&env.observed_outcome, &env.transformed_outcome, &env.synthetic_outcome,
                   &env.residual_fitted, &env.residual_sampled});
  write_cf_csv(root / "counterfactuals.csv", env.node_ids, env.counterfactuals);

  {
    std::ofstream os(root / "grid.csv");
    os << "value\n";
    for (double v : env.grid.values) os << format_double(v) << "\n";
  }

  {
    std::vector<std::uint8_t> roles = split_roles(env.graph, env.split);
    std::ofstream os(root / "split.csv");
    os << "node_id,role\n";
    for (std::size_t i = 0; i < roles.size(); ++i)
      os << env.node_ids[i] << "," << static_cast<int>(roles[i]) << "\n";
  }

  write_graph_files(env.graph, root);

  const auto& d = env.diagnostics;
  json diag{{"gmrf", {{"rho", env.gmrf.rho}, {"lambda", env.gmrf.lambda}, {"seed", env.gmrf.seed}}},
            {"moran_fitted", d.moran_fitted},
            {"moran_sampled", d.moran_sampled},
            {"std_fitted", d.std_fitted},
            {"std_sampled", d.std_sampled},
            {"hist_edges", d.hist_edges},
            {"hist_fitted", d.hist_fitted},
            {"hist_sampled", d.hist_sampled},
            {"grid_gap_max", d.grid_gap_max},
            {"grid_gap_mean", d.grid_gap_mean},
            {"grid", grid_meta(env.grid)}};
  detail::write_json_doc(diag, (root / "diagnostics.json").string());

  json summary;
  if (env.model) {
    const auto& s = env.model->summary();
    json bases = json::array();
    for (const auto& b : s.bases)
      bases.push_back({{"family", b.family},
                       {"hyperparams", b.hyperparams},
                       {"val_mse", b.val_mse},
                       {"weight", b.weight}});
    summary = {{"bases", bases},
               {"blend_val_mse", s.blend_val_mse},
               {"n_train", s.n_train},
               {"n_val", s.n_val}};
  }
  detail::write_json_doc(summary, (root / "model_summary.json").string());
}

SpaceEnv read_env_bundle(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ValidationError("env bundle not found: " + dir);

  SpaceEnv env;
  env.config = detail::env_config_parse(detail::read_json_doc((root / "config.json").string()));

  LoadedTable ft = read_table(root / "features.csv");
  env.node_ids = ft.node_ids;
  for (std::size_t j = 0; j < ft.names.size(); ++j)
    env.features.add_col(ft.names[j],
                         ft.names[j] == env.config.treatment ? ColumnRole::treatment
                                                             : ColumnRole::covariate,
                         std::move(ft.cols[j]));

  LoadedTable ot = read_table(root / "outcome.csv");
  auto col_of = [&](const char* name) -> std::vector<double>& {
    for (std::size_t j = 0; j < ot.names.size(); ++j)
      if (ot.names[j] == name) return ot.cols[j];
    throw ValidationError(std::string("outcome.csv lacks column ") + name);
  };
  env.observed_outcome = std::move(col_of("observed"));
  env.transformed_outcome = std::move(col_of("transformed"));
  env.synthetic_outcome = std::move(col_of("synthetic"));
  env.residual_fitted = std::move(col_of("residual_fitted"));
  env.residual_sampled = std::move(col_of("residual_sampled"));

  LoadedTable cf = read_table(root / "counterfactuals.csv");
  env.counterfactuals = std::move(cf.cols);

  env.graph = read_graph(root, env.node_ids);

  Csv grid = read_csv_file((root / "grid.csv").string());
  std::vector<double> values;
  for (const auto& row : grid.rows) values.push_back(parse_double(row[0]));

  json diag = detail::read_json_doc((root / "diagnostics.json").string());
  env.grid = grid_from(diag.at("grid"), std::move(values));
  env.gmrf.rho = diag.at("gmrf").at("rho").get<double>();
  env.gmrf.lambda = diag.at("gmrf").at("lambda").get<double>();
  env.gmrf.seed = diag.at("gmrf").at("seed").get<std::uint64_t>();
  auto& d = env.diagnostics;
  d.moran_fitted = diag.at("moran_fitted").get<double>();
  d.moran_sampled = diag.at("moran_sampled").get<double>();
  d.std_fitted = diag.at("std_fitted").get<double>();
  d.std_sampled = diag.at("std_sampled").get<double>();
  d.hist_edges = diag.at("hist_edges").get<std::vector<double>>();
  d.hist_fitted = diag.at("hist_fitted").get<std::vector<std::size_t>>();
  d.hist_sampled = diag.at("hist_sampled").get<std::vector<std::size_t>>();
  d.grid_gap_max = diag.at("grid_gap_max").get<double>();
  d.grid_gap_mean = diag.at("grid_gap_mean").get<double>();

  Csv split = read_csv_file((root / "split.csv").string());
  for (std::size_t i = 0; i < split.rows.size(); ++i) {
    const int role = static_cast<int>(parse_double(split.rows[i][1]));
    auto idx = static_cast<std::uint32_t>(i);
    if (role == kRoleTrain) env.split.train.push_back(idx);
    else if (role == kRoleVal) env.split.val.push_back(idx);
    else env.split.buffer.push_back(idx);
  }
  return env;
}

void write_dataset_bundle(const SpaceDataset& ds, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);

  {
    std::vector<const std::vector<double>*> cols;
    for (const auto& c : ds.observed.cols) cols.push_back(&c);
    write_field_csv(root / "covariates.csv", ds.node_ids, ds.observed.names, cols);
  }
  write_field_csv(root / "treatment.csv", ds.node_ids, {"a"}, {&ds.treatment});
  write_field_csv(root / "outcome.csv", ds.node_ids, {"y"}, {&ds.synthetic_outcome});
  write_cf_csv(root / "counterfactuals.csv", ds.node_ids, ds.counterfactuals);
  write_graph_files(ds.graph, root);

  json meta{{"masked_group_id", ds.masked_group_id},
            {"treatment_type", to_string(ds.treatment_type)},
            {"sigma_y", ds.sigma_y},
            {"grid", grid_meta(ds.grid)},
            {"grid_values", ds.grid.values},
            {"n_nodes", ds.graph.n()},
            {"confounding", ds.confounding},
            {"warning",
             "Outcomes and counterfactuals in this dataset are synthetic; do not use them to "
             "draw real-world conclusions."}};
  meta["smoothness"] = std::isnan(ds.smoothness) ? json(nullptr) : json(ds.smoothness);
  detail::write_json_doc(meta, (root / "dataset.json").string());
}

SpaceDataset read_dataset_bundle(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw ValidationError("dataset bundle not found: " + dir);
  json meta = detail::read_json_doc((root / "dataset.json").string());

  if (claim_synthetic_warning())
    std::fprintf(stderr, "%s\n", meta.at("warning").get<std::string>().c_str());

  SpaceDataset ds;
  LoadedTable cov = read_table(root / "covariates.csv");
  ds.node_ids = cov.node_ids;
  for (std::size_t j = 0; j < cov.names.size(); ++j)
    ds.observed.add_col(cov.names[j], ColumnRole::covariate, std::move(cov.cols[j]));

  ds.treatment = std::move(read_table(root / "treatment.csv").cols.at(0));
  ds.synthetic_outcome = std::move(read_table(root / "outcome.csv").cols.at(0));
  ds.counterfactuals = std::move(read_table(root / "counterfactuals.csv").cols);
  ds.graph = read_graph(root, ds.node_ids);

  ds.masked_group_id = meta.at("masked_group_id").get<std::string>();
  ds.grid = grid_from(meta.at("grid"), meta.at("grid_values").get<std::vector<double>>());
  ds.treatment_type = ds.grid.type;
  ds.sigma_y = meta.at("sigma_y").get<double>();
  ds.smoothness = json_opt_double(meta, "smoothness", std::numeric_limits<double>::quiet_NaN());
  if (meta.contains("confounding"))
    for (const auto& [k, v] : meta.at("confounding").items()) ds.confounding[k] = v.get<double>();
  return ds;
}

void write_name_map(const NameMap& nm, const std::string& env_dir) {
  const fs::path priv = fs::path(env_dir) / "private";
  fs::create_directories(priv);
  json pairs = json::object();
  for (const auto& [anon, orig] : nm.pairs) pairs[anon] = orig;
  json j{{"group", nm.group}, {"token", nm.token}, {"map", pairs}};
  detail::write_json_doc(j, (priv / ("name_map_" + nm.token + ".json")).string());
}

void write_estimates(const CausalEstimates& est, const std::vector<std::string>& node_ids,
                     const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root);
  json j;
  j["ate"] = est.ate ? json(*est.ate) : json(nullptr);
  j["erf"] = est.erf ? json(*est.erf) : json(nullptr);
  if (est.ite) {
    write_cf_csv(root / "ite.csv", node_ids, *est.ite);
    j["ite_csv"] = "ite.csv";
  } else {
    j["ite_csv"] = nullptr;
  }
  detail::write_json_doc(j, (root / "estimates.json").string());
}

CausalEstimates read_estimates(const std::string& dir) {
  const fs::path root(dir);
  json j = detail::read_json_doc((root / "estimates.json").string());
  CausalEstimates est;
  if (j.contains("ate") && !j.at("ate").is_null()) est.ate = j.at("ate").get<double>();
  if (j.contains("erf") && !j.at("erf").is_null())
    est.erf = j.at("erf").get<std::vector<double>>();
  if (j.contains("ite_csv") && !j.at("ite_csv").is_null())
    est.ite = read_table(root / j.at("ite_csv").get<std::string>()).cols;
  return est;
}

void write_eval_report(const EvalReport& rep, const std::string& path) {
  json j;
  j["bias"] = rep.bias ? json(*rep.bias) : json(nullptr);
  j["rmise"] = rep.rmise ? json(*rep.rmise) : json(nullptr);
  j["pehe"] = rep.pehe ? json(*rep.pehe) : json(nullptr);
  j["sigma_y"] = rep.sigma_y;
  detail::write_json_doc(j, path);
}

bool claim_synthetic_warning() {
  static std::atomic<bool> claimed{false};
  return !claimed.exchange(true);
}

}  // namespace scbench
