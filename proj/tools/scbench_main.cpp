#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "scbench/baselines.hpp"
#include "scbench/bundle.hpp"
#include "scbench/collection.hpp"
#include "scbench/dataset.hpp"
#include "scbench/errors.hpp"
#include "scbench/evaluator.hpp"
#include "scbench/pipeline.hpp"
#include "scbench/split.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scbench;

namespace {

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open " + path);
  json j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw ValidationError("malformed JSON in " + path);
  return j;
}

void dump_json(const json& j, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path);
  os << j.dump(2) << "\n";
}

struct GlobalOpts {
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
};

std::uint64_t seed_or(const GlobalOpts& g, std::uint64_t fallback = 0) {
  return g.seed ? *g.seed : fallback;
}

void require_out(const GlobalOpts& g) {
  if (g.out.empty()) throw ValidationError("--out is required for this command");
}

void cmd_ingest(const GlobalOpts& g, const std::string& dir) {
  IngestReport rep;
  DataCollection c = ingest(dir, &rep);
  std::fprintf(stderr, "%s\n", rep.to_string().c_str());
  if (!g.out.empty()) write_collection(c, g.out);
}

void cmd_demo(const GlobalOpts& g, std::size_t n_grid, std::size_t n_cov, double strength,
              bool continuous) {
  require_out(g);
  DataCollection c = demo_collection(n_grid, n_cov, strength, seed_or(g), !continuous);
  write_collection(c, g.out);
  std::fprintf(stderr, "wrote demo collection (%zu nodes) to %s\n", c.graph.n(), g.out.c_str());
}

void cmd_train_env(const GlobalOpts& g, const std::string& config) {
  require_out(g);
  PipelineResult r = run_pipeline(config, g.out, g.seed);
  std::printf("run: %s\nenv: %s\ndatasets: %zu\ndigest: %s\n", r.run_dir.c_str(),
              r.env_dir.c_str(), r.dataset_dirs.size(), r.digest.c_str());
}

void cmd_make_dataset(const GlobalOpts& g, const std::string& env_dir, const std::string& group,
                      bool no_scores) {
  require_out(g);
  SpaceEnv env = read_env_bundle(env_dir);
  NameMap nm;
  DatasetOptions opts;
  opts.compute_scores = !no_scores;
  SpaceDataset ds = make_dataset(env, group, &nm, opts);
  write_dataset_bundle(ds, g.out);
  write_name_map(nm, env_dir);
  std::printf("dataset %s -> %s\n", ds.masked_group_id.c_str(), g.out.c_str());
}

void cmd_score(const GlobalOpts& g, const std::string& env_dir) {
  SpaceEnv env = read_env_bundle(env_dir);
  std::vector<ScoreRecord> records;
  for (const auto& [name, cols] : env.config.covariate_groups) {
    ScoreRecord r;
    r.group = name;
    r.smoothness = smoothness_score(env, name);
    r.confounding = confounding_scores(env, name);
    records.push_back(std::move(r));
  }
  records = classify_scores(std::move(records));
  json out = json::array();
  for (const auto& r : records)
    out.push_back({{"group", r.group},
                   {"smoothness", r.smoothness},
                   {"confounding", r.confounding},
                   {"smoothness_class", r.smoothness_class},
                   {"confounding_class", r.confounding_class}});
  if (g.out.empty()) std::cout << out.dump(2) << "\n";
  else {
    std::ofstream os(g.out);
    os << out.dump(2) << "\n";
  }
}

void cmd_split(const GlobalOpts& g, const std::string& edges_path, const std::string& nodes_path,
               const std::string& coords_path, double alpha, std::uint32_t levels,
               std::uint32_t buffer) {
  Csv edges = read_csv_file(edges_path);
  if (edges.header != std::vector<std::string>{"src", "dst"})
    throw ValidationError("edge file must have header src,dst");
  std::vector<std::pair<std::string, std::string>> e;
  std::vector<std::string> ids;
  if (!nodes_path.empty()) {
    Csv nodes = read_csv_file(nodes_path);
    if (nodes.header.empty() || nodes.header.front() != "node_id")
      throw ValidationError("node file must start with a node_id column");
    for (const auto& row : nodes.rows) ids.push_back(row.front());
  } else {
    std::set<std::string> seen;
    for (const auto& row : edges.rows)
      for (const auto& v : {row[0], row[1]})
        if (seen.insert(v).second) ids.push_back(v);
  }
  for (const auto& row : edges.rows) e.emplace_back(row[0], row[1]);

  std::vector<std::array<double, 2>> coords;
  if (!coords_path.empty()) {
    Csv cs = read_csv_file(coords_path);
    std::map<std::string, std::array<double, 2>> by_id;
    for (const auto& row : cs.rows)
      by_id[row[0]] = {parse_double(row[1]), parse_double(row[2])};
    for (const auto& id : ids) coords.push_back(by_id.at(id));
  }
  SpatialGraph graph = build_graph(ids, e, std::move(coords));

  SplitParams p;
  p.alpha = alpha;
  p.levels = levels;
  p.buffer = buffer;
  p.seed = seed_or(g);
  TrainValSplit s = spatial_split(graph, p);
  std::fprintf(stderr, "train %zu, val %zu, buffer %zu of %zu nodes\n", s.train.size(),
               s.val.size(), s.buffer.size(), graph.n());
  if (!g.out.empty()) {
    std::vector<std::uint8_t> roles = split_roles(graph, s);
    std::ofstream os(g.out);
    os << "node_id,role\n";
    for (std::size_t i = 0; i < roles.size(); ++i)
      os << graph.node_ids[i] << "," << static_cast<int>(roles[i]) << "\n";
  }
}

void cmd_baseline(const GlobalOpts& g, const std::string& dataset_dir, const std::string& method,
                  std::size_t budget, bool optimal) {
  require_out(g);
  SpaceDataset ds = read_dataset_bundle(dataset_dir);
  EstimatorSpec spec;
  spec.method = method;
  spec.seed = seed_or(g);
  spec.tuning_budget = budget;
  spec.dapsm_optimal = optimal;
  BaselineResult r = run_baseline(ds, spec);
  write_estimates(r.estimates, ds.node_ids, g.out);
  json dj(r.details);
  dj["divergent"] = r.divergent;
  dump_json(dj, (fs::path(g.out) / "details.json").string());
  if (r.divergent) {
    std::fprintf(stderr, "%s diverged; estimates withheld\n", method.c_str());
    return;
  }
  EvalReport ev = eval_report(r.estimates, ds);
  write_eval_report(ev, (fs::path(g.out) / "eval.json").string());
  if (ev.bias) std::printf("bias %s\n", format_double(*ev.bias).c_str());
  if (ev.rmise) std::printf("rmise %s\n", format_double(*ev.rmise).c_str());
  if (ev.pehe) std::printf("pehe %s\n", format_double(*ev.pehe).c_str());
}

void cmd_evaluate(const GlobalOpts& g, const std::string& dataset_dir,
                  const std::string& estimates_dir) {
  SpaceDataset ds = read_dataset_bundle(dataset_dir);
  CausalEstimates est = read_estimates(estimates_dir);
  EvalReport ev = eval_report(est, ds);
  if (!g.out.empty()) write_eval_report(ev, g.out);
  json j{{"bias", ev.bias ? json(*ev.bias) : json(nullptr)},
         {"rmise", ev.rmise ? json(*ev.rmise) : json(nullptr)},
         {"pehe", ev.pehe ? json(*ev.pehe) : json(nullptr)},
         {"sigma_y", ev.sigma_y}};
  std::cout << j.dump(2) << "\n";
}

void cmd_report(const GlobalOpts& g, const std::string& run_dir) {
  std::ostringstream rows;
  rows << "dataset,method,metric,value\n";
  const fs::path results = fs::path(run_dir) / "results";
  if (fs::is_directory(results)) {
    std::vector<fs::path> evals;
    for (const auto& entry : fs::recursive_directory_iterator(results))
      if (entry.is_regular_file() && entry.path().filename() == "eval.json")
        evals.push_back(entry.path());
    std::sort(evals.begin(), evals.end());
    for (const auto& p : evals) {
      json ev = load_json(p.string());
      const std::string method = p.parent_path().filename().string();
      const std::string token = p.parent_path().parent_path().filename().string();
      for (const char* m : {"bias", "rmise", "pehe"})
        if (!ev.at(m).is_null())
          rows << token << "," << method << "," << m << ","
               << format_double(ev.at(m).get<double>()) << "\n";
    }
  } else if (fs::exists(fs::path(run_dir) / "report.csv")) {
    std::ifstream is(fs::path(run_dir) / "report.csv");
    rows.str(std::string(std::istreambuf_iterator<char>(is), {}));
  } else {
    throw ValidationError("no results found under " + run_dir);
  }
  if (g.out.empty()) std::cout << rows.str();
  else {
    std::ofstream os(g.out);
    os << rows.str();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatial-confounding benchmark toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  std::uint64_t seed_raw = 0;
  auto* seed_opt = app.add_option("--seed", seed_raw, "master seed");
  app.add_option("--threads", g.threads, "OpenMP thread cap (0 = library default)");
  app.add_option("--out", g.out, "output file or directory");

  std::string dir, config, env_dir, group, dataset_dir, estimates_dir, method, run_dir;
  std::string edges_path, nodes_path, coords_path;
  std::size_t n_grid = 40, n_cov = 6, budget = 16;
  double strength = 1.0, alpha = 0.02;
  std::uint32_t levels = 1, buffer = 1;
  bool continuous = false, no_scores = false, optimal = false;

  auto* c_ingest = app.add_subcommand("ingest", "validate and normalize a collection directory");
  c_ingest->add_option("--dir", dir, "collection directory")->required();

  auto* c_demo = app.add_subcommand("demo-collection", "synthesize the demo collection");
  c_demo->add_option("--n-grid", n_grid, "lattice side length (>= 8)");
  c_demo->add_option("--n-covariates", n_cov, "covariate count (>= 3)");
  c_demo->add_option("--strength", strength, "confounding strength in [0,1]");
  c_demo->add_flag("--continuous", continuous, "continuous treatment instead of binary");

  auto* c_train = app.add_subcommand("train-env", "run the full generation pipeline");
  c_train->add_option("--config", config, "pipeline config JSON")->required();

  auto* c_mkds = app.add_subcommand("make-dataset", "mask one group of an env bundle");
  c_mkds->add_option("--env", env_dir, "env bundle directory")->required();
  c_mkds->add_option("--group", group, "group to mask (empty = mask nothing)");
  c_mkds->add_flag("--no-scores", no_scores, "skip smoothness/confounding scores");

  auto* c_score = app.add_subcommand("score", "score all covariate groups of an env");
  c_score->add_option("--env", env_dir, "env bundle directory")->required();

  auto* c_split = app.add_subcommand("split", "spatial train/val split of an edge list");
  c_split->add_option("--edges", edges_path, "edge list csv (src,dst)")->required();
  c_split->add_option("--nodes", nodes_path, "node table csv (node_id first)");
  c_split->add_option("--coords", coords_path, "coordinates csv (node_id,x,y)");
  c_split->add_option("--alpha", alpha, "seed fraction");
  c_split->add_option("--levels", levels, "validation BFS levels");
  c_split->add_option("--buffer", buffer, "buffer BFS levels");

  auto* c_base = app.add_subcommand("baseline", "run one estimator against a dataset");
  c_base->add_option("--dataset", dataset_dir, "dataset bundle directory")->required();
  c_base->add_option("--method", method, "ols|s2sls|gmerror|spatial|spatialplus|dapsm")
      ->required();
  c_base->add_option("--budget", budget, "tuning budget");
  c_base->add_flag("--optimal", optimal, "optimal dapsm assignment");

  auto* c_eval = app.add_subcommand("evaluate", "score an estimates directory against truth");
  c_eval->add_option("--dataset", dataset_dir, "dataset bundle directory")->required();
  c_eval->add_option("--estimates", estimates_dir, "directory with estimates.json")->required();

  auto* c_report = app.add_subcommand("report", "aggregate eval reports into a CSV");
  c_report->add_option("--run", run_dir, "pipeline run directory")->required();

  // Let --seed/--threads/--out appear after the subcommand name too.
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*seed_opt) g.seed = seed_raw;
#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#endif

  try {
    if (*c_ingest) cmd_ingest(g, dir);
    else if (*c_demo) cmd_demo(g, n_grid, n_cov, strength, continuous);
    else if (*c_train) cmd_train_env(g, config);
    else if (*c_mkds) cmd_make_dataset(g, env_dir, group, no_scores);
    else if (*c_score) cmd_score(g, env_dir);
    else if (*c_split) cmd_split(g, edges_path, nodes_path, coords_path, alpha, levels, buffer);
    else if (*c_base) cmd_baseline(g, dataset_dir, method, budget, optimal);
    else if (*c_eval) cmd_evaluate(g, dataset_dir, estimates_dir);
    else if (*c_report) cmd_report(g, run_dir);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
