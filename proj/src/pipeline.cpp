#include "scbench/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <utility>

#include "config_io.hpp"
#include "scbench/baselines.hpp"
#include "scbench/bundle.hpp"
#include "scbench/collection.hpp"
#include "scbench/dataset.hpp"
#include "scbench/errors.hpp"
#include "scbench/evaluator.hpp"

namespace scbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Reruns any stage failure as the same error type with a stage tag so CLI
// exit codes survive.
template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("[stage ") + name + "] " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string("[stage ") + name + "] " + e.what());
  }
}

DataCollection load_collection(const json& cfg, std::uint64_t seed) {
  const auto& c = cfg.at("collection");
  if (c.is_string() && c.get<std::string>() == "demo") {
    json d = cfg.value("demo", json::object());
    return demo_collection(d.value("n_grid", std::size_t{40}),
                           d.value("n_covariates", std::size_t{6}), d.value("strength", 1.0), seed,
                           d.value("binary", true));
  }
  if (c.is_object() && c.contains("dir")) {
    IngestReport rep;
    DataCollection col = ingest(c.at("dir").get<std::string>(), &rep);
    std::fprintf(stderr, "%s\n", rep.to_string().c_str());
    return col;
  }
  throw ValidationError("config 'collection' must be \"demo\" or {\"dir\": path}");
}

}  // namespace

PipelineResult run_pipeline(const std::string& config_path, const std::string& out_dir,
                            std::optional<std::uint64_t> seed_override) {
  json cfg = detail::read_json_doc(config_path);
  if (seed_override) cfg["seed"] = *seed_override;
  if (!cfg.contains("seed")) cfg["seed"] = 0;
  if (!cfg.contains("env")) throw ValidationError("config lacks an 'env' section");
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();

  const std::string canonical = cfg.dump();
  PipelineResult res;
  res.digest = config_digest(canonical);
  res.run_dir = out_dir;

  if (fs::exists(out_dir)) throw ValidationError("output directory already exists: " + out_dir);
  const fs::path staging = out_dir + ".partial";
  fs::remove_all(staging);
  fs::create_directories(staging);

  RunManifest manifest;
  manifest.command = "train-env " + config_path;
  manifest.config_digest = res.digest;
  manifest.seed = seed;
  manifest.started_at = now_utc();

  try {
    {
      std::ofstream os(staging / "config.json");
      os << cfg.dump(2) << "\n";
    }

    DataCollection col = stage("collection", [&] { return load_collection(cfg, seed); });

    EnvConfig ecfg = detail::env_config_parse(cfg.at("env"));
    ecfg.seed = seed;
    if (cfg.contains("env") && cfg.at("env").contains("seed") &&
        cfg.at("env").at("seed").get<std::uint64_t>() != seed && !seed_override)
      throw ValidationError("env.seed conflicts with the top-level seed");

    SpaceEnv env = stage("env", [&] { return generate_env(col, ecfg); });
    const std::string env_dir = (staging / "env").string();
    stage("env-bundle", [&] {
      write_env_bundle(env, env_dir);
      return 0;
    });
    res.env_dir = (fs::path(out_dir) / "env").string();
    manifest.outputs.push_back("env");

    DatasetOptions opts;
    opts.compute_scores = cfg.value("compute_scores", true);
    std::vector<std::string> groups;
    if (cfg.contains("mask_groups"))
      groups = cfg.at("mask_groups").get<std::vector<std::string>>();

    std::vector<SpaceDataset> datasets;
    std::vector<ScoreRecord> records;
    for (const auto& g : groups) {
      SpaceDataset ds = stage("dataset", [&] {
        NameMap nm;
        SpaceDataset d = make_dataset(env, g, &nm, opts);
        write_name_map(nm, env_dir);
        return d;
      });
      const std::string rel = "datasets/" + ds.masked_group_id;
      stage("dataset-bundle", [&] {
        write_dataset_bundle(ds, (staging / rel).string());
        return 0;
      });
      res.dataset_dirs.push_back((fs::path(out_dir) / rel).string());
      manifest.outputs.push_back(rel);
      if (opts.compute_scores) {
        ScoreRecord rec;
        rec.group = g;
        rec.smoothness = ds.smoothness;
        rec.confounding = ds.confounding;
        records.push_back(std::move(rec));
      }
      datasets.push_back(std::move(ds));
    }

    if (!records.empty()) {
      records = stage("scores", [&] { return classify_scores(std::move(records)); });
      json sj = json::array();
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        sj.push_back({{"token", datasets[i].masked_group_id},
                      {"smoothness", r.smoothness},
                      {"confounding", r.confounding},
                      {"smoothness_class", r.smoothness_class},
                      {"confounding_class", r.confounding_class}});
      }
      detail::write_json_doc(sj, (staging / "scores.json").string());
      manifest.outputs.push_back("scores.json");
    }

    std::vector<std::string> methods;
    if (cfg.contains("baselines"))
      methods = cfg.at("baselines").get<std::vector<std::string>>();

    std::ofstream report(staging / "report.csv");
    report << "dataset,method,metric,value\n";
    for (const auto& ds : datasets) {
      for (const auto& method : methods) {
        EstimatorSpec spec;
        spec.method = method;
        spec.seed = seed;
        if (cfg.contains("tuning_budget"))
          spec.tuning_budget = cfg.at("tuning_budget").get<std::size_t>();
        BaselineResult br = stage("baseline", [&] { return run_baseline(ds, spec); });

        const std::string rel = "results/" + ds.masked_group_id + "/" + method;
        write_estimates(br.estimates, ds.node_ids, (staging / rel).string());
        json dj(br.details);
        dj["divergent"] = br.divergent;
        detail::write_json_doc(dj, (staging / rel / "details.json").string());

        if (br.divergent) {
          report << ds.masked_group_id << "," << method << ",divergent,1\n";
          continue;
        }
        EvalReport ev = stage("evaluate", [&] { return eval_report(br.estimates, ds); });
        write_eval_report(ev, (staging / rel / "eval.json").string());
        manifest.outputs.push_back(rel);
        if (ev.bias)
          report << ds.masked_group_id << "," << method << ",bias," << format_double(*ev.bias)
                 << "\n";
        if (ev.rmise)
          report << ds.masked_group_id << "," << method << ",rmise," << format_double(*ev.rmise)
                 << "\n";
        if (ev.pehe)
          report << ds.masked_group_id << "," << method << ",pehe," << format_double(*ev.pehe)
                 << "\n";
      }
    }
    report.close();
    manifest.outputs.push_back("report.csv");
    res.report_path = (fs::path(out_dir) / "report.csv").string();

    manifest.finished_at = now_utc();
    write_manifest(manifest, staging.string());
  } catch (...) {
    const fs::path quarantine = out_dir + ".quarantine";
    fs::remove_all(quarantine);
    std::error_code ec;
    fs::rename(staging, quarantine, ec);
    throw;
  }

  fs::rename(staging, out_dir);
  return res;
}

}  // namespace scbench
