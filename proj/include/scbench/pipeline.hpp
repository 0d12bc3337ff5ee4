#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace scbench {

struct PipelineResult {
  std::string run_dir, env_dir, report_path, digest;
  std::vector<std::string> dataset_dirs;
};

// Executes collection -> env -> datasets -> scores -> baselines -> report
// from one JSON config, staging into "<out>.partial" and renaming on
// success; failures move the partial output to "<out>.quarantine" and
// rethrow with a stage tag. Deterministic apart from manifest timestamps.
PipelineResult run_pipeline(const std::string& config_path, const std::string& out_dir,
                            std::optional<std::uint64_t> seed_override = {});

}  // namespace scbench
