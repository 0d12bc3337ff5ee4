#pragma once

#include "json.hpp"
#include "scbench/env.hpp"

namespace scbench::detail {

// Canonical config echo: plain json keeps keys sorted, so dump() is a
// stable digest input.
nlohmann::json env_config_json(const EnvConfig& cfg);
EnvConfig env_config_parse(const nlohmann::json& j);

nlohmann::json read_json_doc(const std::string& path);
void write_json_doc(const nlohmann::json& j, const std::string& path);

}  // namespace scbench::detail
