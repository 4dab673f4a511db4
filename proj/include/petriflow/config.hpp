// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "petriflow/errors.hpp"
#include "petriflow/plan_format.hpp"

namespace petriflow::cfg {

// Runtime knobs shared by the commands. Precedence: command-line flags
// override environment variables override the config file override these
// defaults. Every field has a documented default; unknown file keys are a
// ConfigError.
struct Config {
  std::string conclusion_policy = "merge";  // single | multi | merge
  bool strict_dedup = true;   // reject A->A spans instead of collapsing them
  int chain_cap = 10;         // max chains kept after dedup
  int workers = 1;            // concurrent producers / files
  std::string producer = "synthetic";  // synthetic | scripted | remote
  std::uint64_t seed = 0;              // synthetic producer seed
  std::size_t min_step_tokens = 40;    // synthetic step length range
  std::size_t max_step_tokens = 160;
  std::string remote_host = "127.0.0.1";
  int remote_port = 8080;
  std::size_t phase1_chunk = 64;  // decode chunk for </Plan> scanning

  nlohmann::json to_json() const;
};

// File keys are the field names in camelCase ("conclusionPolicy", ...).
// Unknown keys or wrong value types throw ConfigError.
void apply_file(Config& config, const nlohmann::json& doc);

// PETRIFLOW_<FIELD> overrides (PETRIFLOW_WORKERS, PETRIFLOW_SEED, ...);
// booleans accept 0/1/true/false.
void apply_env(Config& config);

// Defaults, then the optional JSON file (IoError when unreadable), then the
// environment. The result is validated.
Config load_config(const std::optional<std::string>& path = std::nullopt);

// Range and enum checks; throws ConfigError naming the offending field.
void validate(const Config& config);

plan::ConclusionPolicy policy_of(const std::string& name);
inline plan::ConclusionPolicy policy_of(const Config& config) {
  return policy_of(config.conclusion_policy);
}

// Accepts "host:port" or "http://host:port" (no TLS support).
void set_endpoint(Config& config, const std::string& endpoint);

}  // namespace petriflow::cfg
