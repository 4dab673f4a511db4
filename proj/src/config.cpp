// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace petriflow::cfg {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ConfigError, field, why);
}

template <typename T>
T parse_number(const std::string& field, const std::string& raw) {
  T value{};
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) bad(field, "not a number: " + raw);
  return value;
}

bool parse_bool(const std::string& field, const std::string& raw) {
  if (raw == "1" || raw == "true") return true;
  if (raw == "0" || raw == "false") return false;
  bad(field, "not a boolean (use 0/1/true/false): " + raw);
}

}  // namespace

nlohmann::json Config::to_json() const {
  return {{"conclusionPolicy", conclusion_policy},
          {"strictDedup", strict_dedup},
          {"chainCap", chain_cap},
          {"workers", workers},
          {"producer", producer},
          {"seed", seed},
          {"minStepTokens", min_step_tokens},
          {"maxStepTokens", max_step_tokens},
          {"remoteHost", remote_host},
          {"remotePort", remote_port},
          {"phase1Chunk", phase1_chunk}};
}

void apply_file(Config& config, const nlohmann::json& doc) {
  if (!doc.is_object()) bad("config", "config file must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "conclusionPolicy") {
        config.conclusion_policy = value.get<std::string>();
      } else if (key == "strictDedup") {
        config.strict_dedup = value.get<bool>();
      } else if (key == "chainCap") {
        config.chain_cap = value.get<int>();
      } else if (key == "workers") {
        config.workers = value.get<int>();
      } else if (key == "producer") {
        config.producer = value.get<std::string>();
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "minStepTokens") {
        config.min_step_tokens = value.get<std::size_t>();
      } else if (key == "maxStepTokens") {
        config.max_step_tokens = value.get<std::size_t>();
      } else if (key == "remoteHost") {
        config.remote_host = value.get<std::string>();
      } else if (key == "remotePort") {
        config.remote_port = value.get<int>();
      } else if (key == "phase1Chunk") {
        config.phase1_chunk = value.get<std::size_t>();
      } else {
        bad(key, "unknown config key");
      }
    } catch (const nlohmann::json::exception& e) {
      bad(key, e.what());
    }
  }
}

void apply_env(Config& config) {
  auto get = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
  if (auto v = get("PETRIFLOW_CONCLUSION_POLICY")) config.conclusion_policy = *v;
  if (auto v = get("PETRIFLOW_STRICT_DEDUP")) {
    config.strict_dedup = parse_bool("PETRIFLOW_STRICT_DEDUP", *v);
  }
  if (auto v = get("PETRIFLOW_CHAIN_CAP")) {
    config.chain_cap = parse_number<int>("PETRIFLOW_CHAIN_CAP", *v);
  }
  if (auto v = get("PETRIFLOW_WORKERS")) {
    config.workers = parse_number<int>("PETRIFLOW_WORKERS", *v);
  }
  if (auto v = get("PETRIFLOW_PRODUCER")) config.producer = *v;
  if (auto v = get("PETRIFLOW_SEED")) {
    config.seed = parse_number<std::uint64_t>("PETRIFLOW_SEED", *v);
  }
  if (auto v = get("PETRIFLOW_MIN_STEP_TOKENS")) {
    config.min_step_tokens = parse_number<std::size_t>("PETRIFLOW_MIN_STEP_TOKENS", *v);
  }
  if (auto v = get("PETRIFLOW_MAX_STEP_TOKENS")) {
    config.max_step_tokens = parse_number<std::size_t>("PETRIFLOW_MAX_STEP_TOKENS", *v);
  }
  if (auto v = get("PETRIFLOW_REMOTE_HOST")) config.remote_host = *v;
  if (auto v = get("PETRIFLOW_REMOTE_PORT")) {
    config.remote_port = parse_number<int>("PETRIFLOW_REMOTE_PORT", *v);
  }
  if (auto v = get("PETRIFLOW_PHASE1_CHUNK")) {
    config.phase1_chunk = parse_number<std::size_t>("PETRIFLOW_PHASE1_CHUNK", *v);
  }
}

Config load_config(const std::optional<std::string>& path) {
  Config config;
  if (path) {
    std::ifstream in(*path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, *path, "cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
      bad(*path, e.what());
    }
    apply_file(config, doc);
  }
  apply_env(config);
  validate(config);
  return config;
}

void validate(const Config& config) {
  policy_of(config.conclusion_policy);
  if (config.chain_cap < 1) bad("chainCap", "must be at least 1");
  if (config.workers < 1) bad("workers", "must be at least 1");
  if (config.producer != "synthetic" && config.producer != "scripted" &&
      config.producer != "remote") {
    bad("producer", "expected synthetic, scripted, or remote: " + config.producer);
  }
  if (config.min_step_tokens < 1) bad("minStepTokens", "must be at least 1");
  if (config.max_step_tokens < config.min_step_tokens) {
    bad("maxStepTokens", "must be >= minStepTokens");
  }
  if (config.remote_port < 1 || config.remote_port > 65535) {
    bad("remotePort", "must be in 1..65535");
  }
  if (config.phase1_chunk < 1) bad("phase1Chunk", "must be at least 1");
}

plan::ConclusionPolicy policy_of(const std::string& name) {
  if (name == "single") return plan::ConclusionPolicy::RequireSingle;
  if (name == "multi") return plan::ConclusionPolicy::AllowMultiple;
  if (name == "merge") return plan::ConclusionPolicy::MergeSinks;
  bad("conclusionPolicy", "expected single, multi, or merge: " + name);
}

void set_endpoint(Config& config, const std::string& endpoint) {
  std::string rest = endpoint;
  const std::string http = "http://";
  if (rest.rfind(http, 0) == 0) rest = rest.substr(http.size());
  if (rest.rfind("https://", 0) == 0) {
    bad("endpoint", "https endpoints are not supported");
  }
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  const std::size_t colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
    bad("endpoint", "expected host:port: " + endpoint);
  }
  config.remote_host = rest.substr(0, colon);
  config.remote_port = parse_number<int>("endpoint", rest.substr(colon + 1));
}

}  // namespace petriflow::cfg
