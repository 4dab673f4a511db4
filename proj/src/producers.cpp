// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/producers.hpp"

#include <stdexcept>

#include <httplib.h>

namespace petriflow::engine {

namespace {

StepResult result_from_json(const nlohmann::json& entry, const char* what) {
  StepResult r;
  if (entry.is_string()) {
    r.text = entry.get<std::string>();
    r.cost_tokens = r.text.size();
    return r;
  }
  if (entry.is_object() && entry.contains("text")) {
    r.text = entry.at("text").get<std::string>();
    r.cost_tokens = entry.contains("cost") ? entry.at("cost").get<std::size_t>()
                                           : r.text.size();
    return r;
  }
  throw std::runtime_error(std::string("malformed script entry for ") + what);
}

}  // namespace

ScriptedProducer::ScriptedProducer(nlohmann::json script)
    : script_(std::move(script)) {}

StepResult ScriptedProducer::plan_stream(const std::string& goal) {
  (void)goal;
  if (!script_.contains("plan")) {
    throw std::runtime_error("script has no plan entry");
  }
  StepResult r = result_from_json(script_.at("plan"), "plan");
  if (script_.contains("planCost")) {
    r.cost_tokens = script_.at("planCost").get<std::size_t>();
  }
  return r;
}

StepResult ScriptedProducer::step(const Request& request) {
  if (request.conclusion) {
    if (!script_.contains("conclusion")) {
      throw std::runtime_error("script has no conclusion entry");
    }
    return result_from_json(script_.at("conclusion"), "conclusion");
  }
  const std::string key = std::to_string(request.outline_index);
  if (!script_.contains("steps") || !script_.at("steps").contains(key)) {
    throw std::runtime_error("script has no step entry for outline " + key);
  }
  return result_from_json(script_.at("steps").at(key), key.c_str());
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

SyntheticProducer::SyntheticProducer(std::string plan_text, std::uint64_t seed,
                                     std::size_t min_len, std::size_t max_len)
    : plan_text_(std::move(plan_text)),
      seed_(seed),
      min_len_(min_len),
      max_len_(std::max(min_len, max_len)) {}

StepResult SyntheticProducer::plan_stream(const std::string& goal) {
  (void)goal;
  return StepResult::of(plan_text_);
}

StepResult SyntheticProducer::step(const Request& request) {
  std::uint64_t h = fnv1a(request.description, 1469598103934665603ull ^ seed_);
  h = fnv1a("\x1f", h);
  h = fnv1a(request.context, h);
  const std::size_t span = max_len_ - min_len_ + 1;
  const std::size_t len = min_len_ + static_cast<std::size_t>(h % span);
  std::string text;
  text.reserve(len);
  std::uint64_t state = h;
  // Single-line lowercase text: safe inside step bodies and never collides
  // with a closing tag.
  for (std::size_t k = 0; k < len; ++k) {
    const std::uint64_t r = splitmix(state) % 27;
    text.push_back(r == 26 && k > 0 && k + 1 < len && text.back() != ' '
                       ? ' '
                       : static_cast<char>('a' + (r % 26)));
  }
  return StepResult::of(std::move(text));
}

struct RemoteProducer::Impl {
  httplib::Client client;
  Impl(const std::string& host, int port, int timeout_seconds)
      : client(host, port) {
    client.set_connection_timeout(timeout_seconds);
    client.set_read_timeout(timeout_seconds);
  }

  StepResult post(const std::string& path, const nlohmann::json& body) {
    httplib::Result res = client.Post(path, body.dump(), "application/json");
    if (!res) {
      throw std::runtime_error("request to " + path + " failed: " +
                               httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw std::runtime_error("request to " + path + " returned status " +
                               std::to_string(res->status));
    }
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("text")) {
      throw std::runtime_error("malformed reply from " + path);
    }
    StepResult r;
    r.text = reply.at("text").get<std::string>();
    r.cost_tokens = reply.contains("cost") ? reply.at("cost").get<std::size_t>()
                                           : r.text.size();
    return r;
  }
};

RemoteProducer::RemoteProducer(const std::string& host, int port,
                               int timeout_seconds)
    : impl_(std::make_unique<Impl>(host, port, timeout_seconds)) {}

RemoteProducer::~RemoteProducer() = default;

StepResult RemoteProducer::plan_stream(const std::string& goal) {
  return impl_->post("/v1/plan", {{"goal", goal}});
}

StepResult RemoteProducer::step(const Request& request) {
  return impl_->post("/v1/step", {{"transId", request.trans_id},
                                  {"outline", request.outline_index},
                                  {"description", request.description},
                                  {"context", request.context},
                                  {"conclusion", request.conclusion}});
}

}  // namespace petriflow::engine
