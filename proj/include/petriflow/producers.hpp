// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

namespace petriflow::engine {

// Producer output. cost_tokens feeds the cost model; producers that know
// their real token usage report it, everything else defaults to byte length.
struct StepResult {
  std::string text;
  std::size_t cost_tokens = 0;

  static StepResult of(std::string t) {
    StepResult r;
    r.cost_tokens = t.size();
    r.text = std::move(t);
    return r;
  }
};

// Model adapter. plan_stream runs the linear planning phase; step produces
// one step (or the conclusion) from its merged context. Implementations must
// be deterministic in their inputs for replay and confluence guarantees to
// hold; step may be called from several worker threads at once.
class StepProducer {
 public:
  struct Request {
    std::string trans_id;
    int outline_index = -1;  // -1 when synthesizing the conclusion
    std::string description;
    std::string context;
    bool conclusion = false;
  };

  virtual ~StepProducer() = default;
  virtual StepResult plan_stream(const std::string& goal) = 0;
  virtual StepResult step(const Request& request) = 0;
};

// Replays fixed texts from a JSON script:
//   {"plan": "...", "planCost": 50,
//    "steps": {"1": "text", "2": {"text": "...", "cost": 100}},
//    "conclusion": {"text": "...", "cost": 50}}
// Costs are optional everywhere and default to byte length. Missing entries
// throw, which surfaces as ProducerFailure.
class ScriptedProducer final : public StepProducer {
 public:
  explicit ScriptedProducer(nlohmann::json script);
  StepResult plan_stream(const std::string& goal) override;
  StepResult step(const Request& request) override;

 private:
  nlohmann::json script_;
};

// Deterministic stand-in for a model: step text is a pure function of
// (seed, description, context), with length drawn from [min_len, max_len].
// The plan text is supplied up front.
class SyntheticProducer final : public StepProducer {
 public:
  SyntheticProducer(std::string plan_text, std::uint64_t seed,
                    std::size_t min_len = 40, std::size_t max_len = 160);
  StepResult plan_stream(const std::string& goal) override;
  StepResult step(const Request& request) override;

 private:
  std::string plan_text_;
  std::uint64_t seed_;
  std::size_t min_len_;
  std::size_t max_len_;
};

// Talks to an HTTP generation service:
//   POST /v1/plan {"goal": ...}            -> {"text": ..., "cost"?: n}
//   POST /v1/step {"transId", "outline", "description", "context",
//                  "conclusion"}           -> {"text": ..., "cost"?: n}
// Transport or protocol errors throw and surface as ProducerFailure.
class RemoteProducer final : public StepProducer {
 public:
  RemoteProducer(const std::string& host, int port, int timeout_seconds = 30);
  ~RemoteProducer() override;
  StepResult plan_stream(const std::string& goal) override;
  StepResult step(const Request& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace petriflow::engine
