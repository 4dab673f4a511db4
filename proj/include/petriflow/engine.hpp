// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "petriflow/kv_cache.hpp"
#include "petriflow/plan_format.hpp"
#include "petriflow/producers.hpp"

namespace petriflow::engine {

// Cost model over producer-declared token counts.
//   serial cost   = plan + sum of all step costs + conclusion
//   parallel cost = plan + sum over rounds of the round's max step cost
//                   + conclusion
// speedup is their ratio; rounds counts execution rounds of plan steps only.
struct RunMetrics {
  std::size_t plan_tokens = 0;
  std::size_t step_tokens = 0;
  std::size_t conclusion_tokens = 0;
  std::vector<std::size_t> round_critical;
  int rounds = 0;

  std::size_t total_tokens() const {
    return plan_tokens + step_tokens + conclusion_tokens;
  }
  std::size_t serial_cost() const { return total_tokens(); }
  std::size_t parallel_cost() const;
  double speedup() const;
  nlohmann::json to_json() const;
};

struct LogEntry {
  int round = 0;
  std::string trans_id;
  std::vector<std::string> input_places;
  std::string output_place;
  std::size_t produced_chars = 0;
  std::uint32_t pos_begin = 0;  // position index range of the produced segment
  std::uint32_t pos_end = 0;

  nlohmann::json to_json() const;
};

struct RunOptions {
  // Execution wants runnable nets, so multiple terminal steps default to a
  // synthetic joining conclusion rather than a validation error.
  plan::ConclusionPolicy policy = plan::ConclusionPolicy::MergeSinks;
  int workers = 1;
  std::size_t phase1_chunk = 64;  // simulated decode chunk for plan scanning
  bool serial = false;            // one transition per round (reference mode)
};

struct RunReport {
  plan::TraceDocument trace;
  RunMetrics metrics;
  kv::StoreStats cache;
  std::vector<LogEntry> log;
  std::size_t discarded_plan_chars = 0;

  nlohmann::json to_json() const;
};

// Full two-phase run: stream the plan for `goal`, cut at </Plan>, compile to
// a net, execute the frontier rounds with zero-copy context reuse, then
// synthesize the conclusion from the terminal tokens. Throws Error:
// PlanParseFailure when the stream never closes the plan, parse codes for a
// malformed plan, ProducerFailure when generation fails.
RunReport run_inference(const std::string& goal, StepProducer& producer,
                        const RunOptions& options = {});

// Same pipeline with one transition per round; the reference for confluence
// checks. Step texts and conclusion must be byte-identical to run_inference
// with any worker count.
RunReport serial_reference(const std::string& goal, StepProducer& producer,
                           RunOptions options = {});

struct ReplayResult {
  int rounds = 0;
  RunMetrics metrics;  // byte-based costs over the packed trace segments
};

// Validates a finished trace, then re-executes it verbatim against the
// compiled net. Steps that run before their inputs throw InfeasibleOrder.
ReplayResult replay_trace(
    const plan::TraceDocument& doc,
    plan::ConclusionPolicy policy = plan::ConclusionPolicy::MergeSinks);

}  // namespace petriflow::engine
