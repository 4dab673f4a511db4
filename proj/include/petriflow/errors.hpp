// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace petriflow {

// Stable machine-readable failure codes. These appear verbatim in validation
// reports, CLI JSON output, and thrown errors; renaming one is a breaking change.
enum class ErrorCode {
  // structured text parsing
  MalformedTag,
  MissingSection,
  BadIndex,
  ForwardDep,
  CycleDetected,
  StepIndexMismatch,
  OrderViolation,
  // chain parsing
  BadLine,
  EmptyEntity,
  EmptyInput,
  // graph / net construction
  InvalidGraph,
  PolicyViolation,
  // scheduling
  NotEnabled,
  ProducerFailure,
  Deadlock,
  InfeasibleOrder,
  // kv cache
  DeadHandle,
  DoubleRelease,
  NotAnExtension,
  // attention
  LayoutError,
  LeakDetected,
  // engine / cli
  PlanParseFailure,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string location, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) +
                           (location.empty() ? "" : " at " + location) + ": " +
                           message),
        code_(code),
        location_(std::move(location)) {}

  Error(ErrorCode code, const std::string& message) : Error(code, "", message) {}

  ErrorCode code() const { return code_; }
  const std::string& location() const { return location_; }

 private:
  ErrorCode code_;
  std::string location_;
};

// One validation finding. location is a human-oriented anchor such as
// "outline 3", "step 2", "line 14", or a node/place id.
struct Violation {
  std::string code;
  std::string location;
  std::string message;

  Violation() = default;
  Violation(ErrorCode c, std::string loc, std::string msg)
      : code(to_string(c)), location(std::move(loc)), message(std::move(msg)) {}
};

// Aggregated validation result. ok holds iff violations is empty.
struct Report {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  void add(ErrorCode code, std::string location, std::string message) {
    violations.emplace_back(code, std::move(location), std::move(message));
  }

  void merge(const Report& other) {
    violations.insert(violations.end(), other.violations.begin(),
                      other.violations.end());
  }

  // Throws the first violation as an Error. No-op when ok.
  void throw_if_failed() const;

  nlohmann::json to_json() const;
};

}  // namespace petriflow
