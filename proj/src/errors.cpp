// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/errors.hpp"

namespace petriflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedTag: return "MalformedTag";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::ForwardDep: return "ForwardDep";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::StepIndexMismatch: return "StepIndexMismatch";
    case ErrorCode::OrderViolation: return "OrderViolation";
    case ErrorCode::BadLine: return "BadLine";
    case ErrorCode::EmptyEntity: return "EmptyEntity";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::PolicyViolation: return "PolicyViolation";
    case ErrorCode::NotEnabled: return "NotEnabled";
    case ErrorCode::ProducerFailure: return "ProducerFailure";
    case ErrorCode::Deadlock: return "Deadlock";
    case ErrorCode::InfeasibleOrder: return "InfeasibleOrder";
    case ErrorCode::DeadHandle: return "DeadHandle";
    case ErrorCode::DoubleRelease: return "DoubleRelease";
    case ErrorCode::NotAnExtension: return "NotAnExtension";
    case ErrorCode::LayoutError: return "LayoutError";
    case ErrorCode::LeakDetected: return "LeakDetected";
    case ErrorCode::PlanParseFailure: return "PlanParseFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

void Report::throw_if_failed() const {
  if (ok()) return;
  const Violation& v = violations.front();
  // Reverse-map the code string; fall back to InvalidGraph for safety.
  ErrorCode code = ErrorCode::InvalidGraph;
  for (int c = 0; c <= static_cast<int>(ErrorCode::IoError); ++c) {
    if (v.code == to_string(static_cast<ErrorCode>(c))) {
      code = static_cast<ErrorCode>(c);
      break;
    }
  }
  throw Error(code, v.location, v.message);
}

nlohmann::json Report::to_json() const {
  nlohmann::json out;
  out["ok"] = ok();
  out["violations"] = nlohmann::json::array();
  for (const Violation& v : violations) {
    out["violations"].push_back(
        {{"code", v.code}, {"location", v.location}, {"message", v.message}});
  }
  return out;
}

}  // namespace petriflow
