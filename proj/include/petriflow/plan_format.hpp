// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "petriflow/errors.hpp"
#include "petriflow/graph.hpp"

namespace petriflow::plan {

// Line-oriented trace grammar (canonical serialization, LF only):
//
//   preamble (free text, optional)
//   <Plan>
//   <Outline id="1" deps="">description</Outline>
//   <Outline id="2" deps="1">description</Outline>
//   </Plan>
//   <Execution>
//   <Step i="1">
//   body lines
//   </Step>
//   </Execution>
//   <Conclusion>
//   body lines
//   </Conclusion>
//
// Every tag sits alone on its line except <Outline>, which is single-line.
// Parsing is strict and single-pass; the only accepted deviations from the
// canonical form are CRLF/CR newlines, blank lines between sections, a single
// space after commas in deps, and unsorted dependency lists. Step and
// conclusion bodies are verbatim except that a body line can never equal the
// section's closing tag.
struct OutlineEntry {
  int index = 0;
  std::vector<int> deps;
  std::string description;

  friend bool operator==(const OutlineEntry& a, const OutlineEntry& b) {
    return a.index == b.index && a.deps == b.deps && a.description == b.description;
  }
};

struct PlanDocument {
  std::vector<OutlineEntry> outlines;

  friend bool operator==(const PlanDocument& a, const PlanDocument& b) {
    return a.outlines == b.outlines;
  }
};

struct StepEntry {
  int index = 0;
  std::string text;

  friend bool operator==(const StepEntry& a, const StepEntry& b) {
    return a.index == b.index && a.text == b.text;
  }
};

struct TraceDocument {
  std::string preamble;
  PlanDocument plan;
  std::vector<StepEntry> steps;  // document order, not index order
  std::string conclusion;

  friend bool operator==(const TraceDocument& a, const TraceDocument& b) {
    return a.preamble == b.preamble && a.plan == b.plan && a.steps == b.steps &&
           a.conclusion == b.conclusion;
  }
};

// Documented fault classes, reported via these codes:
//   MalformedTag      tag line does not match the grammar
//   MissingSection    a required section or closing tag is absent
//   BadIndex          outline ids not 1..n in order, dep out of range or
//                     duplicated
//   ForwardDep        dependency on the same or a later outline
//   StepIndexMismatch steps and outlines disagree (missing, extra, duplicate)
//   OrderViolation    a step appears before one of its dependencies

// Index/dependency invariants of a plan, for parsed or constructed documents.
Report verify_plan(const PlanDocument& plan);

// Parses the first <Plan> block of text (preamble tolerated and discarded).
// Throws Error on the first violation.
PlanDocument parse_plan(const std::string& text);

struct Phase1 {
  std::string preamble;
  PlanDocument plan;
};

// Parses a planning-phase stream: optional preamble, then one plan block.
// Content after </Plan> other than blank lines is an error.
Phase1 parse_phase1(const std::string& text);

// Canonical form: LF newlines, deps sorted and deduplicated, no blank lines
// between sections, single trailing newline.
std::string serialize_plan(const PlanDocument& plan);
std::string serialize_trace(const TraceDocument& doc);

// How plan_to_dag treats terminal steps when several exist.
enum class ConclusionPolicy {
  RequireSingle,  // multiple sinks are a PolicyViolation (default)
  AllowMultiple,  // each sink becomes its own conclusion node
  MergeSinks,     // a synthetic conclusion node joins all sinks
};

inline constexpr const char* kSourceNodeId = "_source";
inline constexpr const char* kConclusionNodeId = "_conclusion";

// Node id assigned to outline `index` ("n0007" for outline 7).
std::string node_id_for_outline(int index);
std::optional<int> outline_for_node_id(const std::string& node_id);

// Compiles a verified plan into a ReasoningDag: one node per outline, a
// synthetic source feeding every dependency-free outline, sinks resolved by
// policy. Throws Error on invalid plans (EmptyInput for zero outlines,
// PolicyViolation for multiple sinks under RequireSingle).
graph::ReasoningDag plan_to_dag(const PlanDocument& plan,
                                ConclusionPolicy policy = ConclusionPolicy::RequireSingle);

// Semantic validation of a structurally valid document: plan invariants,
// step/outline agreement, execution order, and DAG compilability.
Report verify_syntax(const TraceDocument& doc,
                     ConclusionPolicy policy = ConclusionPolicy::RequireSingle);

// Structural parse plus verify_syntax. A structural failure yields
// (nullopt, report with the first error); otherwise the document and the
// full semantic report.
std::pair<std::optional<TraceDocument>, Report> check_trace(
    const std::string& text,
    ConclusionPolicy policy = ConclusionPolicy::RequireSingle);

// Strict variant: throws the first violation.
TraceDocument parse_trace(const std::string& text,
                          ConclusionPolicy policy = ConclusionPolicy::RequireSingle);

}  // namespace petriflow::plan
