// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "petriflow/errors.hpp"
#include "petriflow/graph.hpp"
#include "petriflow/plan_format.hpp"

namespace petriflow::chains {

// One curated chain: "3: A->B->C" becomes {3, {"A","B","C"}}.
//
// Line grammar: INDEX ": " ENTITY ("->" ENTITY)+
//   - exactly one space after the colon
//   - "->" is the only delimiter; no spaces around it (entities may contain
//     internal spaces)
//   - at least two entities, none empty
struct ReasoningChain {
  int index = 0;
  std::vector<std::string> entities;

  friend bool operator==(const ReasoningChain& a, const ReasoningChain& b) {
    return a.index == b.index && a.entities == b.entities;
  }
};

// Strict rejects A->A spans; Collapse folds consecutive duplicates instead.
enum class RepetitionPolicy { Strict, Collapse };

// Single-pass strict parse; the first bad line throws (BadLine, EmptyEntity).
// Blank lines are skipped. Chain indices are kept as written.
std::vector<ReasoningChain> parse_chains(
    const std::string& text, RepetitionPolicy policy = RepetitionPolicy::Strict);

std::string render_chains(const std::vector<ReasoningChain>& chains);

// Keeps the first occurrence of each distinct entity sequence, truncates to
// cap, reindexes from 1.
std::vector<ReasoningChain> dedup_chains(std::vector<ReasoningChain> chains,
                                         std::size_t cap = 10);

// Merges chains into one DAG: nodes keyed by exact entity text, an edge per
// consecutive pair, roles from degrees. Throws CycleDetected when the merged
// edge set is cyclic, EmptyInput for no chains.
graph::ReasoningDag merge_chains(const std::vector<ReasoningChain>& chains);

// Compiles a valid DAG into a plan: one outline per non-source node, ordered
// by (layer, node id); deps are the outline indices of non-source
// predecessors; the description is "PRED1,...->LABEL" over all predecessors
// sorted by label.
plan::PlanDocument compile_to_plan(const graph::ReasoningDag& dag);

struct MergeStats {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t depth = 0;         // transition layers of the compiled net
  std::size_t shared_nodes = 0;  // entities appearing in more than one chain

  nlohmann::json to_json() const;
};

MergeStats merge_stats(const std::vector<ReasoningChain>& chains,
                       const graph::ReasoningDag& dag);

}  // namespace petriflow::chains
