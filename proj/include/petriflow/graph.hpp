// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "petriflow/errors.hpp"
#include "petriflow/kv_cache.hpp"

namespace petriflow::graph {

// Role rules enforced by validate_dag:
//   Source     iff in-degree 0; must have out-degree >= 1
//   Conclusion iff out-degree 0; must have in-degree  >= 1
//   Hypothesis otherwise (in >= 1 and out >= 1 follow)
enum class NodeRole { Source, Hypothesis, Conclusion };

const char* to_string(NodeRole role);

struct NodeInfo {
  std::string label;
  NodeRole role = NodeRole::Hypothesis;
};

// Directed acyclic reasoning graph. Ordered containers keep every traversal
// lexicographic by node id, which all downstream determinism relies on.
struct ReasoningDag {
  std::map<std::string, NodeInfo> nodes;
  std::set<std::pair<std::string, std::string>> edges;

  void add_node(const std::string& id, const std::string& label, NodeRole role) {
    nodes[id] = NodeInfo{label, role};
  }
  void add_edge(const std::string& from, const std::string& to) {
    edges.insert({from, to});
  }
  std::set<std::string> predecessors(const std::string& id) const;
  std::set<std::string> successors(const std::string& id) const;
};

// Full structural check: edge endpoints, acyclicity, role/degree consistency,
// at least one source. Returns all findings rather than stopping at the first.
Report validate_dag(const ReasoningDag& dag);

// One step's contribution to a token's history. origin identifies who wrote
// the text: a transition id, or "input" for the seeded goal context.
struct StepRecord {
  std::string origin;
  std::string text;

  friend bool operator==(const StepRecord& a, const StepRecord& b) {
    return a.origin == b.origin && a.text == b.text;
  }
};

// Colored token: the textual history that reached a place plus zero-copy
// references into the kv store. history order is the context order.
struct SemanticToken {
  std::vector<StepRecord> history;
  std::vector<kv::Handle> cache_refs;
};

struct Transition {
  std::string id;
  std::set<std::string> pre;   // input places, read not consumed
  std::set<std::string> post;  // output places, exactly one by construction
  std::string label;           // the produced node's label
};

// Petri net compiled from a ReasoningDag: one place per node, one transition
// per non-source node ("t:" + node id) aggregating all of its predecessors.
struct PetriNet {
  std::set<std::string> places;
  std::map<std::string, Transition> transitions;
  // Empty tokens seeded on in-degree-0 places.
  std::map<std::string, SemanticToken> initial_marking;
  std::map<std::string, std::string> producer_of;  // place -> transition id
  std::map<std::string, std::string> place_label;
};

// Throws Error(InvalidGraph) carrying the first violation when dag is invalid.
PetriNet dag_to_petri(const ReasoningDag& dag);

// Structural invariants of a compiled net (used by property tests).
Report validate_net(const PetriNet& net);

// layer(t) = max over input places of place depth, where an initially marked
// place has depth 0 and a produced place has depth layer(producer) + 1.
std::map<std::string, int> transition_layer(const PetriNet& net);
std::vector<std::vector<std::string>> transition_layers(const PetriNet& net);

// Number of layers; equals the round count of a full frontier run.
int topological_depth(const PetriNet& net);

// Longest-path layer per node: sources sit at 0, every other node one past
// its deepest predecessor. Throws Error(CycleDetected) on cyclic input.
std::map<std::string, int> node_layer(const ReasoningDag& dag);

std::string to_dot(const ReasoningDag& dag);
std::string to_dot(const PetriNet& net);

}  // namespace petriflow::graph
