// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "oracles.hpp"
#include "petriflow/graph.hpp"

using namespace petriflow;
using graph::NodeRole;
using graph::ReasoningDag;

namespace {

ReasoningDag diamond() {
  ReasoningDag dag;
  dag.add_node("fever", "Fever", NodeRole::Source);
  dag.add_node("dehydration", "Dehydration", NodeRole::Hypothesis);
  dag.add_node("infection", "Infection", NodeRole::Hypothesis);
  dag.add_node("sepsis", "Sepsis", NodeRole::Conclusion);
  dag.add_edge("fever", "dehydration");
  dag.add_edge("fever", "infection");
  dag.add_edge("dehydration", "sepsis");
  dag.add_edge("infection", "sepsis");
  return dag;
}

bool has_code(const Report& report, ErrorCode code) {
  for (const auto& v : report.violations) {
    if (v.code == to_string(code)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("diamond validates clean") {
  CHECK(graph::validate_dag(diamond()).ok());
}

TEST_CASE("cycles are reported") {
  ReasoningDag dag = diamond();
  dag.add_edge("sepsis", "fever");
  dag.nodes["sepsis"].role = NodeRole::Hypothesis;
  dag.nodes["fever"].role = NodeRole::Hypothesis;
  const Report report = graph::validate_dag(dag);
  CHECK_FALSE(report.ok());
  CHECK(has_code(report, ErrorCode::CycleDetected));
}

TEST_CASE("role and degree rules are iff rules") {
  ReasoningDag dag = diamond();
  dag.nodes["fever"].role = NodeRole::Hypothesis;  // in-degree 0, wrong role
  CHECK(has_code(graph::validate_dag(dag), ErrorCode::InvalidGraph));

  dag = diamond();
  dag.nodes["sepsis"].role = NodeRole::Source;  // out-degree 0, wrong role
  CHECK(has_code(graph::validate_dag(dag), ErrorCode::InvalidGraph));

  dag = diamond();
  dag.add_node("orphan", "Orphan", NodeRole::Hypothesis);  // degree 0
  CHECK_FALSE(graph::validate_dag(dag).ok());

  ReasoningDag empty;
  CHECK(has_code(graph::validate_dag(empty), ErrorCode::InvalidGraph));

  dag = diamond();
  dag.add_edge("sepsis", "ghost");  // dangling endpoint
  CHECK_FALSE(graph::validate_dag(dag).ok());

  dag = diamond();
  dag.add_edge("infection", "infection");  // self edge
  CHECK_FALSE(graph::validate_dag(dag).ok());
}

TEST_CASE("dag_to_petri shape") {
  const graph::PetriNet net = graph::dag_to_petri(diamond());
  CHECK(net.places.size() == 4);
  CHECK(net.transitions.size() == 3);  // one per non-source node
  CHECK(net.initial_marking.size() == 1);
  CHECK(net.initial_marking.count("fever") == 1);

  const graph::Transition& join = net.transitions.at("t:sepsis");
  CHECK(join.pre == std::set<std::string>{"dehydration", "infection"});
  CHECK(join.post == std::set<std::string>{"sepsis"});
  CHECK(join.label == "Sepsis");
  CHECK(net.producer_of.at("sepsis") == "t:sepsis");
  CHECK(net.producer_of.count("fever") == 0);

  CHECK(graph::validate_net(net).ok());
}

TEST_CASE("dag_to_petri rejects invalid dags") {
  ReasoningDag dag = diamond();
  dag.add_edge("sepsis", "fever");
  CHECK_THROWS_AS(graph::dag_to_petri(dag), Error);
}

TEST_CASE("layering matches the fixpoint oracle on random dags") {
  oracle::Rng rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const ReasoningDag dag = oracle::random_dag(rng, 10);
    REQUIRE(graph::validate_dag(dag).ok());
    const graph::PetriNet net = graph::dag_to_petri(dag);
    REQUIRE(graph::validate_net(net).ok());

    CHECK(graph::topological_depth(net) == oracle::brute_depth(net));

    const auto node_layers = graph::node_layer(dag);
    const auto brute = oracle::brute_node_layer(dag);
    for (const auto& [id, l] : brute) CHECK(node_layers.at(id) == l);

    // transition_layers groups transitions by layer, in order
    const auto layers = graph::transition_layers(net);
    const auto layer_of = graph::transition_layer(net);
    CHECK(static_cast<int>(layers.size()) == graph::topological_depth(net));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      CHECK(!layers[l].empty());
      for (const auto& t : layers[l]) {
        CHECK(layer_of.at(t) == static_cast<int>(l));
      }
    }
  }
}

TEST_CASE("diamond layers") {
  const graph::PetriNet net = graph::dag_to_petri(diamond());
  const auto layer = graph::transition_layer(net);
  CHECK(layer.at("t:dehydration") == 0);
  CHECK(layer.at("t:infection") == 0);
  CHECK(layer.at("t:sepsis") == 1);
  CHECK(graph::topological_depth(net) == 2);
}

TEST_CASE("dot export carries roles and structure") {
  const std::string dot = graph::to_dot(diamond());
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("\"fever\"") != std::string::npos);
  CHECK(dot.find("box") != std::string::npos);            // source shape
  CHECK(dot.find("doubleoctagon") != std::string::npos);  // conclusion shape
  CHECK(dot.find("\"fever\" -> \"dehydration\"") != std::string::npos);

  const std::string net_dot = graph::to_dot(graph::dag_to_petri(diamond()));
  CHECK(net_dot.find("\"t:sepsis\"") != std::string::npos);
  CHECK(net_dot.find("\"p:fever\"") != std::string::npos);
}
