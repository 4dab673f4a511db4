// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "oracles.hpp"
#include "petriflow/chain_compiler.hpp"

using namespace petriflow;
using chains::ReasoningChain;
using chains::RepetitionPolicy;

namespace {

ErrorCode parse_code(const std::string& text,
                     RepetitionPolicy policy = RepetitionPolicy::Strict) {
  try {
    chains::parse_chains(text, policy);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected parse_chains to throw");
  return ErrorCode::BadLine;
}

const std::string kDiamondChains =
    "1: Fever->Dehydration->Sepsis\n"
    "2: Fever->Infection->Sepsis\n";

}  // namespace

TEST_CASE("chain line grammar") {
  const auto parsed = chains::parse_chains("3: A->B->C\n\n7: Heart rate->Shock\n");
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0] == ReasoningChain{3, {"A", "B", "C"}});
  CHECK(parsed[1] == ReasoningChain{7, {"Heart rate", "Shock"}});

  CHECK(parse_code("1:A->B\n") == ErrorCode::BadLine);      // missing space
  CHECK(parse_code("x: A->B\n") == ErrorCode::BadLine);     // non-numeric index
  CHECK(parse_code("1: A\n") == ErrorCode::BadLine);        // single entity
  CHECK(parse_code("no colon\n") == ErrorCode::BadLine);
  CHECK(parse_code("1: A->->B\n") == ErrorCode::EmptyEntity);
  CHECK(parse_code("1: ->B\n") == ErrorCode::EmptyEntity);
  CHECK(parse_code("1: A->B->\n") == ErrorCode::EmptyEntity);
}

TEST_CASE("repetition policy") {
  CHECK(parse_code("1: A->A->B\n") == ErrorCode::BadLine);
  const auto collapsed =
      chains::parse_chains("1: A->A->B->B->B->A\n", RepetitionPolicy::Collapse);
  REQUIRE(collapsed.size() == 1);
  // only consecutive duplicates fold; the trailing A is a genuine revisit
  CHECK(collapsed[0].entities == std::vector<std::string>{"A", "B", "A"});
}

TEST_CASE("render/parse round trip") {
  const auto parsed = chains::parse_chains(kDiamondChains);
  CHECK(chains::render_chains(parsed) == kDiamondChains);
  CHECK(chains::parse_chains(chains::render_chains(parsed)) == parsed);
}

TEST_CASE("dedup keeps first occurrence, caps, reindexes") {
  std::vector<ReasoningChain> input = {
      {9, {"A", "B"}},
      {4, {"C", "D"}},
      {7, {"A", "B"}},  // duplicate sequence, different index
      {1, {"E", "F"}},
  };
  const auto out = chains::dedup_chains(input, 2);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == ReasoningChain{1, {"A", "B"}});
  CHECK(out[1] == ReasoningChain{2, {"C", "D"}});
}

TEST_CASE("merge builds the shared diamond") {
  const graph::ReasoningDag dag =
      chains::merge_chains(chains::parse_chains(kDiamondChains));
  CHECK(dag.nodes.size() == 4);
  CHECK(dag.edges.size() == 4);
  CHECK(dag.nodes.at("Fever").role == graph::NodeRole::Source);
  CHECK(dag.nodes.at("Sepsis").role == graph::NodeRole::Conclusion);
  CHECK(dag.nodes.at("Infection").role == graph::NodeRole::Hypothesis);
  CHECK(graph::validate_dag(dag).ok());

  const chains::MergeStats stats =
      chains::merge_stats(chains::parse_chains(kDiamondChains), dag);
  CHECK(stats.nodes == 4);
  CHECK(stats.edges == 4);
  CHECK(stats.depth == 2);          // {Dehydration, Infection} then {Sepsis}
  CHECK(stats.shared_nodes == 2);   // Fever and Sepsis appear in both chains
}

TEST_CASE("merge failure modes") {
  CHECK_THROWS_AS(chains::merge_chains({}), Error);
  try {
    chains::merge_chains(chains::parse_chains("1: A->B\n2: B->C\n3: C->A\n"));
    FAIL("cycle not detected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CycleDetected);
  }
}

TEST_CASE("compiled plan matches the documented diamond") {
  const auto dag = chains::merge_chains(chains::parse_chains(kDiamondChains));
  const plan::PlanDocument doc = chains::compile_to_plan(dag);
  REQUIRE(doc.outlines.size() == 3);
  CHECK(doc.outlines[0].index == 1);
  CHECK(doc.outlines[0].deps.empty());
  CHECK(doc.outlines[0].description == "Fever->Dehydration");
  CHECK(doc.outlines[1].description == "Fever->Infection");
  CHECK(doc.outlines[2].deps == std::vector<int>{1, 2});
  CHECK(doc.outlines[2].description == "Dehydration,Infection->Sepsis");
  CHECK(plan::verify_plan(doc).ok());
}

TEST_CASE("descriptions list every predecessor sorted by label") {
  // D has predecessors A (via chain 1) and C (via chain 2); C sorts first.
  const auto dag = chains::merge_chains(
      chains::parse_chains("1: A->D->E\n2: B->C->D\n"));
  const plan::PlanDocument doc = chains::compile_to_plan(dag);
  bool found = false;
  for (const auto& o : doc.outlines) {
    if (o.description == "A,C->D") found = true;
  }
  CHECK(found);
}

TEST_CASE("random acyclic chain sets merge and compile cleanly") {
  oracle::Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cs = oracle::random_acyclic_chains(rng);
    const auto parsed = chains::parse_chains(chains::render_chains(cs));
    REQUIRE(parsed == cs);
    const auto dag = chains::merge_chains(chains::dedup_chains(parsed, 10));
    REQUIRE(graph::validate_dag(dag).ok());
    const plan::PlanDocument doc = chains::compile_to_plan(dag);
    REQUIRE(plan::verify_plan(doc).ok());
    // the compiled plan is itself compilable into a valid dag
    const auto round = plan::plan_to_dag(doc, plan::ConclusionPolicy::AllowMultiple);
    REQUIRE(graph::validate_dag(round).ok());
    std::string why;
    CHECK_MESSAGE(oracle::isomorphic_modulo_source(dag, round, &why), why);
  }
}
