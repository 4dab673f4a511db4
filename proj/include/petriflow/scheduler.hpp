// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "petriflow/errors.hpp"
#include "petriflow/graph.hpp"
#include "petriflow/kv_cache.hpp"

namespace petriflow::sched {

// Tokens currently sitting on places. Tokens are never consumed: a fired
// transition reads its inputs and fills its output place, so the marking
// grows monotonically and each transition can fire at most once.
struct Marking {
  std::map<std::string, graph::SemanticToken> tokens;

  bool occupied(const std::string& place) const { return tokens.count(place) != 0; }
};

// A transition is enabled when every input place is occupied and every
// output place is still empty.
struct Frontier {
  std::set<std::string> enabled;
  // Enabled transitions sharing an identical input set, groups of two or
  // more; these all extend the same context (fork pattern).
  std::vector<std::vector<std::string>> fork_groups;
  // Enabled transitions with more than one input place (join pattern).
  std::set<std::string> joins;
};

struct FireRequest {
  std::string trans_id;
  std::string label;    // the produced node's label
  std::string context;  // merged input history text
  int round = 0;
};

// Step generator invoked once per firing. Exceptions become ProducerFailure.
using Producer = std::function<std::string(const FireRequest&)>;

struct FiredEvent {
  int round = 0;
  std::string trans_id;
  std::string text;
  std::vector<std::string> input_places;
  std::string output_place;
};

// Inputs of one transition merged in canonical order: places ordered by
// producing transition id (place id for seeded places), histories unioned
// with first-occurrence-wins dedup by record origin.
struct Assembled {
  graph::SemanticToken merged;
  std::string context;            // concat of record texts, each + "\n"
  kv::Handle handle;              // unset when the scheduler has no store
  bool owned = false;             // true when the handle must be released
};

class Scheduler {
 public:
  explicit Scheduler(graph::PetriNet net, kv::RadixStore* store = nullptr,
                     int workers = 1);

  const graph::PetriNet& net() const { return net_; }

  // Marking with one token per seeded place. seed_texts maps a place to the
  // text of an "input" origin record; unlisted places get empty histories.
  Marking initial_marking(
      const std::map<std::string, std::string>& seed_texts = {}) const;

  Frontier frontier(const Marking& m) const;

  // Fires one enabled transition immediately. Throws NotEnabled otherwise,
  // ProducerFailure if the producer throws.
  FiredEvent fire(Marking& m, const std::string& trans_id,
                  const Producer& producer, int round = 0) const;

  // Fires the whole frontier against a frozen input marking and applies the
  // results at the round barrier in ascending transition id order. A producer
  // failure aborts the round: the marking is untouched and partial cache
  // state is released.
  std::vector<FiredEvent> step_round(Marking& m, const Producer& producer,
                                     int round) const;

  struct RunResult {
    Marking marking;
    int rounds = 0;
    std::vector<FiredEvent> log;
  };

  // Runs rounds until the frontier is empty; the round count then equals the
  // net's topological depth. Throws Deadlock if transitions remain unfired.
  RunResult run(const Producer& producer) const;
  RunResult run(const Producer& producer, Marking start) const;

  // Fires one transition per round in (layer, transition id) order. Final
  // token histories are byte-identical to the concurrent run.
  RunResult run_serial(const Producer& producer) const;
  RunResult run_serial(const Producer& producer, Marking start) const;

  Assembled assemble_context(const Marking& m,
                             const std::set<std::string>& places) const;

  static std::string context_text(const graph::SemanticToken& token);

 private:
  struct Computed {
    std::string trans_id;
    graph::SemanticToken token;
    FiredEvent event;
  };
  Computed compute_fire(const Marking& m, const std::string& trans_id,
                        const Producer& producer, int round) const;
  void check_complete(const Marking& m) const;

  graph::PetriNet net_;
  kv::RadixStore* store_;
  int workers_;
};

}  // namespace petriflow::sched
