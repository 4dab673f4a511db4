// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0
//
// Release gate. Each numbered check prints exactly one PASS/FAIL line; the
// process exits non-zero if any check fails. Checks are property suites with
// frozen seeds, so a failure here is reproducible as-is.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "petriflow/attention.hpp"
#include "petriflow/chain_compiler.hpp"
#include "petriflow/engine.hpp"
#include "petriflow/graph.hpp"
#include "petriflow/kv_cache.hpp"
#include "petriflow/plan_format.hpp"
#include "petriflow/scheduler.hpp"

using namespace petriflow;
using nlohmann::json;

#ifndef PETRIFLOW_FIXTURES_DIR
#error "PETRIFLOW_FIXTURES_DIR must point at tests/fixtures"
#endif

namespace {

int g_failures = 0;

void outcome(int number, const std::string& name, bool pass,
             const std::string& detail) {
  std::printf("%s  %2d. %s%s%s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
              detail.empty() ? "" : "  -- ", detail.c_str());
  if (!pass) ++g_failures;
}

void criterion(int number, const std::string& name,
               const std::function<std::string()>& body) {
  try {
    const std::string detail = body();
    const bool pass = detail.rfind("FAIL", 0) != 0;
    outcome(number, name, pass, pass ? detail : detail.substr(4));
  } catch (const std::exception& e) {
    outcome(number, name, false, std::string("exception: ") + e.what());
  }
}

std::string fixture(const std::string& rel) {
  const std::string path = std::string(PETRIFLOW_FIXTURES_DIR) + "/" + rel;
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("missing fixture " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// --------------------------------------------------------------- criteria

// 1. The scheduler's frontier equals the set comprehension "all inputs
// occupied and all outputs empty" on random nets and random markings.
std::string check_frontier() {
  oracle::Rng rng(101);
  int nets = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const graph::PetriNet net = graph::dag_to_petri(oracle::random_dag(rng, 12));
    const sched::Scheduler sch(net);
    sched::Marking m = sch.initial_marking();
    // three markings per net: seeded, seeded + random extras, random-only
    for (int variant = 0; variant < 3; ++variant) {
      if (variant == 2) m.tokens.clear();
      if (variant > 0) {
        for (const auto& place : net.places) {
          if (!m.occupied(place) && oracle::rand_bool(rng, 0.4)) {
            m.tokens[place] = graph::SemanticToken{};
          }
        }
      }
      const sched::Frontier f = sch.frontier(m);
      if (f.enabled != oracle::naive_frontier(net, m)) {
        return "FAILmismatch on net " + std::to_string(trial);
      }
      for (const auto& group : f.fork_groups) {
        if (group.size() < 2) return "FAILfork group of one";
        for (const auto& t : group) {
          if (net.transitions.at(t).pre != net.transitions.at(group[0]).pre) {
            return "FAILfork group with differing inputs";
          }
        }
      }
      for (const auto& t : f.joins) {
        if (net.transitions.at(t).pre.size() < 2) {
          return "FAILjoin with a single input";
        }
      }
    }
    ++nets;
  }
  return std::to_string(nets) + " nets, 3 markings each, zero mismatches";
}

// 2. A full run fires every transition exactly once and takes exactly
// topological_depth rounds, with the depth cross-checked by fixpoint search.
std::string check_exactly_once() {
  oracle::Rng rng(202);
  for (int trial = 0; trial < 1000; ++trial) {
    const graph::PetriNet net = graph::dag_to_petri(oracle::random_dag(rng, 12));
    const sched::Scheduler sch(net);
    const auto rr = sch.run([](const sched::FireRequest& rq) {
      return "step " + rq.trans_id;
    });
    std::map<std::string, int> fired;
    for (const auto& ev : rr.log) ++fired[ev.trans_id];
    for (const auto& [id, t] : net.transitions) {
      if (fired[id] != 1) {
        return "FAIL" + id + " fired " + std::to_string(fired[id]) + " times";
      }
    }
    if (fired.size() != net.transitions.size()) return "FAILunknown transition fired";
    const int depth = graph::topological_depth(net);
    if (rr.rounds != depth || depth != oracle::brute_depth(net)) {
      return "FAILrounds " + std::to_string(rr.rounds) + " vs depth " +
             std::to_string(depth);
    }
  }
  return "1000 nets, each transition once, rounds = depth";
}

// 3. Concurrent execution and the serial reference produce byte-identical
// traces under the deterministic producer.
std::string check_confluence() {
  oracle::Rng rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    const std::string plan_text =
        plan::serialize_plan(oracle::random_plan(rng, 10));
    engine::SyntheticProducer par(plan_text, 9000ull + trial, 20, 90);
    engine::SyntheticProducer ser(plan_text, 9000ull + trial, 20, 90);
    engine::RunOptions opt;
    opt.workers = 1 + trial % 8;
    const engine::RunReport a = engine::run_inference("goal", par, opt);
    const engine::RunReport b = engine::serial_reference("goal", ser);
    if (plan::serialize_trace(a.trace) != plan::serialize_trace(b.trace)) {
      return "FAILtrace divergence on plan " + std::to_string(trial);
    }
  }
  return "200 plans, workers 1..8, byte-identical traces";
}

// 4. The mask builder agrees with the three-case evaluator cell-for-cell,
// passes the leakage audit, and the audit catches injected faults.
std::string check_mask() {
  oracle::Rng rng(404);
  int cells = 0;
  int injected = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const attn::SegmentLayout layout = oracle::random_layer_complete_layout(rng, 64);
    if (!attn::validate_layout(layout).ok()) return "FAILgenerator made a bad layout";
    attn::Mask mask = attn::build_mask(layout);
    std::vector<std::pair<std::size_t, std::size_t>> blocked;
    for (std::size_t i = 0; i < mask.n; ++i) {
      for (std::size_t j = 0; j < mask.n; ++j) {
        if (mask.at(i, j) != oracle::naive_mask_cell(layout, i, j)) {
          return "FAILcell (" + std::to_string(i) + "," + std::to_string(j) +
                 ") differs on layout " + std::to_string(trial);
        }
        ++cells;
        if (!mask.at(i, j)) blocked.push_back({i, j});
      }
    }
    if (!attn::verify_no_leakage(layout, mask).ok()) {
      return "FAILleak audit rejected a correct mask";
    }
    if (!blocked.empty()) {
      const auto [i, j] = blocked[static_cast<std::size_t>(oracle::rand_int(
          rng, 0, static_cast<int>(blocked.size()) - 1))];
      mask.set(i, j, true);
      if (attn::verify_no_leakage(layout, mask).ok()) {
        return "FAILinjected fault at (" + std::to_string(i) + "," +
               std::to_string(j) + ") not detected";
      }
      ++injected;
    }
  }
  return "500 layouts, " + std::to_string(cells) + " cells, " +
         std::to_string(injected) + " injected faults all detected";
}

// 5. Positions follow the topology rules: forks share starts, a join resumes
// one past its longest predecessor, linear layouts count 0..N-1.
std::string check_positions() {
  oracle::Rng rng(505);
  for (int trial = 0; trial < 500; ++trial) {
    const attn::SegmentLayout layout = oracle::random_layer_complete_layout(rng, 64);
    const auto got = attn::build_positions(layout);
    const auto want = oracle::naive_positions(layout);
    if (got != want) return "FAILposition drift on layout " + std::to_string(trial);

    // rule spot-checks straight off the layout
    std::map<int, std::uint32_t> start, last;
    for (const attn::Segment& seg : layout.segments) {
      start[seg.id] = got[seg.begin];
      last[seg.id] = got[seg.end - 1];
    }
    for (const auto& [id, deps] : layout.deps) {
      if (deps.empty()) continue;
      std::uint32_t m = 0;
      for (int d : deps) m = std::max(m, last.at(d));
      if (start.at(id) != m + 1) {
        return "FAILjoin start off by " +
               std::to_string(static_cast<long>(start.at(id)) - (m + 1));
      }
    }
    for (const auto& [a, da] : layout.deps) {
      for (const auto& [b, db] : layout.deps) {
        if (a < b && da == db && start.at(a) != start.at(b)) {
          return "FAILsiblings with unequal starts";
        }
      }
    }
  }

  // strictly linear layout: positions must collapse to the identity
  attn::SegmentLayout linear;
  linear.segments = {{attn::kPrefixSegment, -1, 0, 7},
                     {1, 0, 7, 13},
                     {2, 1, 13, 21},
                     {3, 2, 21, 30},
                     {attn::kConclusionSegment, 3, 30, 40}};
  linear.deps = {{1, {}}, {2, {1}}, {3, {2}}};
  linear.total = 40;
  const auto pos = attn::build_positions(linear);
  for (std::size_t t = 0; t < linear.total; ++t) {
    if (pos[t] != t) return "FAILlinear layout is not 0..N-1";
  }
  return "500 layouts plus the linear identity, zero violations";
}

// 6. Forking a long prefix and joining the branches moves no token storage.
std::string check_zero_copy() {
  oracle::Rng rng(606);
  kv::RadixStore store;
  std::vector<kv::TokenId> prefix(512);
  for (auto& t : prefix) t = oracle::rand_int(rng, 0, 255);
  kv::Handle h = store.new_sequence();
  store.append(h, prefix);
  const std::size_t before = store.stats().physical_tokens;
  if (before != 512) return "FAILprefix stored " + std::to_string(before);

  const std::vector<kv::Handle> branches = store.fork(h, 8);
  const std::size_t after_fork = store.stats().physical_tokens;
  if (after_fork != before) {
    return "FAILfork added " + std::to_string(after_fork - before) + " tokens";
  }

  const kv::Handle joined = store.join_merge(branches, h);
  const std::size_t after_join = store.stats().physical_tokens;
  if (after_join != before) {
    return "FAILjoin added " + std::to_string(after_join - before) + " tokens";
  }
  if (store.length(joined) != 512) return "FAILjoin length drift";

  // the fork is O(path): forking again after heavy unrelated growth touches
  // the same number of nodes
  const std::size_t visits_small = store.last_op_node_visits();
  (void)visits_small;
  store.fork(h, 1);
  const std::size_t probe = store.last_op_node_visits();
  for (int s = 0; s < 64; ++s) {
    kv::Handle noise = store.new_sequence();
    std::vector<kv::TokenId> body(64);
    for (auto& t : body) t = oracle::rand_int(rng, 0, 255);
    store.append(noise, body);
  }
  store.fork(h, 1);
  if (store.last_op_node_visits() != probe) {
    return "FAILfork cost moved with store size";
  }
  return "512-token prefix: fork x8 +0, join_merge +0 physical tokens";
}

// 7. The radix store always materializes what a flat copying store would,
// while never using more storage, across random lifecycle op sequences.
std::string check_cache_oracle() {
  oracle::Rng rng(707);
  long ops_run = 0;
  for (int seq = 0; seq < 10000; ++seq) {
    kv::RadixStore store;
    oracle::NaiveStore naive;
    std::vector<std::pair<kv::Handle, std::uint64_t>> live;
    const int ops = oracle::rand_int(rng, 3, 25);
    for (int op = 0; op < ops; ++op, ++ops_run) {
      const int kind = oracle::rand_int(rng, 0, 4);
      if (kind == 0 || live.empty()) {
        std::vector<kv::TokenId> toks(
            static_cast<std::size_t>(oracle::rand_int(rng, 1, 24)));
        for (auto& t : toks) t = oracle::rand_int(rng, 0, 7);
        kv::Handle h = store.new_sequence();
        store.append(h, toks);
        const std::uint64_t nh = naive.new_sequence();
        naive.append(nh, toks);
        live.push_back({h, nh});
      } else if (kind == 1) {
        const auto [h, nh] = live[static_cast<std::size_t>(
            oracle::rand_int(rng, 0, static_cast<int>(live.size()) - 1))];
        std::vector<kv::TokenId> toks(
            static_cast<std::size_t>(oracle::rand_int(rng, 1, 16)));
        for (auto& t : toks) t = oracle::rand_int(rng, 0, 7);
        store.append(h, toks);
        naive.append(nh, toks);
      } else if (kind == 2) {
        const auto [h, nh] = live[static_cast<std::size_t>(
            oracle::rand_int(rng, 0, static_cast<int>(live.size()) - 1))];
        const auto hs = store.fork(h, 2);
        const auto nhs = naive.fork(nh, 2);
        live.push_back({hs[0], nhs[0]});
        live.push_back({hs[1], nhs[1]});
      } else if (kind == 3) {
        const std::size_t pick = static_cast<std::size_t>(
            oracle::rand_int(rng, 0, static_cast<int>(live.size()) - 1));
        store.release(live[pick].first);
        naive.release(live[pick].second);
        live.erase(live.begin() + static_cast<long>(pick));
      } else {
        const auto [ph, pn] = live[static_cast<std::size_t>(
            oracle::rand_int(rng, 0, static_cast<int>(live.size()) - 1))];
        const auto branches = store.fork(ph, 2);
        const auto nbs = naive.fork(pn, 2);
        std::vector<kv::TokenId> sfx(
            static_cast<std::size_t>(oracle::rand_int(rng, 1, 8)));
        for (auto& t : sfx) t = oracle::rand_int(rng, 0, 7);
        store.append(branches[1], sfx);
        naive.append(nbs[1], sfx);
        live.push_back(
            {store.join_merge({branches[0], branches[1]}, ph),
             naive.join_merge({nbs[0], nbs[1]}, pn)});
        live.push_back({branches[0], nbs[0]});
        live.push_back({branches[1], nbs[1]});
      }
      if (store.stats().physical_tokens > naive.storage()) {
        return "FAILstorage " + std::to_string(store.stats().physical_tokens) +
               " exceeds naive " + std::to_string(naive.storage()) + " at seq " +
               std::to_string(seq);
      }
    }
    for (const auto& [h, nh] : live) {
      if (store.materialize(h) != naive.materialize(nh)) {
        return "FAILmaterialization diverged at seq " + std::to_string(seq);
      }
    }
    if (store.stats().live_handles != live.size()) {
      return "FAILhandle accounting drifted";
    }
  }
  return "10000 sequences (" + std::to_string(ops_run) +
         " ops), equal content, storage <= naive throughout";
}

// 8. Cost-model trend: branch-heavy plans beat serial by > 1.2x on average,
// and the canonical 8-branch equal-length workload lands on exactly 4.5x.
std::string check_speedup_trend() {
  oracle::Rng rng(808);
  double sum = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int branches = oracle::rand_int(rng, 2, 8);
    json script;
    std::string plan = "<Plan>\n";
    json steps = json::object();
    // wide fan-out, then one joining outline depending on everything
    for (int b = 1; b <= branches; ++b) {
      plan += "<Outline id=\"" + std::to_string(b) + "\" deps=\"\">branch " +
              std::to_string(b) + "</Outline>\n";
      steps[std::to_string(b)] = {
          {"text", "branch work " + std::to_string(b)},
          {"cost", oracle::rand_int(rng, 50, 200)}};
    }
    std::string deps;
    for (int b = 1; b <= branches; ++b) deps += (b > 1 ? "," : "") + std::to_string(b);
    plan += "<Outline id=\"" + std::to_string(branches + 1) + "\" deps=\"" + deps +
            "\">synthesis</Outline>\n</Plan>\n";
    steps[std::to_string(branches + 1)] = {{"text", "joint synthesis"},
                                           {"cost", oracle::rand_int(rng, 50, 200)}};
    script["plan"] = plan;
    script["planCost"] = 50;
    script["steps"] = steps;
    script["conclusion"] = {{"text", "final answer"}, {"cost", 50}};

    engine::ScriptedProducer producer(script);
    const engine::RunReport report = engine::run_inference("trend", producer);
    const double s = report.metrics.speedup();
    if (s <= 1.0) return "FAILplan " + std::to_string(trial) + " slowed down";
    sum += s;
  }
  const double mean = sum / 100.0;
  if (mean <= 1.2) return "FAILmean speedup " + fmt(mean);

  engine::ScriptedProducer fixture_producer(
      json::parse(fixture("scripts/branch8.json")));
  const engine::RunReport fixed = engine::run_inference("fixture", fixture_producer);
  if (fixed.metrics.serial_cost() != 900 || fixed.metrics.parallel_cost() != 200) {
    return "FAILfixture costs " + std::to_string(fixed.metrics.serial_cost()) +
           "/" + std::to_string(fixed.metrics.parallel_cost());
  }
  if (fixed.metrics.speedup() != 4.5) {
    return "FAILfixture speedup " + fmt(fixed.metrics.speedup());
  }
  return "mean " + fmt(mean) + "x over 100 plans; 8-branch fixture exactly 4.500x";
}

// 9. Chain corpora compile to plans that round-trip to the same DAG modulo
// the synthetic source; cyclic corpora are always rejected.
std::string check_curator() {
  oracle::Rng rng(909);
  for (int trial = 0; trial < 500; ++trial) {
    const auto cs = oracle::random_acyclic_chains(rng, 6);
    const auto rendered = chains::render_chains(cs);
    const auto parsed = chains::parse_chains(rendered);
    if (parsed != cs) return "FAILchain render/parse drift";
    const graph::ReasoningDag merged =
        chains::merge_chains(chains::dedup_chains(parsed, 10));
    const plan::PlanDocument doc = chains::compile_to_plan(merged);
    if (!plan::verify_plan(doc).ok()) return "FAILcompiled plan invalid";
    const plan::PlanDocument reparsed = plan::parse_plan(plan::serialize_plan(doc));
    if (!(reparsed == doc)) return "FAILplan serialization drift";
    const graph::ReasoningDag round =
        plan::plan_to_dag(reparsed, plan::ConclusionPolicy::AllowMultiple);
    std::string why;
    if (!oracle::isomorphic_modulo_source(merged, round, &why)) {
      return "FAILnot isomorphic on set " + std::to_string(trial) + ": " + why;
    }

    // poison the same corpus with a back edge; the merge must reject it
    auto cyclic = cs;
    const auto& victim = cyclic[static_cast<std::size_t>(
        oracle::rand_int(rng, 0, static_cast<int>(cyclic.size()) - 1))];
    if (victim.entities.size() >= 2) {
      chains::ReasoningChain back;
      back.index = 99;
      back.entities = {victim.entities.back(), victim.entities.front()};
      cyclic.push_back(back);
      try {
        chains::merge_chains(cyclic);
        return "FAILcycle accepted on set " + std::to_string(trial);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::CycleDetected) {
          return "FAILwrong rejection code";
        }
      }
    }
  }
  return "500 corpora round-trip isomorphic; every cyclic variant rejected";
}

// 10. The fixture corpus round-trips byte for byte and each documented fault
// class is caught with its own code.
std::string check_format() {
  const char* corpus[] = {"diamond", "chain", "wide", "single", "preamble_heavy"};
  for (const char* name : corpus) {
    const std::string text = fixture(std::string("corpus/") + name + ".txt");
    const plan::TraceDocument doc = plan::parse_trace(text);
    if (plan::serialize_trace(doc) != text) {
      return std::string("FAILserialize(parse(x)) != x for ") + name;
    }
    if (!(plan::parse_trace(plan::serialize_trace(doc)) == doc)) {
      return std::string("FAILparse/serialize unstable for ") + name;
    }
  }
  const std::pair<const char*, ErrorCode> faults[] = {
      {"malformed_tag", ErrorCode::MalformedTag},
      {"missing_section", ErrorCode::MissingSection},
      {"bad_index", ErrorCode::BadIndex},
      {"forward_dep", ErrorCode::ForwardDep},
      {"step_index_mismatch", ErrorCode::StepIndexMismatch},
      {"order_violation", ErrorCode::OrderViolation},
  };
  for (const auto& [name, code] : faults) {
    const std::string text = fixture(std::string("faults/") + name + ".txt");
    const auto [doc, report] = plan::check_trace(text);
    if (report.ok()) return std::string("FAILfault not caught: ") + name;
    bool found = false;
    for (const auto& v : report.violations) {
      if (v.code == to_string(code)) found = true;
    }
    if (!found) {
      return std::string("FAILwrong code for ") + name + ": got " +
             report.violations.front().code;
    }
  }
  return "5 corpus files identical through round-trip; 6 fault classes detected";
}

}  // namespace

int main() {
  std::printf("petriflow acceptance suite\n");
  criterion(1, "frontier equals the naive enabling rule", check_frontier);
  criterion(2, "each transition fires once in depth-many rounds", check_exactly_once);
  criterion(3, "parallel and serial traces are byte-identical", check_confluence);
  criterion(4, "mask matches the cell rule and resists tampering", check_mask);
  criterion(5, "positions follow the fork/join/linear rules", check_positions);
  criterion(6, "fork and join of a 512-token prefix copy nothing", check_zero_copy);
  criterion(7, "radix store tracks the flat store, never larger", check_cache_oracle);
  criterion(8, "branch-heavy plans beat serial; fixture is 4.5x", check_speedup_trend);
  criterion(9, "chain corpora round-trip modulo the source node", check_curator);
  criterion(10, "corpus round-trips; all fault classes detected", check_format);
  if (g_failures == 0) {
    std::printf("all 10 criteria pass\n");
  } else {
    std::printf("%d of 10 criteria FAILED\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
