// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/engine.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <optional>
#include <set>

#include "petriflow/attention.hpp"
#include "petriflow/graph.hpp"
#include "petriflow/scheduler.hpp"

namespace petriflow::engine {

std::size_t RunMetrics::parallel_cost() const {
  std::size_t c = plan_tokens + conclusion_tokens;
  for (std::size_t r : round_critical) c += r;
  return c;
}

double RunMetrics::speedup() const {
  const std::size_t p = parallel_cost();
  if (p == 0) return 0.0;
  return static_cast<double>(serial_cost()) / static_cast<double>(p);
}

nlohmann::json RunMetrics::to_json() const {
  return {{"planTokens", plan_tokens},
          {"stepTokens", step_tokens},
          {"conclusionTokens", conclusion_tokens},
          {"roundCritical", round_critical},
          {"rounds", rounds},
          {"totalTokens", total_tokens()},
          {"serialCost", serial_cost()},
          {"parallelCost", parallel_cost()},
          {"speedup", speedup()}};
}

nlohmann::json LogEntry::to_json() const {
  return {{"round", round},
          {"transId", trans_id},
          {"inputPlaces", input_places},
          {"outputPlace", output_place},
          {"producedChars", produced_chars},
          {"positions", {pos_begin, pos_end}}};
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json out;
  out["trace"] = plan::serialize_trace(trace);
  out["metrics"] = metrics.to_json();
  out["cacheStats"] = {{"nodes", cache.nodes},
                       {"physicalTokens", cache.physical_tokens},
                       {"liveHandles", cache.live_handles}};
  out["log"] = nlohmann::json::array();
  for (const LogEntry& e : log) out["log"].push_back(e.to_json());
  out["discardedPlanChars"] = discarded_plan_chars;
  return out;
}

namespace {

constexpr const char* kConclusionTrans = "t:_conclusion";

struct PlanCut {
  std::string text;
  std::size_t discarded = 0;
};

// Scans the planning stream chunk by chunk the way a decode loop would,
// stopping at the first </Plan>. Text past the tag never reaches the parser.
PlanCut cut_plan_stream(const std::string& raw, std::size_t chunk) {
  if (chunk == 0) chunk = 64;
  const std::string tag = "</Plan>";
  std::string buf;
  std::size_t consumed = 0;
  std::size_t found = std::string::npos;
  while (consumed < raw.size()) {
    const std::size_t n = std::min(chunk, raw.size() - consumed);
    buf.append(raw, consumed, n);
    consumed += n;
    const std::size_t from =
        buf.size() >= n + tag.size() ? buf.size() - n - tag.size() : 0;
    found = buf.find(tag, from);
    if (found != std::string::npos) break;
  }
  if (found == std::string::npos) {
    throw Error(ErrorCode::PlanParseFailure, "plan",
                "planning stream has no </Plan>; raw text: " + raw);
  }
  std::size_t end = found + tag.size();
  if (end < buf.size() && buf[end] == '\n') {
    ++end;
  } else if (end == buf.size() && consumed < raw.size() && raw[consumed] == '\n') {
    buf += '\n';
    ++consumed;
    ++end;
  }
  PlanCut cut;
  cut.text = buf.substr(0, end);
  cut.discarded = raw.size() - end;
  return cut;
}

std::string seed_text(const std::string& goal, const plan::Phase1& phase1) {
  std::string seed = goal;
  seed += '\n';
  if (!phase1.preamble.empty()) {
    seed += phase1.preamble;
    if (seed.back() != '\n') seed += '\n';
  }
  seed += plan::serialize_plan(phase1.plan);
  while (!seed.empty() && seed.back() == '\n') seed.pop_back();
  return seed;
}

}  // namespace

RunReport run_inference(const std::string& goal, StepProducer& producer,
                        const RunOptions& options) {
  StepResult plan_raw;
  try {
    plan_raw = producer.plan_stream(goal);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ProducerFailure, "plan", e.what());
  }
  const PlanCut cut = cut_plan_stream(plan_raw.text, options.phase1_chunk);
  const plan::Phase1 phase1 = plan::parse_phase1(cut.text);

  const graph::ReasoningDag dag = plan::plan_to_dag(phase1.plan, options.policy);
  graph::PetriNet net = graph::dag_to_petri(dag);
  const bool net_conclusion = net.transitions.count(kConclusionTrans) != 0;

  kv::RadixStore store;
  sched::Scheduler scheduler(std::move(net), &store, options.workers);

  std::map<std::string, std::string> seeds;
  for (const auto& [place, proto] : scheduler.net().initial_marking) {
    seeds[place] = seed_text(goal, phase1);
  }
  sched::Marking m0 = scheduler.initial_marking(seeds);

  std::mutex cost_mu;
  std::map<std::string, std::size_t> costs;
  sched::Producer fn = [&](const sched::FireRequest& req) {
    StepProducer::Request sreq;
    sreq.trans_id = req.trans_id;
    const std::string node = req.trans_id.substr(2);
    sreq.outline_index = plan::outline_for_node_id(node).value_or(-1);
    sreq.description = req.label;
    sreq.context = req.context;
    sreq.conclusion = (node == plan::kConclusionNodeId);
    StepResult sr = producer.step(sreq);
    {
      std::scoped_lock lock(cost_mu);
      costs[req.trans_id] = sr.cost_tokens;
    }
    return sr.text;
  };

  sched::Scheduler::RunResult rr = options.serial
                                       ? scheduler.run_serial(fn, std::move(m0))
                                       : scheduler.run(fn, std::move(m0));

  // Conclusion: produced inside the net when a synthetic join node exists,
  // synthesized from the terminal tokens otherwise.
  std::string conclusion_text;
  std::size_t conclusion_cost = 0;
  std::optional<LogEntry> extra_conclusion;
  if (net_conclusion) {
    conclusion_text = rr.marking.tokens.at(plan::kConclusionNodeId).history.back().text;
    conclusion_cost = costs.at(kConclusionTrans);
  } else {
    std::set<std::string> terminals;
    for (const auto& [id, info] : dag.nodes) {
      if (info.role == graph::NodeRole::Conclusion) terminals.insert(id);
    }
    sched::Assembled assembled = scheduler.assemble_context(rr.marking, terminals);
    StepProducer::Request creq;
    creq.trans_id = kConclusionTrans;
    creq.outline_index = -1;
    creq.description = "conclusion";
    creq.context = assembled.context;
    creq.conclusion = true;
    StepResult sr;
    try {
      sr = producer.step(creq);
    } catch (const std::exception& e) {
      if (assembled.owned) store.release(assembled.handle);
      throw Error(ErrorCode::ProducerFailure, kConclusionTrans, e.what());
    }
    kv::Handle branch = store.fork(assembled.handle, 1)[0];
    store.append(branch, kv::RadixStore::tokenize(sr.text + "\n"));
    if (assembled.owned) store.release(assembled.handle);
    conclusion_text = sr.text;
    conclusion_cost = sr.cost_tokens;
    LogEntry le;
    le.trans_id = kConclusionTrans;
    le.input_places.assign(terminals.begin(), terminals.end());
    le.output_place = plan::kConclusionNodeId;
    le.produced_chars = sr.text.size();
    extra_conclusion = std::move(le);
  }

  RunReport report;
  report.discarded_plan_chars = cut.discarded;
  report.trace.preamble = phase1.preamble;
  report.trace.plan = phase1.plan;
  for (const sched::FiredEvent& ev : rr.log) {
    if (ev.trans_id == kConclusionTrans) continue;
    const auto idx = plan::outline_for_node_id(ev.trans_id.substr(2));
    if (!idx) continue;
    report.trace.steps.push_back(plan::StepEntry{*idx, ev.text});
  }
  report.trace.conclusion = conclusion_text;

  {
    Report check = plan::verify_syntax(report.trace, options.policy);
    check.throw_if_failed();  // internal consistency: the engine must emit
                              // traces its own validator accepts
  }

  report.metrics.plan_tokens = plan_raw.cost_tokens;
  report.metrics.conclusion_tokens = conclusion_cost;
  std::map<int, std::size_t> round_max;
  for (const sched::FiredEvent& ev : rr.log) {
    if (ev.trans_id == kConclusionTrans) continue;
    const std::size_t cost = costs.at(ev.trans_id);
    report.metrics.step_tokens += cost;
    auto [it, fresh] = round_max.try_emplace(ev.round, cost);
    if (!fresh) it->second = std::max(it->second, cost);
  }
  report.metrics.rounds = static_cast<int>(round_max.size());
  for (const auto& [round, m] : round_max) {
    report.metrics.round_critical.push_back(m);
  }

  const attn::SegmentLayout layout = attn::layout_from_trace(report.trace);
  const std::vector<std::uint32_t> positions = attn::build_positions(layout);
  auto seg_range = [&](int seg_id) -> std::pair<std::uint32_t, std::uint32_t> {
    const attn::Segment* seg = layout.segment_by_id(seg_id);
    if (!seg || seg->begin == seg->end) return {0, 0};
    return {positions[seg->begin], positions[seg->end - 1]};
  };
  for (const sched::FiredEvent& ev : rr.log) {
    LogEntry le;
    le.round = ev.round;
    le.trans_id = ev.trans_id;
    le.input_places = ev.input_places;
    le.output_place = ev.output_place;
    le.produced_chars = ev.text.size();
    const bool is_conclusion = ev.trans_id == kConclusionTrans;
    const auto idx = plan::outline_for_node_id(ev.trans_id.substr(2));
    const int seg_id =
        is_conclusion ? attn::kConclusionSegment : idx.value_or(attn::kConclusionSegment);
    std::tie(le.pos_begin, le.pos_end) = seg_range(seg_id);
    report.log.push_back(std::move(le));
  }
  if (extra_conclusion) {
    extra_conclusion->round = rr.rounds;
    std::tie(extra_conclusion->pos_begin, extra_conclusion->pos_end) =
        seg_range(attn::kConclusionSegment);
    report.log.push_back(std::move(*extra_conclusion));
  }

  report.cache = store.stats();
  return report;
}

RunReport serial_reference(const std::string& goal, StepProducer& producer,
                           RunOptions options) {
  options.serial = true;
  options.workers = 1;
  return run_inference(goal, producer, options);
}

ReplayResult replay_trace(const plan::TraceDocument& doc,
                          plan::ConclusionPolicy policy) {
  plan::verify_syntax(doc, policy).throw_if_failed();
  const graph::ReasoningDag dag = plan::plan_to_dag(doc.plan, policy);
  sched::Scheduler scheduler(graph::dag_to_petri(dag));

  std::string seed = plan::serialize_plan(doc.plan);
  while (!seed.empty() && seed.back() == '\n') seed.pop_back();
  std::map<std::string, std::string> seeds;
  for (const auto& [place, proto] : scheduler.net().initial_marking) {
    seeds[place] = seed;
  }
  sched::Marking m = scheduler.initial_marking(seeds);

  std::map<std::string, std::string> texts;
  for (const plan::StepEntry& step : doc.steps) {
    texts["t:" + plan::node_id_for_outline(step.index)] = step.text;
  }
  texts[kConclusionTrans] = doc.conclusion;
  sched::Producer fn = [&](const sched::FireRequest& req) {
    auto it = texts.find(req.trans_id);
    if (it == texts.end()) {
      throw std::runtime_error("trace has no text for " + req.trans_id);
    }
    return it->second;
  };

  int fired = 0;
  for (const plan::StepEntry& step : doc.steps) {
    const std::string trans = "t:" + plan::node_id_for_outline(step.index);
    try {
      scheduler.fire(m, trans, fn, fired);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotEnabled) {
        throw Error(ErrorCode::InfeasibleOrder, "step " + std::to_string(step.index),
                    e.what());
      }
      throw;
    }
    ++fired;
  }
  if (scheduler.net().transitions.count(kConclusionTrans)) {
    scheduler.fire(m, kConclusionTrans, fn, fired);
    ++fired;
  }
  if (!scheduler.frontier(m).enabled.empty()) {
    throw Error(ErrorCode::InfeasibleOrder, "trace",
                "transitions remain unfired after the final step");
  }

  // Byte costs over the packed segments; rounds from the layer structure.
  const attn::SegmentLayout layout = attn::layout_from_trace(doc);
  const std::map<std::string, int> layer =
      graph::transition_layer(scheduler.net());
  ReplayResult result;
  std::map<int, std::size_t> round_max;
  for (const attn::Segment& seg : layout.segments) {
    const std::size_t len = seg.end - seg.begin;
    if (seg.id == attn::kPrefixSegment) {
      result.metrics.plan_tokens = len;
    } else if (seg.id == attn::kConclusionSegment) {
      result.metrics.conclusion_tokens = len;
    } else {
      result.metrics.step_tokens += len;
      const int l = layer.at("t:" + plan::node_id_for_outline(seg.id));
      auto [it, fresh] = round_max.try_emplace(l, len);
      if (!fresh) it->second = std::max(it->second, len);
    }
  }
  result.metrics.rounds = static_cast<int>(round_max.size());
  for (const auto& [round, m2] : round_max) {
    result.metrics.round_critical.push_back(m2);
  }
  result.rounds = result.metrics.rounds;
  return result;
}

}  // namespace petriflow::engine
