// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace petriflow::sched {

Scheduler::Scheduler(graph::PetriNet net, kv::RadixStore* store, int workers)
    : net_(std::move(net)), store_(store), workers_(std::max(1, workers)) {}

std::string Scheduler::context_text(const graph::SemanticToken& token) {
  std::string out;
  for (const graph::StepRecord& rec : token.history) {
    out += rec.text;
    out += '\n';
  }
  return out;
}

Marking Scheduler::initial_marking(
    const std::map<std::string, std::string>& seed_texts) const {
  Marking m;
  for (const auto& [place, proto] : net_.initial_marking) {
    graph::SemanticToken token;
    auto it = seed_texts.find(place);
    if (it != seed_texts.end()) {
      token.history.push_back(graph::StepRecord{"input", it->second});
    }
    if (store_) {
      kv::Handle h = store_->new_sequence();
      if (!token.history.empty()) {
        store_->append(h, kv::RadixStore::tokenize(context_text(token)));
      }
      token.cache_refs.push_back(h);
    }
    m.tokens[place] = std::move(token);
  }
  return m;
}

Frontier Scheduler::frontier(const Marking& m) const {
  Frontier f;
  std::map<std::set<std::string>, std::vector<std::string>> by_pre;
  for (const auto& [id, t] : net_.transitions) {
    bool inputs_ready = true;
    for (const std::string& p : t.pre) {
      if (!m.occupied(p)) {
        inputs_ready = false;
        break;
      }
    }
    if (!inputs_ready) continue;
    bool outputs_empty = true;
    for (const std::string& p : t.post) {
      if (m.occupied(p)) {
        outputs_empty = false;
        break;
      }
    }
    if (!outputs_empty) continue;
    f.enabled.insert(id);
    by_pre[t.pre].push_back(id);
    if (t.pre.size() >= 2) f.joins.insert(id);
  }
  for (const auto& [pre, group] : by_pre) {
    if (group.size() >= 2) f.fork_groups.push_back(group);
  }
  return f;
}

Assembled Scheduler::assemble_context(const Marking& m,
                                      const std::set<std::string>& places) const {
  // Canonical input order: ascending producing-transition id, place id for
  // seeded places. This makes the merged history independent of firing order.
  std::vector<std::pair<std::string, std::string>> ordered;  // (key, place)
  for (const std::string& p : places) {
    auto it = net_.producer_of.find(p);
    ordered.push_back({it != net_.producer_of.end() ? it->second : p, p});
  }
  std::sort(ordered.begin(), ordered.end());

  Assembled out;
  std::set<std::string> seen_origins;
  // (input position, record index) of every accepted record, for composing
  // cache views over consecutive same-source runs.
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  std::vector<const graph::SemanticToken*> inputs;
  for (const auto& [key, place] : ordered) {
    inputs.push_back(&m.tokens.at(place));
  }
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    const auto& history = inputs[which]->history;
    for (std::size_t r = 0; r < history.size(); ++r) {
      if (!seen_origins.insert(history[r].origin).second) continue;
      out.merged.history.push_back(history[r]);
      picks.push_back({which, r});
    }
  }
  out.context = context_text(out.merged);

  if (!store_) return out;

  if (inputs.size() == 1) {
    if (inputs[0]->cache_refs.empty()) {
      throw Error(ErrorCode::DeadHandle, "place " + ordered[0].second,
                  "token has no cache reference");
    }
    out.handle = inputs[0]->cache_refs[0];
    out.owned = false;
    return out;
  }

  // Byte offset of each record within its source sequence; records map to
  // text + "\n" spans laid out in history order.
  std::vector<std::vector<std::size_t>> offsets(inputs.size());
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    std::size_t at = 0;
    for (const graph::StepRecord& rec : inputs[which]->history) {
      offsets[which].push_back(at);
      at += rec.text.size() + 1;
    }
  }
  std::vector<kv::SliceView> views;
  std::size_t k = 0;
  while (k < picks.size()) {
    const std::size_t which = picks[k].first;
    const std::size_t first = picks[k].second;
    std::size_t last = first;
    while (k + 1 < picks.size() && picks[k + 1].first == which &&
           picks[k + 1].second == last + 1) {
      ++k;
      ++last;
    }
    ++k;
    const graph::SemanticToken* token = inputs[which];
    if (token->cache_refs.empty()) {
      throw Error(ErrorCode::DeadHandle, "transition input",
                  "token has no cache reference");
    }
    const std::size_t begin = offsets[which][first];
    const std::size_t end =
        offsets[which][last] + token->history[last].text.size() + 1;
    views.push_back(kv::SliceView{token->cache_refs[0], begin, end - begin});
  }
  out.handle = store_->compose(views);
  out.owned = true;
  return out;
}

Scheduler::Computed Scheduler::compute_fire(const Marking& m,
                                            const std::string& trans_id,
                                            const Producer& producer,
                                            int round) const {
  auto it = net_.transitions.find(trans_id);
  if (it == net_.transitions.end()) {
    throw Error(ErrorCode::NotEnabled, trans_id, "unknown transition");
  }
  const graph::Transition& t = it->second;
  for (const std::string& p : t.pre) {
    if (!m.occupied(p)) {
      throw Error(ErrorCode::NotEnabled, trans_id,
                  "input place " + p + " is empty");
    }
  }
  for (const std::string& p : t.post) {
    if (m.occupied(p)) {
      throw Error(ErrorCode::NotEnabled, trans_id,
                  "output place " + p + " is already filled");
    }
  }

  Assembled assembled = assemble_context(m, t.pre);
  FireRequest req{trans_id, t.label, assembled.context, round};
  std::string text;
  try {
    text = producer(req);
  } catch (const std::exception& e) {
    if (store_ && assembled.owned) store_->release(assembled.handle);
    throw Error(ErrorCode::ProducerFailure, trans_id, e.what());
  }

  Computed out;
  out.trans_id = trans_id;
  out.token.history = assembled.merged.history;
  out.token.history.push_back(graph::StepRecord{trans_id, text});
  if (store_) {
    kv::Handle branch = store_->fork(assembled.handle, 1)[0];
    store_->append(branch, kv::RadixStore::tokenize(text + "\n"));
    if (assembled.owned) store_->release(assembled.handle);
    out.token.cache_refs.push_back(branch);
  }
  out.event.round = round;
  out.event.trans_id = trans_id;
  out.event.text = text;
  out.event.input_places.assign(t.pre.begin(), t.pre.end());
  out.event.output_place = *t.post.begin();
  return out;
}

FiredEvent Scheduler::fire(Marking& m, const std::string& trans_id,
                           const Producer& producer, int round) const {
  Computed c = compute_fire(m, trans_id, producer, round);
  m.tokens[c.event.output_place] = std::move(c.token);
  return c.event;
}

std::vector<FiredEvent> Scheduler::step_round(Marking& m, const Producer& producer,
                                              int round) const {
  const Frontier f = frontier(m);
  if (f.enabled.empty()) return {};
  const std::vector<std::string> ids(f.enabled.begin(), f.enabled.end());

  std::vector<std::optional<Computed>> results(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());

  if (workers_ == 1 || ids.size() == 1) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      try {
        results[i] = compute_fire(m, ids[i], producer, round);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= ids.size()) return;
        try {
          results[i] = compute_fire(m, ids[i], producer, round);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const std::size_t n =
        std::min<std::size_t>(static_cast<std::size_t>(workers_), ids.size());
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i]) continue;
    // Round is atomic: unwind every computed sibling before rethrowing.
    if (store_) {
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (results[k] && !results[k]->token.cache_refs.empty()) {
          store_->release(results[k]->token.cache_refs[0]);
        }
      }
    }
    std::rethrow_exception(errors[i]);
  }

  std::vector<FiredEvent> events;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    m.tokens[results[i]->event.output_place] = std::move(results[i]->token);
    events.push_back(std::move(results[i]->event));
  }
  return events;
}

void Scheduler::check_complete(const Marking& m) const {
  for (const std::string& p : net_.places) {
    if (!m.occupied(p)) {
      throw Error(ErrorCode::Deadlock, "place " + p,
                  "no enabled transition can fill this place");
    }
  }
}

Scheduler::RunResult Scheduler::run(const Producer& producer, Marking start) const {
  RunResult result;
  result.marking = std::move(start);
  while (true) {
    std::vector<FiredEvent> events = step_round(result.marking, producer, result.rounds);
    if (events.empty()) break;
    for (FiredEvent& e : events) result.log.push_back(std::move(e));
    ++result.rounds;
  }
  check_complete(result.marking);
  return result;
}

Scheduler::RunResult Scheduler::run(const Producer& producer) const {
  return run(producer, initial_marking());
}

Scheduler::RunResult Scheduler::run_serial(const Producer& producer,
                                           Marking start) const {
  RunResult result;
  result.marking = std::move(start);
  for (const auto& layer : graph::transition_layers(net_)) {
    for (const std::string& id : layer) {
      result.log.push_back(fire(result.marking, id, producer, result.rounds));
      ++result.rounds;
    }
  }
  check_complete(result.marking);
  return result;
}

Scheduler::RunResult Scheduler::run_serial(const Producer& producer) const {
  return run_serial(producer, initial_marking());
}

}  // namespace petriflow::sched
