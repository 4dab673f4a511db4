// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/chain_compiler.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace petriflow::chains {

namespace {

std::string loc(std::size_t lineno) { return "line " + std::to_string(lineno + 1); }

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

std::vector<ReasoningChain> parse_chains(const std::string& text,
                                         RepetitionPolicy policy) {
  std::vector<ReasoningChain> chains;
  std::size_t start = 0;
  std::size_t lineno = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string line = text.substr(
        start, nl == std::string::npos ? std::string::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t here = lineno;
    ++lineno;
    if (nl == std::string::npos) {
      start = text.size() + 1;
      if (line.empty()) break;
    } else {
      start = nl + 1;
    }
    if (is_blank(line)) continue;

    std::size_t pos = 0;
    while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) {
      ++pos;
    }
    if (pos == 0 || pos > 9) {
      throw Error(ErrorCode::BadLine, loc(here),
                  "chain line must start with an index");
    }
    ReasoningChain chain;
    chain.index = std::stoi(line.substr(0, pos));
    if (line.compare(pos, 2, ": ") != 0) {
      throw Error(ErrorCode::BadLine, loc(here),
                  "expected ': ' (exactly one space) after the index");
    }
    pos += 2;
    const std::string body = line.substr(pos);
    if (body.empty() || body.front() == ' ') {
      throw Error(ErrorCode::BadLine, loc(here),
                  "expected ': ' (exactly one space) after the index");
    }

    std::size_t at = 0;
    while (true) {
      std::size_t arrow = body.find("->", at);
      std::string entity = body.substr(
          at, arrow == std::string::npos ? std::string::npos : arrow - at);
      if (entity.empty()) {
        throw Error(ErrorCode::EmptyEntity, loc(here), "empty entity");
      }
      if (entity.front() == ' ' || entity.back() == ' ') {
        throw Error(ErrorCode::BadLine, loc(here),
                    "no spaces allowed around '->'");
      }
      chain.entities.push_back(std::move(entity));
      if (arrow == std::string::npos) break;
      at = arrow + 2;
    }
    if (chain.entities.size() < 2) {
      throw Error(ErrorCode::BadLine, loc(here),
                  "a chain needs at least two entities");
    }
    if (policy == RepetitionPolicy::Collapse) {
      auto last = std::unique(chain.entities.begin(), chain.entities.end());
      chain.entities.erase(last, chain.entities.end());
      if (chain.entities.size() < 2) {
        throw Error(ErrorCode::BadLine, loc(here),
                    "chain collapses to a single entity");
      }
    } else {
      for (std::size_t k = 1; k < chain.entities.size(); ++k) {
        if (chain.entities[k] == chain.entities[k - 1]) {
          throw Error(ErrorCode::BadLine, loc(here),
                      "immediate repetition of '" + chain.entities[k] + "'");
        }
      }
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

std::string render_chains(const std::vector<ReasoningChain>& chains) {
  std::ostringstream out;
  for (const ReasoningChain& chain : chains) {
    out << chain.index << ": ";
    for (std::size_t k = 0; k < chain.entities.size(); ++k) {
      if (k) out << "->";
      out << chain.entities[k];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<ReasoningChain> dedup_chains(std::vector<ReasoningChain> chains,
                                         std::size_t cap) {
  std::vector<ReasoningChain> out;
  std::set<std::vector<std::string>> seen;
  for (ReasoningChain& chain : chains) {
    if (out.size() == cap) break;
    if (!seen.insert(chain.entities).second) continue;
    chain.index = static_cast<int>(out.size()) + 1;
    out.push_back(std::move(chain));
  }
  return out;
}

graph::ReasoningDag merge_chains(const std::vector<ReasoningChain>& chains) {
  if (chains.empty()) {
    throw Error(ErrorCode::EmptyInput, "chains", "no chains to merge");
  }
  graph::ReasoningDag dag;
  for (const ReasoningChain& chain : chains) {
    for (const std::string& entity : chain.entities) {
      dag.nodes.emplace(entity, graph::NodeInfo{entity, graph::NodeRole::Hypothesis});
    }
    for (std::size_t k = 1; k < chain.entities.size(); ++k) {
      dag.add_edge(chain.entities[k - 1], chain.entities[k]);
    }
  }
  std::map<std::string, int> in_deg, out_deg;
  for (const auto& [from, to] : dag.edges) {
    ++out_deg[from];
    ++in_deg[to];
  }
  for (auto& [id, info] : dag.nodes) {
    if (!in_deg.count(id)) {
      info.role = graph::NodeRole::Source;
    } else if (!out_deg.count(id)) {
      info.role = graph::NodeRole::Conclusion;
    }
  }
  graph::validate_dag(dag).throw_if_failed();
  return dag;
}

plan::PlanDocument compile_to_plan(const graph::ReasoningDag& dag) {
  graph::validate_dag(dag).throw_if_failed();
  const std::map<std::string, int> layer = graph::node_layer(dag);

  std::vector<std::string> order;
  for (const auto& [id, info] : dag.nodes) {
    if (info.role != graph::NodeRole::Source) order.push_back(id);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) {
                     const int la = layer.at(a), lb = layer.at(b);
                     return la != lb ? la < lb : a < b;
                   });

  std::map<std::string, int> outline_of;
  for (std::size_t k = 0; k < order.size(); ++k) {
    outline_of[order[k]] = static_cast<int>(k) + 1;
  }

  auto label_of = [&](const std::string& id) {
    const std::string& label = dag.nodes.at(id).label;
    return label.empty() ? id : label;
  };

  plan::PlanDocument plan;
  for (const std::string& id : order) {
    plan::OutlineEntry entry;
    entry.index = outline_of.at(id);
    std::vector<std::string> pred_labels;
    for (const std::string& pred : dag.predecessors(id)) {
      pred_labels.push_back(label_of(pred));
      if (dag.nodes.at(pred).role != graph::NodeRole::Source) {
        entry.deps.push_back(outline_of.at(pred));
      }
    }
    std::sort(entry.deps.begin(), entry.deps.end());
    std::sort(pred_labels.begin(), pred_labels.end());
    std::string desc;
    for (std::size_t k = 0; k < pred_labels.size(); ++k) {
      if (k) desc += ',';
      desc += pred_labels[k];
    }
    desc += "->";
    desc += label_of(id);
    entry.description = std::move(desc);
    plan.outlines.push_back(std::move(entry));
  }
  return plan;
}

nlohmann::json MergeStats::to_json() const {
  return {{"nodes", nodes},
          {"edges", edges},
          {"depth", depth},
          {"sharedNodes", shared_nodes}};
}

MergeStats merge_stats(const std::vector<ReasoningChain>& chains,
                       const graph::ReasoningDag& dag) {
  MergeStats stats;
  stats.nodes = dag.nodes.size();
  stats.edges = dag.edges.size();
  int depth = 0;
  for (const auto& [id, l] : graph::node_layer(dag)) depth = std::max(depth, l);
  stats.depth = static_cast<std::size_t>(depth);
  std::map<std::string, int> chain_count;
  for (const ReasoningChain& chain : chains) {
    std::set<std::string> distinct(chain.entities.begin(), chain.entities.end());
    for (const std::string& entity : distinct) ++chain_count[entity];
  }
  for (const auto& [entity, count] : chain_count) {
    if (count > 1) ++stats.shared_nodes;
  }
  return stats;
}

}  // namespace petriflow::chains
