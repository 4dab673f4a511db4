// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/graph.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace petriflow::graph {

const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::Source: return "source";
    case NodeRole::Hypothesis: return "hypothesis";
    case NodeRole::Conclusion: return "conclusion";
  }
  return "unknown";
}

std::set<std::string> ReasoningDag::predecessors(const std::string& id) const {
  std::set<std::string> out;
  for (const auto& [from, to] : edges) {
    if (to == id) out.insert(from);
  }
  return out;
}

std::set<std::string> ReasoningDag::successors(const std::string& id) const {
  std::set<std::string> out;
  for (const auto& [from, to] : edges) {
    if (from == id) out.insert(to);
  }
  return out;
}

namespace {

// Iterative three-color DFS; fills `cycle_node` with a node on a back edge.
bool has_cycle(const ReasoningDag& dag, std::string* cycle_node) {
  std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
  for (const auto& [id, info] : dag.nodes) color[id] = 0;
  for (const auto& [start, info] : dag.nodes) {
    if (color[start] != 0) continue;
    std::vector<std::pair<std::string, bool>> stack{{start, false}};
    while (!stack.empty()) {
      auto [node, done] = stack.back();
      stack.pop_back();
      if (done) {
        color[node] = 2;
        continue;
      }
      if (color[node] == 2) continue;
      color[node] = 1;
      stack.push_back({node, true});
      for (const std::string& next : dag.successors(node)) {
        if (!dag.nodes.count(next)) continue;
        if (color[next] == 1) {
          *cycle_node = next;
          return true;
        }
        if (color[next] == 0) stack.push_back({next, false});
      }
    }
  }
  return false;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Report validate_dag(const ReasoningDag& dag) {
  Report report;
  if (dag.nodes.empty()) {
    report.add(ErrorCode::InvalidGraph, "graph", "graph has no nodes");
    return report;
  }

  std::map<std::string, int> in_deg, out_deg;
  for (const auto& [id, info] : dag.nodes) {
    in_deg[id] = 0;
    out_deg[id] = 0;
  }
  bool endpoints_ok = true;
  for (const auto& [from, to] : dag.edges) {
    if (!dag.nodes.count(from)) {
      report.add(ErrorCode::InvalidGraph, "edge " + from + "->" + to,
                 "edge source is not a node");
      endpoints_ok = false;
    }
    if (!dag.nodes.count(to)) {
      report.add(ErrorCode::InvalidGraph, "edge " + from + "->" + to,
                 "edge target is not a node");
      endpoints_ok = false;
    }
    if (from == to) {
      report.add(ErrorCode::CycleDetected, "edge " + from + "->" + to,
                 "self edge");
      endpoints_ok = false;
    }
    if (dag.nodes.count(from)) ++out_deg[from];
    if (dag.nodes.count(to)) ++in_deg[to];
  }

  if (endpoints_ok) {
    std::string cycle_node;
    if (has_cycle(dag, &cycle_node)) {
      report.add(ErrorCode::CycleDetected, "node " + cycle_node,
                 "graph contains a cycle");
    }
  }

  int sources = 0;
  for (const auto& [id, info] : dag.nodes) {
    const int in = in_deg[id];
    const int out = out_deg[id];
    switch (info.role) {
      case NodeRole::Source:
        ++sources;
        if (in != 0) {
          report.add(ErrorCode::InvalidGraph, "node " + id,
                     "source has incoming edges");
        }
        if (out == 0) {
          report.add(ErrorCode::InvalidGraph, "node " + id,
                     "source has no outgoing edges");
        }
        break;
      case NodeRole::Conclusion:
        if (out != 0) {
          report.add(ErrorCode::InvalidGraph, "node " + id,
                     "conclusion has outgoing edges");
        }
        if (in == 0) {
          report.add(ErrorCode::InvalidGraph, "node " + id,
                     "conclusion has no incoming edges");
        }
        break;
      case NodeRole::Hypothesis:
        if (in == 0) {
          report.add(ErrorCode::InvalidGraph, "node " + id,
                     "hypothesis has no incoming edges; should be a source");
        }
        if (out == 0) {
          report.add(ErrorCode::InvalidGraph, "node " + id,
                     "hypothesis has no outgoing edges; should be a conclusion");
        }
        break;
    }
  }
  if (sources == 0) {
    report.add(ErrorCode::InvalidGraph, "graph", "graph has no source node");
  }
  return report;
}

PetriNet dag_to_petri(const ReasoningDag& dag) {
  Report report = validate_dag(dag);
  if (!report.ok()) report.throw_if_failed();

  PetriNet net;
  for (const auto& [id, info] : dag.nodes) {
    net.places.insert(id);
    net.place_label[id] = info.label;
  }
  for (const auto& [id, info] : dag.nodes) {
    std::set<std::string> preds = dag.predecessors(id);
    if (preds.empty()) {
      net.initial_marking[id] = SemanticToken{};
      continue;
    }
    Transition t;
    t.id = "t:" + id;
    t.pre = std::move(preds);
    t.post = {id};
    t.label = info.label;
    net.producer_of[id] = t.id;
    net.transitions[t.id] = std::move(t);
  }
  return net;
}

Report validate_net(const PetriNet& net) {
  Report report;
  if (net.places.empty()) {
    report.add(ErrorCode::InvalidGraph, "net", "net has no places");
    return report;
  }
  for (const auto& [id, t] : net.transitions) {
    if (t.id != id) {
      report.add(ErrorCode::InvalidGraph, "transition " + id,
                 "transition key does not match id");
    }
    if (t.pre.empty()) {
      report.add(ErrorCode::InvalidGraph, "transition " + id,
                 "transition has no input places");
    }
    if (t.post.size() != 1) {
      report.add(ErrorCode::InvalidGraph, "transition " + id,
                 "transition must have exactly one output place");
    }
    for (const std::string& p : t.pre) {
      if (!net.places.count(p)) {
        report.add(ErrorCode::InvalidGraph, "transition " + id,
                   "input place " + p + " does not exist");
      }
    }
    for (const std::string& p : t.post) {
      if (!net.places.count(p)) {
        report.add(ErrorCode::InvalidGraph, "transition " + id,
                   "output place " + p + " does not exist");
      }
      auto it = net.producer_of.find(p);
      if (it == net.producer_of.end() || it->second != id) {
        report.add(ErrorCode::InvalidGraph, "place " + p,
                   "producer index disagrees with transition outputs");
      }
    }
  }
  for (const std::string& p : net.places) {
    const bool seeded = net.initial_marking.count(p) != 0;
    const bool produced = net.producer_of.count(p) != 0;
    if (seeded == produced) {
      report.add(ErrorCode::InvalidGraph, "place " + p,
                 seeded ? "place is both seeded and produced"
                        : "place is neither seeded nor produced");
    }
  }
  if (!report.ok()) return report;
  try {
    transition_layer(net);
  } catch (const Error& e) {
    report.add(e.code(), e.location(), "layering failed: cyclic net");
  }
  return report;
}

std::map<std::string, int> transition_layer(const PetriNet& net) {
  std::map<std::string, int> layer;
  std::map<std::string, int> place_depth;
  // Place depth via memoized recursion over producers; gray-marking detects
  // cycles, which a net built from a valid DAG cannot have.
  std::map<std::string, int> state;  // 0 new, 1 in progress, 2 done
  std::function<int(const std::string&)> depth_of = [&](const std::string& place) -> int {
    auto it = place_depth.find(place);
    if (it != place_depth.end()) return it->second;
    if (state[place] == 1) {
      throw Error(ErrorCode::CycleDetected, "place " + place,
                  "cyclic producer chain");
    }
    state[place] = 1;
    int d = 0;
    auto pit = net.producer_of.find(place);
    if (pit != net.producer_of.end()) {
      const Transition& t = net.transitions.at(pit->second);
      int l = 0;
      for (const std::string& p : t.pre) l = std::max(l, depth_of(p));
      layer[t.id] = l;
      d = l + 1;
    }
    state[place] = 2;
    place_depth[place] = d;
    return d;
  };
  for (const std::string& p : net.places) depth_of(p);
  return layer;
}

std::vector<std::vector<std::string>> transition_layers(const PetriNet& net) {
  std::map<std::string, int> layer = transition_layer(net);
  int depth = 0;
  for (const auto& [id, l] : layer) depth = std::max(depth, l + 1);
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(depth));
  for (const auto& [id, l] : layer) out[static_cast<std::size_t>(l)].push_back(id);
  for (auto& group : out) std::sort(group.begin(), group.end());
  return out;
}

int topological_depth(const PetriNet& net) {
  return static_cast<int>(transition_layers(net).size());
}

std::map<std::string, int> node_layer(const ReasoningDag& dag) {
  std::map<std::string, int> layer;
  std::map<std::string, int> state;  // 0 new, 1 in progress, 2 done
  std::function<int(const std::string&)> layer_of = [&](const std::string& id) -> int {
    auto it = layer.find(id);
    if (it != layer.end()) return it->second;
    if (state[id] == 1) {
      throw Error(ErrorCode::CycleDetected, "node " + id, "cyclic dependency");
    }
    state[id] = 1;
    int l = 0;
    for (const std::string& pred : dag.predecessors(id)) {
      if (dag.nodes.count(pred)) l = std::max(l, layer_of(pred) + 1);
    }
    state[id] = 2;
    layer[id] = l;
    return l;
  };
  for (const auto& [id, info] : dag.nodes) layer_of(id);
  return layer;
}

std::string to_dot(const ReasoningDag& dag) {
  std::ostringstream out;
  out << "digraph reasoning {\n  rankdir=LR;\n";
  for (const auto& [id, info] : dag.nodes) {
    const char* shape = "ellipse";
    if (info.role == NodeRole::Source) shape = "box";
    if (info.role == NodeRole::Conclusion) shape = "doubleoctagon";
    out << "  " << quote(id) << " [shape=" << shape << ", label="
        << quote(info.label.empty() ? id : info.label) << "];\n";
  }
  for (const auto& [from, to] : dag.edges) {
    out << "  " << quote(from) << " -> " << quote(to) << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_dot(const PetriNet& net) {
  std::ostringstream out;
  out << "digraph petri {\n  rankdir=LR;\n";
  for (const std::string& p : net.places) {
    out << "  " << quote("p:" + p) << " [shape=circle, label=" << quote(p);
    if (net.initial_marking.count(p)) out << ", style=filled, fillcolor=gray90";
    out << "];\n";
  }
  for (const auto& [id, t] : net.transitions) {
    out << "  " << quote(id) << " [shape=box, label=" << quote(id) << "];\n";
  }
  for (const auto& [id, t] : net.transitions) {
    for (const std::string& p : t.pre) {
      out << "  " << quote("p:" + p) << " -> " << quote(id) << ";\n";
    }
    for (const std::string& p : t.post) {
      out << "  " << quote(id) << " -> " << quote("p:" + p) << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace petriflow::graph
