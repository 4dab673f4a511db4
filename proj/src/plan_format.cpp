// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/plan_format.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace petriflow::plan {

namespace {

constexpr const char* kPlanOpen = "<Plan>";
constexpr const char* kPlanClose = "</Plan>";
constexpr const char* kExecOpen = "<Execution>";
constexpr const char* kExecClose = "</Execution>";
constexpr const char* kConclOpen = "<Conclusion>";
constexpr const char* kConclClose = "</Conclusion>";
constexpr const char* kStepClose = "</Step>";

std::vector<std::string> split_lines(const std::string& text) {
  std::string norm;
  norm.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\r') {
      norm.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      norm.push_back(c);
    }
  }
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= norm.size()) {
    const std::size_t nl = norm.find('\n', start);
    if (nl == std::string::npos) {
      if (start < norm.size()) lines.push_back(norm.substr(start));
      break;
    }
    lines.push_back(norm.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

std::string loc(std::size_t lineno) { return "line " + std::to_string(lineno + 1); }

// Parses a bounded decimal (at most 9 digits) starting at *pos; advances *pos.
bool parse_int(const std::string& s, std::size_t* pos, int* out) {
  std::size_t q = *pos;
  while (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q]))) ++q;
  if (q == *pos || q - *pos > 9) return false;
  *out = std::stoi(s.substr(*pos, q - *pos));
  *pos = q;
  return true;
}

bool parse_outline_line(const std::string& line, std::size_t lineno,
                        OutlineEntry* out, Report* report) {
  const std::string open = "<Outline id=\"";
  if (line.rfind(open, 0) != 0) {
    report->add(ErrorCode::MalformedTag, loc(lineno),
                "expected an <Outline> tag or </Plan>");
    return false;
  }
  std::size_t pos = open.size();
  int id = 0;
  if (!parse_int(line, &pos, &id)) {
    report->add(ErrorCode::MalformedTag, loc(lineno), "outline id is not a number");
    return false;
  }
  const std::string mid = "\" deps=\"";
  if (line.compare(pos, mid.size(), mid) != 0) {
    report->add(ErrorCode::MalformedTag, loc(lineno), "expected a deps attribute");
    return false;
  }
  pos += mid.size();
  const std::size_t deps_end = line.find('"', pos);
  if (deps_end == std::string::npos) {
    report->add(ErrorCode::MalformedTag, loc(lineno), "unterminated deps attribute");
    return false;
  }
  const std::string deps_raw = line.substr(pos, deps_end - pos);
  if (line.compare(deps_end, 2, "\">") != 0) {
    report->add(ErrorCode::MalformedTag, loc(lineno), "malformed outline tag");
    return false;
  }
  const std::string close = "</Outline>";
  const std::size_t body_start = deps_end + 2;
  if (line.size() < body_start + close.size() ||
      line.compare(line.size() - close.size(), close.size(), close) != 0) {
    report->add(ErrorCode::MalformedTag, loc(lineno), "missing </Outline>");
    return false;
  }
  out->index = id;
  out->description = line.substr(body_start, line.size() - close.size() - body_start);
  out->deps.clear();
  if (!deps_raw.empty()) {
    std::size_t start = 0;
    while (start <= deps_raw.size()) {
      std::size_t comma = deps_raw.find(',', start);
      std::string piece = deps_raw.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty() && piece.front() == ' ') piece.erase(0, 1);
      std::size_t p = 0;
      int dep = 0;
      if (!parse_int(piece, &p, &dep) || p != piece.size()) {
        report->add(ErrorCode::MalformedTag, loc(lineno),
                    "dependency list entry is not a number");
        return false;
      }
      out->deps.push_back(dep);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return true;
}

bool parse_step_open(const std::string& line, int* index) {
  const std::string open = "<Step i=\"";
  if (line.rfind(open, 0) != 0) return false;
  std::size_t pos = open.size();
  if (!parse_int(line, &pos, index)) return false;
  return line.compare(pos, std::string::npos, "\">") == 0;
}

struct StructuralResult {
  std::optional<TraceDocument> doc;
  Report report;
};

StructuralResult parse_structural(const std::string& text) {
  StructuralResult result;
  TraceDocument doc;
  const std::vector<std::string> lines = split_lines(text);
  std::size_t i = 0;

  // Preamble: verbatim until the <Plan> line.
  std::vector<std::string> preamble;
  while (i < lines.size() && lines[i] != kPlanOpen) {
    preamble.push_back(lines[i]);
    ++i;
  }
  if (i == lines.size()) {
    result.report.add(ErrorCode::MissingSection, "document", "no <Plan> section");
    return result;
  }
  while (!preamble.empty() && preamble.back().empty()) preamble.pop_back();
  for (std::size_t k = 0; k < preamble.size(); ++k) {
    if (k) doc.preamble += '\n';
    doc.preamble += preamble[k];
  }
  ++i;  // consume <Plan>

  while (true) {
    if (i == lines.size()) {
      result.report.add(ErrorCode::MissingSection, "plan", "missing </Plan>");
      return result;
    }
    if (lines[i] == kPlanClose) {
      ++i;
      break;
    }
    if (is_blank(lines[i])) {
      ++i;
      continue;
    }
    OutlineEntry entry;
    if (!parse_outline_line(lines[i], i, &entry, &result.report)) return result;
    doc.plan.outlines.push_back(std::move(entry));
    ++i;
  }

  while (i < lines.size() && is_blank(lines[i])) ++i;
  if (i == lines.size() || lines[i] != kExecOpen) {
    if (i < lines.size()) {
      result.report.add(ErrorCode::MalformedTag, loc(i),
                        "expected <Execution> after the plan");
    } else {
      result.report.add(ErrorCode::MissingSection, "document",
                        "no <Execution> section");
    }
    return result;
  }
  ++i;

  while (true) {
    while (i < lines.size() && is_blank(lines[i])) ++i;
    if (i == lines.size()) {
      result.report.add(ErrorCode::MissingSection, "execution",
                        "missing </Execution>");
      return result;
    }
    if (lines[i] == kExecClose) {
      ++i;
      break;
    }
    int index = 0;
    if (!parse_step_open(lines[i], &index)) {
      // A later section tag here means the execution was never closed.
      if (lines[i] == kConclOpen) {
        result.report.add(ErrorCode::MissingSection, "execution",
                          "missing </Execution>");
      } else {
        result.report.add(ErrorCode::MalformedTag, loc(i),
                          "expected a <Step> tag or </Execution>");
      }
      return result;
    }
    ++i;
    std::vector<std::string> body;
    while (i < lines.size() && lines[i] != kStepClose) {
      body.push_back(lines[i]);
      ++i;
    }
    if (i == lines.size()) {
      result.report.add(ErrorCode::MissingSection,
                        "step " + std::to_string(index), "missing </Step>");
      return result;
    }
    ++i;  // consume </Step>
    StepEntry step;
    step.index = index;
    for (std::size_t k = 0; k < body.size(); ++k) {
      if (k) step.text += '\n';
      step.text += body[k];
    }
    doc.steps.push_back(std::move(step));
  }

  while (i < lines.size() && is_blank(lines[i])) ++i;
  if (i == lines.size() || lines[i] != kConclOpen) {
    if (i < lines.size()) {
      result.report.add(ErrorCode::MalformedTag, loc(i),
                        "expected <Conclusion> after the execution");
    } else {
      result.report.add(ErrorCode::MissingSection, "document",
                        "no <Conclusion> section");
    }
    return result;
  }
  ++i;
  std::vector<std::string> body;
  while (i < lines.size() && lines[i] != kConclClose) {
    body.push_back(lines[i]);
    ++i;
  }
  if (i == lines.size()) {
    result.report.add(ErrorCode::MissingSection, "conclusion",
                      "missing </Conclusion>");
    return result;
  }
  ++i;
  for (std::size_t k = 0; k < body.size(); ++k) {
    if (k) doc.conclusion += '\n';
    doc.conclusion += body[k];
  }

  for (; i < lines.size(); ++i) {
    if (!is_blank(lines[i])) {
      result.report.add(ErrorCode::MalformedTag, loc(i),
                        "content after </Conclusion>");
      return result;
    }
  }
  result.doc = std::move(doc);
  return result;
}

}  // namespace

Report verify_plan(const PlanDocument& plan) {
  Report report;
  const int n = static_cast<int>(plan.outlines.size());
  for (int p = 0; p < n; ++p) {
    const OutlineEntry& o = plan.outlines[static_cast<std::size_t>(p)];
    if (o.index != p + 1) {
      report.add(ErrorCode::BadIndex, "outline position " + std::to_string(p + 1),
                 "outline ids must be 1..n in order; found id " +
                     std::to_string(o.index));
      continue;
    }
    std::set<int> seen;
    for (int dep : o.deps) {
      if (dep < 1 || dep > n) {
        report.add(ErrorCode::BadIndex, "outline " + std::to_string(o.index),
                   "dependency " + std::to_string(dep) + " is out of range");
        continue;
      }
      if (dep >= o.index) {
        report.add(ErrorCode::ForwardDep, "outline " + std::to_string(o.index),
                   "dependency " + std::to_string(dep) +
                       " does not precede the outline");
        continue;
      }
      if (!seen.insert(dep).second) {
        report.add(ErrorCode::BadIndex, "outline " + std::to_string(o.index),
                   "duplicate dependency " + std::to_string(dep));
      }
    }
  }
  return report;
}

Phase1 parse_phase1(const std::string& text) {
  // Reuse the trace machinery by parsing just the plan region.
  const std::vector<std::string> lines = split_lines(text);
  std::size_t i = 0;
  Report report;
  Phase1 out;

  std::vector<std::string> preamble;
  while (i < lines.size() && lines[i] != kPlanOpen) {
    preamble.push_back(lines[i]);
    ++i;
  }
  if (i == lines.size()) {
    throw Error(ErrorCode::MissingSection, "document", "no <Plan> section");
  }
  while (!preamble.empty() && preamble.back().empty()) preamble.pop_back();
  for (std::size_t k = 0; k < preamble.size(); ++k) {
    if (k) out.preamble += '\n';
    out.preamble += preamble[k];
  }
  ++i;
  while (true) {
    if (i == lines.size()) {
      throw Error(ErrorCode::MissingSection, "plan", "missing </Plan>");
    }
    if (lines[i] == kPlanClose) {
      ++i;
      break;
    }
    if (is_blank(lines[i])) {
      ++i;
      continue;
    }
    OutlineEntry entry;
    if (!parse_outline_line(lines[i], i, &entry, &report)) report.throw_if_failed();
    out.plan.outlines.push_back(std::move(entry));
    ++i;
  }
  for (; i < lines.size(); ++i) {
    if (!is_blank(lines[i])) {
      throw Error(ErrorCode::MalformedTag, loc(i), "content after </Plan>");
    }
  }
  verify_plan(out.plan).throw_if_failed();
  return out;
}

PlanDocument parse_plan(const std::string& text) { return parse_phase1(text).plan; }

std::string serialize_plan(const PlanDocument& plan) {
  std::ostringstream out;
  out << kPlanOpen << '\n';
  for (const OutlineEntry& o : plan.outlines) {
    std::vector<int> deps = o.deps;
    std::sort(deps.begin(), deps.end());
    deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
    out << "<Outline id=\"" << o.index << "\" deps=\"";
    for (std::size_t k = 0; k < deps.size(); ++k) {
      if (k) out << ',';
      out << deps[k];
    }
    out << "\">" << o.description << "</Outline>\n";
  }
  out << kPlanClose << '\n';
  return out.str();
}

std::string serialize_trace(const TraceDocument& doc) {
  std::ostringstream out;
  if (!doc.preamble.empty()) {
    out << doc.preamble;
    if (doc.preamble.back() != '\n') out << '\n';
  }
  out << serialize_plan(doc.plan);
  out << kExecOpen << '\n';
  for (const StepEntry& step : doc.steps) {
    out << "<Step i=\"" << step.index << "\">\n";
    if (!step.text.empty()) {
      out << step.text;
      if (step.text.back() != '\n') out << '\n';
    }
    out << kStepClose << '\n';
  }
  out << kExecClose << '\n';
  out << kConclOpen << '\n';
  if (!doc.conclusion.empty()) {
    out << doc.conclusion;
    if (doc.conclusion.back() != '\n') out << '\n';
  }
  out << kConclClose << '\n';
  return out.str();
}

std::string node_id_for_outline(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "n%04d", index);
  return buf;
}

std::optional<int> outline_for_node_id(const std::string& node_id) {
  if (node_id.size() < 5 || node_id.size() > 10 || node_id[0] != 'n') {
    return std::nullopt;
  }
  int value = 0;
  for (std::size_t k = 1; k < node_id.size(); ++k) {
    if (!std::isdigit(static_cast<unsigned char>(node_id[k]))) return std::nullopt;
    value = value * 10 + (node_id[k] - '0');
  }
  return value;
}

graph::ReasoningDag plan_to_dag(const PlanDocument& plan, ConclusionPolicy policy) {
  verify_plan(plan).throw_if_failed();
  if (plan.outlines.empty()) {
    throw Error(ErrorCode::EmptyInput, "plan", "plan has no outlines");
  }

  graph::ReasoningDag dag;
  dag.add_node(kSourceNodeId, "goal", graph::NodeRole::Source);
  std::set<int> has_successor;
  for (const OutlineEntry& o : plan.outlines) {
    for (int dep : o.deps) has_successor.insert(dep);
  }
  std::vector<std::string> sinks;
  for (const OutlineEntry& o : plan.outlines) {
    const std::string id = node_id_for_outline(o.index);
    const bool sink = !has_successor.count(o.index);
    dag.add_node(id, o.description,
                 sink ? graph::NodeRole::Conclusion : graph::NodeRole::Hypothesis);
    if (sink) sinks.push_back(id);
    if (o.deps.empty()) {
      dag.add_edge(kSourceNodeId, id);
    } else {
      for (int dep : o.deps) dag.add_edge(node_id_for_outline(dep), id);
    }
  }
  if (sinks.size() > 1) {
    switch (policy) {
      case ConclusionPolicy::RequireSingle:
        throw Error(ErrorCode::PolicyViolation, "plan",
                    "plan has " + std::to_string(sinks.size()) +
                        " terminal steps; a single conclusion is required");
      case ConclusionPolicy::AllowMultiple:
        break;
      case ConclusionPolicy::MergeSinks:
        dag.add_node(kConclusionNodeId, "conclusion", graph::NodeRole::Conclusion);
        for (const std::string& sink : sinks) {
          dag.nodes[sink].role = graph::NodeRole::Hypothesis;
          dag.add_edge(sink, kConclusionNodeId);
        }
        break;
    }
  }
  return dag;
}

Report verify_syntax(const TraceDocument& doc, ConclusionPolicy policy) {
  Report report = verify_plan(doc.plan);

  std::set<int> outline_ids;
  for (const OutlineEntry& o : doc.plan.outlines) outline_ids.insert(o.index);

  std::map<int, int> step_count;
  for (const StepEntry& s : doc.steps) ++step_count[s.index];
  for (int id : outline_ids) {
    if (!step_count.count(id)) {
      report.add(ErrorCode::StepIndexMismatch, "outline " + std::to_string(id),
                 "no step executes this outline");
    }
  }
  for (const auto& [idx, count] : step_count) {
    if (!outline_ids.count(idx)) {
      report.add(ErrorCode::StepIndexMismatch, "step " + std::to_string(idx),
                 "step matches no outline");
    }
    if (count > 1) {
      report.add(ErrorCode::StepIndexMismatch, "step " + std::to_string(idx),
                 "outline executed more than once");
    }
  }

  std::map<int, const OutlineEntry*> by_index;
  for (const OutlineEntry& o : doc.plan.outlines) by_index[o.index] = &o;
  std::set<int> done;
  for (const StepEntry& s : doc.steps) {
    auto it = by_index.find(s.index);
    if (it != by_index.end()) {
      for (int dep : it->second->deps) {
        if (!done.count(dep)) {
          report.add(ErrorCode::OrderViolation, "step " + std::to_string(s.index),
                     "executed before dependency " + std::to_string(dep));
        }
      }
    }
    done.insert(s.index);
  }

  if (report.ok()) {
    try {
      graph::ReasoningDag dag = plan_to_dag(doc.plan, policy);
      report.merge(graph::validate_dag(dag));
    } catch (const Error& e) {
      report.add(e.code(), e.location(), e.what());
    }
  }
  return report;
}

std::pair<std::optional<TraceDocument>, Report> check_trace(
    const std::string& text, ConclusionPolicy policy) {
  StructuralResult structural = parse_structural(text);
  if (!structural.doc) return {std::nullopt, structural.report};
  Report report = verify_syntax(*structural.doc, policy);
  return {std::move(structural.doc), report};
}

TraceDocument parse_trace(const std::string& text, ConclusionPolicy policy) {
  auto [doc, report] = check_trace(text, policy);
  report.throw_if_failed();
  return *doc;
}

}  // namespace petriflow::plan
