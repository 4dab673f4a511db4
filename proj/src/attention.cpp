// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/attention.hpp"

#include <algorithm>
#include <functional>

namespace petriflow::attn {

const Segment* SegmentLayout::segment_of(std::size_t token) const {
  for (const Segment& seg : segments) {
    if (token >= seg.begin && token < seg.end) return &seg;
  }
  return nullptr;
}

const Segment* SegmentLayout::segment_by_id(int id) const {
  for (const Segment& seg : segments) {
    if (seg.id == id) return &seg;
  }
  return nullptr;
}

namespace {

// Expected layers from the dependency edges alone; throws LayoutError on
// unknown or cyclic deps.
std::map<int, int> expected_layers(const SegmentLayout& layout) {
  std::set<int> step_ids;
  for (const Segment& seg : layout.segments) {
    if (seg.id > 0) step_ids.insert(seg.id);
  }
  std::map<int, int> layer;
  std::map<int, int> state;
  std::function<int(int)> layer_of = [&](int id) -> int {
    auto it = layer.find(id);
    if (it != layer.end()) return it->second;
    if (state[id] == 1) {
      throw Error(ErrorCode::LayoutError, "step " + std::to_string(id),
                  "cyclic dependencies");
    }
    state[id] = 1;
    int l = 0;
    auto dit = layout.deps.find(id);
    if (dit != layout.deps.end()) {
      for (int dep : dit->second) {
        if (!step_ids.count(dep)) {
          throw Error(ErrorCode::LayoutError, "step " + std::to_string(id),
                      "dependency " + std::to_string(dep) + " has no segment");
        }
        l = std::max(l, layer_of(dep) + 1);
      }
    }
    state[id] = 2;
    layer[id] = l;
    return l;
  };
  for (int id : step_ids) layer_of(id);
  return layer;
}

// Dependency closure per step id; the conclusion sees every step.
std::map<int, std::set<int>> ancestor_closure(const SegmentLayout& layout) {
  std::map<int, std::set<int>> closure;
  std::function<const std::set<int>&(int)> anc = [&](int id) -> const std::set<int>& {
    auto it = closure.find(id);
    if (it != closure.end()) return it->second;
    std::set<int> result;
    auto dit = layout.deps.find(id);
    if (dit != layout.deps.end()) {
      for (int dep : dit->second) {
        result.insert(dep);
        const std::set<int>& up = anc(dep);
        result.insert(up.begin(), up.end());
      }
    }
    return closure.emplace(id, std::move(result)).first->second;
  };
  for (const Segment& seg : layout.segments) {
    if (seg.id > 0) anc(seg.id);
  }
  return closure;
}

void put_u32(std::vector<std::uint8_t>* out, std::uint32_t v) {
  out->push_back(static_cast<std::uint8_t>(v & 0xff));
  out->push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out->push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out->push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_i32(std::vector<std::uint8_t>* out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}

}  // namespace

Report validate_layout(const SegmentLayout& layout) {
  Report report;
  std::size_t cursor = 0;
  std::set<int> seen;
  for (const Segment& seg : layout.segments) {
    const std::string where = "segment " + std::to_string(seg.id);
    if (seg.begin != cursor) {
      report.add(ErrorCode::LayoutError, where,
                 "segments must tile the sequence without gaps");
    }
    if (seg.end < seg.begin) {
      report.add(ErrorCode::LayoutError, where, "segment ends before it begins");
    }
    cursor = seg.end;
    if (!seen.insert(seg.id).second) {
      report.add(ErrorCode::LayoutError, where, "duplicate segment id");
    }
  }
  if (cursor != layout.total) {
    report.add(ErrorCode::LayoutError, "layout",
               "segments do not cover the full sequence");
  }
  for (const auto& [id, deps] : layout.deps) {
    if (id <= 0) {
      report.add(ErrorCode::LayoutError, "step " + std::to_string(id),
                 "only positive step ids can declare dependencies");
    }
  }
  if (!report.ok()) return report;

  std::map<int, int> expected;
  try {
    expected = expected_layers(layout);
  } catch (const Error& e) {
    report.add(e.code(), e.location(), e.what());
    return report;
  }
  int max_step_layer = -1;
  for (const auto& [id, l] : expected) max_step_layer = std::max(max_step_layer, l);
  for (const Segment& seg : layout.segments) {
    const std::string where = "segment " + std::to_string(seg.id);
    if (seg.id == kPrefixSegment) {
      if (seg.layer != -1) {
        report.add(ErrorCode::LayoutError, where, "prefix layer must be -1");
      }
    } else if (seg.id == kConclusionSegment) {
      const int want = max_step_layer + 1;
      if (seg.layer != want) {
        report.add(ErrorCode::LayoutError, where,
                   "conclusion layer must be " + std::to_string(want));
      }
    } else if (seg.id > 0) {
      const int want = expected.at(seg.id);
      if (seg.layer != want) {
        report.add(ErrorCode::LayoutError, where,
                   "layer must be " + std::to_string(want) + " per dependencies");
      }
    } else {
      report.add(ErrorCode::LayoutError, where, "unknown segment id");
    }
  }
  return report;
}

Mask build_mask(const SegmentLayout& layout) {
  Mask mask;
  mask.n = layout.total;
  mask.allow.assign(mask.n * mask.n, 0);

  // token -> segment index
  std::vector<std::size_t> seg_of(layout.total, 0);
  for (std::size_t s = 0; s < layout.segments.size(); ++s) {
    for (std::size_t t = layout.segments[s].begin; t < layout.segments[s].end; ++t) {
      seg_of[t] = s;
    }
  }
  for (std::size_t i = 0; i < mask.n; ++i) {
    const Segment& qi = layout.segments[seg_of[i]];
    for (std::size_t j = 0; j <= i; ++j) {
      const Segment& kj = layout.segments[seg_of[j]];
      if (qi.layer == kj.layer && qi.id != kj.id) continue;
      mask.set(i, j, true);
    }
  }
  return mask;
}

std::vector<std::uint32_t> build_positions(const SegmentLayout& layout) {
  std::vector<std::uint32_t> positions(layout.total, 0);

  // last emitted position per segment id; empty segments contribute
  // start - 1 so a chain through them stays contiguous.
  std::map<int, std::int64_t> last_pos;
  std::vector<const Segment*> order;
  for (const Segment& seg : layout.segments) order.push_back(&seg);
  std::stable_sort(order.begin(), order.end(), [](const Segment* a, const Segment* b) {
    return a->layer < b->layer;
  });

  std::int64_t prefix_last = -1;
  std::int64_t max_step_last = -1;
  bool any_step = false;
  for (const Segment* seg : order) {
    std::int64_t start = 0;
    if (seg->id == kPrefixSegment) {
      start = 0;
    } else if (seg->id == kConclusionSegment) {
      start = (any_step ? max_step_last : prefix_last) + 1;
    } else {
      auto dit = layout.deps.find(seg->id);
      if (dit == layout.deps.end() || dit->second.empty()) {
        start = prefix_last + 1;
      } else {
        std::int64_t m = -1;
        for (int dep : dit->second) m = std::max(m, last_pos.at(dep));
        start = m + 1;
      }
    }
    std::int64_t p = start;
    for (std::size_t t = seg->begin; t < seg->end; ++t) {
      positions[t] = static_cast<std::uint32_t>(p++);
    }
    const std::int64_t last = p - 1;  // start - 1 when empty
    last_pos[seg->id] = last;
    if (seg->id == kPrefixSegment) prefix_last = last;
    if (seg->id > 0) {
      any_step = true;
      max_step_last = std::max(max_step_last, last);
    }
  }
  return positions;
}

Report verify_no_leakage(const SegmentLayout& layout, const Mask& mask) {
  Report report;
  if (mask.n != layout.total) {
    report.add(ErrorCode::LeakDetected, "mask", "mask size does not match layout");
    return report;
  }
  std::vector<const Segment*> seg_of(layout.total, nullptr);
  for (const Segment& seg : layout.segments) {
    for (std::size_t t = seg.begin; t < seg.end; ++t) seg_of[t] = &seg;
  }
  const std::map<int, std::set<int>> closure = ancestor_closure(layout);

  auto cell = [](std::size_t i, std::size_t j) {
    return "cell (" + std::to_string(i) + "," + std::to_string(j) + ")";
  };

  for (std::size_t i = 0; i < mask.n; ++i) {
    const Segment* qi = seg_of[i];
    for (std::size_t j = 0; j < mask.n; ++j) {
      const Segment* kj = seg_of[j];
      const bool allowed = mask.at(i, j);
      if (!allowed) continue;
      if (j > i) {
        report.add(ErrorCode::LeakDetected, cell(i, j), "future token visible");
        continue;
      }
      if (qi->layer == kj->layer && qi->id != kj->id) {
        report.add(ErrorCode::LeakDetected, cell(i, j),
                   "same-layer sibling visible");
        continue;
      }
      if (qi->id == kj->id || kj->id == kPrefixSegment) continue;
      if (qi->id == kConclusionSegment) continue;  // conclusion sees every step
      if (qi->id == kPrefixSegment) {
        report.add(ErrorCode::LeakDetected, cell(i, j),
                   "prefix attends outside itself");
        continue;
      }
      const std::set<int>& anc = closure.at(qi->id);
      if (kj->id > 0 && anc.count(kj->id)) continue;
      report.add(ErrorCode::LeakDetected, cell(i, j),
                 "key segment is not an ancestor of the query segment");
    }
  }
  return report;
}

std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> mask_runs(
    const Mask& mask) {
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> runs(mask.n);
  for (std::size_t i = 0; i < mask.n; ++i) {
    std::size_t j = 0;
    while (j < mask.n) {
      if (!mask.at(i, j)) {
        ++j;
        continue;
      }
      std::size_t b = j;
      while (j < mask.n && mask.at(i, j)) ++j;
      runs[i].push_back({static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(j)});
    }
  }
  return runs;
}

nlohmann::json export_json(const SegmentLayout& layout) {
  validate_layout(layout).throw_if_failed();
  const Mask mask = build_mask(layout);
  const std::vector<std::uint32_t> positions = build_positions(layout);
  const auto runs = mask_runs(mask);

  nlohmann::json out;
  out["n"] = layout.total;
  out["positions"] = positions;
  out["segments"] = nlohmann::json::array();
  for (const Segment& seg : layout.segments) {
    out["segments"].push_back({{"id", seg.id},
                               {"layer", seg.layer},
                               {"begin", seg.begin},
                               {"end", seg.end}});
  }
  out["runs"] = nlohmann::json::array();
  for (const auto& row : runs) {
    nlohmann::json jrow = nlohmann::json::array();
    for (const auto& [b, e] : row) jrow.push_back({b, e});
    out["runs"].push_back(jrow);
  }
  return out;
}

std::vector<std::uint8_t> export_binary(const SegmentLayout& layout) {
  validate_layout(layout).throw_if_failed();
  const Mask mask = build_mask(layout);
  const std::vector<std::uint32_t> positions = build_positions(layout);
  const auto runs = mask_runs(mask);

  std::vector<std::uint8_t> out;
  out.push_back('P');
  out.push_back('F');
  out.push_back('A');
  out.push_back('T');
  put_u32(&out, 1);
  put_u32(&out, static_cast<std::uint32_t>(layout.total));
  put_u32(&out, static_cast<std::uint32_t>(layout.segments.size()));
  for (std::uint32_t p : positions) put_u32(&out, p);
  for (const Segment& seg : layout.segments) {
    put_i32(&out, seg.id);
    put_i32(&out, seg.layer);
    put_u32(&out, static_cast<std::uint32_t>(seg.begin));
    put_u32(&out, static_cast<std::uint32_t>(seg.end));
  }
  for (const auto& row : runs) {
    put_u32(&out, static_cast<std::uint32_t>(row.size()));
    for (const auto& [b, e] : row) {
      put_u32(&out, b);
      put_u32(&out, e);
    }
  }
  return out;
}

std::pair<SegmentLayout, std::string> layout_with_text(const plan::TraceDocument& doc) {
  plan::verify_plan(doc.plan).throw_if_failed();

  std::map<int, const plan::OutlineEntry*> outline_by_index;
  std::map<int, int> step_layer;
  for (const plan::OutlineEntry& o : doc.plan.outlines) {
    outline_by_index[o.index] = &o;
    int l = 0;
    for (int dep : o.deps) l = std::max(l, step_layer.at(dep) + 1);
    step_layer[o.index] = l;
  }

  std::vector<plan::StepEntry> steps = doc.steps;
  std::stable_sort(steps.begin(), steps.end(),
                   [&](const plan::StepEntry& a, const plan::StepEntry& b) {
                     const int la = step_layer.count(a.index) ? step_layer.at(a.index) : 0;
                     const int lb = step_layer.count(b.index) ? step_layer.at(b.index) : 0;
                     return la != lb ? la < lb : a.index < b.index;
                   });

  SegmentLayout layout;
  std::string text;

  std::string prefix;
  if (!doc.preamble.empty()) {
    prefix += doc.preamble;
    if (doc.preamble.back() != '\n') prefix += '\n';
  }
  prefix += plan::serialize_plan(doc.plan);
  prefix += "<Execution>\n";
  layout.segments.push_back(
      Segment{kPrefixSegment, -1, 0, prefix.size()});
  text += prefix;

  int max_layer = -1;
  for (const plan::StepEntry& step : steps) {
    std::string block = "<Step i=\"" + std::to_string(step.index) + "\">\n";
    if (!step.text.empty()) {
      block += step.text;
      if (step.text.back() != '\n') block += '\n';
    }
    block += "</Step>\n";
    const int layer = step_layer.count(step.index) ? step_layer.at(step.index) : 0;
    max_layer = std::max(max_layer, layer);
    layout.segments.push_back(
        Segment{step.index, layer, text.size(), text.size() + block.size()});
    text += block;
    auto it = outline_by_index.find(step.index);
    if (it != outline_by_index.end()) {
      layout.deps[step.index] =
          std::set<int>(it->second->deps.begin(), it->second->deps.end());
    }
  }

  std::string tail = "</Execution>\n<Conclusion>\n";
  if (!doc.conclusion.empty()) {
    tail += doc.conclusion;
    if (doc.conclusion.back() != '\n') tail += '\n';
  }
  tail += "</Conclusion>\n";
  layout.segments.push_back(
      Segment{kConclusionSegment, max_layer + 1, text.size(), text.size() + tail.size()});
  text += tail;

  layout.total = text.size();
  return {std::move(layout), std::move(text)};
}

SegmentLayout layout_from_trace(const plan::TraceDocument& doc) {
  return layout_with_text(doc).first;
}

}  // namespace petriflow::attn
