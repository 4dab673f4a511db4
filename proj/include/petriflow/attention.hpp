// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "petriflow/errors.hpp"
#include "petriflow/plan_format.hpp"

namespace petriflow::attn {

// Segment ids: 0 is the shared prefix (goal, plan), -1 the conclusion,
// positive ids are outline indices.
inline constexpr int kPrefixSegment = 0;
inline constexpr int kConclusionSegment = -1;

// Layer convention: prefix -1, dependency-free steps 0, otherwise one past
// the deepest dependency, conclusion one past the deepest step.
struct Segment {
  int id = 0;
  int layer = 0;
  std::size_t begin = 0;  // token range [begin, end)
  std::size_t end = 0;
};

// Token-level description of one packed training/inference sequence: which
// segment each token belongs to plus the step dependency edges.
struct SegmentLayout {
  std::vector<Segment> segments;       // ascending, partitioning [0, total)
  std::map<int, std::set<int>> deps;   // step id -> outline indices it needs
  std::size_t total = 0;

  const Segment* segment_of(std::size_t token) const;
  const Segment* segment_by_id(int id) const;
};

// Structural checks: contiguous cover of [0, total), unique ids, layer
// consistency with deps, deps referencing existing step segments.
Report validate_layout(const SegmentLayout& layout);

// Dense boolean attention mask, row = query token, column = key token.
struct Mask {
  std::size_t n = 0;
  std::vector<std::uint8_t> allow;  // n*n, row-major

  bool at(std::size_t i, std::size_t j) const { return allow[i * n + j] != 0; }
  void set(std::size_t i, std::size_t j, bool v) {
    allow[i * n + j] = v ? 1 : 0;
  }
};

// Layer-wise exclusion mask. Cell (i, j) is blocked when j is in the future
// (j > i) or when i and j sit in the same layer but different segments;
// everything else is allowed.
Mask build_mask(const SegmentLayout& layout);

// Topology-aware position indices. The prefix counts 0..p-1; a segment
// starts one past the largest position of its dependencies (the prefix for
// dependency-free steps) and counts up; the conclusion starts one past the
// largest step position. Sibling forks therefore share a start index, and a
// linear chain reproduces 0..n-1.
std::vector<std::uint32_t> build_positions(const SegmentLayout& layout);

// Independent safety check of a mask against the layout: no same-layer
// cross-segment visibility in either direction, no future visibility, and
// every allowed key belongs to the query's own segment, its dependency
// closure, or the prefix. Reports LeakDetected violations.
Report verify_no_leakage(const SegmentLayout& layout, const Mask& mask);

// Per-row maximal allowed [begin, end) runs of a mask.
std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> mask_runs(
    const Mask& mask);

// {"n", "positions", "segments", "runs"} with runs from build_mask.
nlohmann::json export_json(const SegmentLayout& layout);

// Little-endian binary export:
//   magic "PFAT", u32 version=1, u32 n, u32 segment count,
//   n x u32 positions,
//   per segment: i32 id, i32 layer, u32 begin, u32 end,
//   per token: u32 run count, then per run u32 begin, u32 end.
std::vector<std::uint8_t> export_binary(const SegmentLayout& layout);

// Layout of a trace document packed in canonical order: the prefix segment
// covers the preamble, plan block, and "<Execution>" line; each step segment
// covers its step block, reordered by (layer, outline index); the conclusion
// segment covers "</Execution>" through the end. Tokens are bytes.
SegmentLayout layout_from_trace(const plan::TraceDocument& doc);

// Same layout plus the packed text it indexes into.
std::pair<SegmentLayout, std::string> layout_with_text(const plan::TraceDocument& doc);

}  // namespace petriflow::attn
