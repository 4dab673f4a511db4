// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "petriflow/attention.hpp"

using namespace petriflow;
using attn::Mask;
using attn::Segment;
using attn::SegmentLayout;

namespace {

// prefix(4) | step1(3) | step2(2) | step3(3, deps 1,2) | conclusion(2)
SegmentLayout fork_join_layout() {
  SegmentLayout layout;
  layout.segments = {
      {attn::kPrefixSegment, -1, 0, 4},
      {1, 0, 4, 7},
      {2, 0, 7, 9},
      {3, 1, 9, 12},
      {attn::kConclusionSegment, 2, 12, 14},
  };
  layout.deps = {{1, {}}, {2, {}}, {3, {1, 2}}};
  layout.total = 14;
  return layout;
}

std::uint32_t rd32(const std::vector<std::uint8_t>& buf, std::size_t& off) {
  std::uint32_t v = 0;
  std::memcpy(&v, buf.data() + off, 4);
  off += 4;
  return v;
}

std::int32_t rd32s(const std::vector<std::uint8_t>& buf, std::size_t& off) {
  std::int32_t v = 0;
  std::memcpy(&v, buf.data() + off, 4);
  off += 4;
  return v;
}

}  // namespace

TEST_CASE("mask follows the three-case rule on a fork/join layout") {
  const SegmentLayout layout = fork_join_layout();
  REQUIRE(attn::validate_layout(layout).ok());
  const Mask mask = attn::build_mask(layout);
  REQUIRE(mask.n == 14);

  CHECK(mask.at(5, 4));         // within step 1
  CHECK(mask.at(5, 2));         // step 1 sees the prefix
  CHECK_FALSE(mask.at(5, 7));   // future
  CHECK_FALSE(mask.at(7, 5));   // step 2 vs sibling step 1: same layer
  CHECK(mask.at(10, 5));        // join step sees dependency step 1
  CHECK(mask.at(10, 8));        // and dependency step 2
  CHECK(mask.at(13, 10));       // conclusion sees the join step
  CHECK(mask.at(13, 0));        // and the prefix
  CHECK_FALSE(mask.at(2, 5));   // prefix never looks forward
  CHECK(mask.at(2, 1));         // prefix is causal within itself

  for (std::size_t i = 0; i < mask.n; ++i) {
    for (std::size_t j = 0; j < mask.n; ++j) {
      CHECK(mask.at(i, j) == oracle::naive_mask_cell(layout, i, j));
    }
  }
  CHECK(attn::verify_no_leakage(layout, mask).ok());
}

TEST_CASE("randomized layouts agree with the cell oracle and leak audit") {
  oracle::Rng rng(31);
  for (int trial = 0; trial < 150; ++trial) {
    const SegmentLayout layout = oracle::random_layer_complete_layout(rng, 48);
    REQUIRE(attn::validate_layout(layout).ok());
    const Mask mask = attn::build_mask(layout);
    bool all = true;
    for (std::size_t i = 0; i < mask.n && all; ++i) {
      for (std::size_t j = 0; j < mask.n; ++j) {
        if (mask.at(i, j) != oracle::naive_mask_cell(layout, i, j)) {
          all = false;
          break;
        }
      }
    }
    CHECK(all);
    CHECK(attn::verify_no_leakage(layout, mask).ok());
  }
}

TEST_CASE("the audit catches any blocked cell flipped open") {
  oracle::Rng rng(32);
  for (int trial = 0; trial < 60; ++trial) {
    const SegmentLayout layout = oracle::random_layer_complete_layout(rng, 32);
    Mask mask = attn::build_mask(layout);
    std::vector<std::pair<std::size_t, std::size_t>> blocked;
    for (std::size_t i = 0; i < mask.n; ++i) {
      for (std::size_t j = 0; j < mask.n; ++j) {
        if (!mask.at(i, j)) blocked.push_back({i, j});
      }
    }
    if (blocked.empty()) continue;
    const auto [i, j] = blocked[static_cast<std::size_t>(
        oracle::rand_int(rng, 0, static_cast<int>(blocked.size()) - 1))];
    mask.set(i, j, true);
    CHECK_FALSE(attn::verify_no_leakage(layout, mask).ok());
  }
}

TEST_CASE("the audit is stricter than the mask on sparse dependency graphs") {
  // step 3 sits at layer 1 via step 1; step 2 stays at layer 0 unrelated.
  // The layer mask admits committed earlier layers wholesale, so step 3 may
  // read step 2; the ancestry audit refuses exactly that cell.
  SegmentLayout layout;
  layout.segments = {
      {attn::kPrefixSegment, -1, 0, 2},
      {1, 0, 2, 3},
      {2, 0, 3, 4},
      {3, 1, 4, 5},
      {attn::kConclusionSegment, 2, 5, 6},
  };
  layout.deps = {{1, {}}, {2, {}}, {3, {1}}};
  layout.total = 6;
  REQUIRE(attn::validate_layout(layout).ok());
  const Mask mask = attn::build_mask(layout);
  CHECK(mask.at(4, 3));  // layer rule: step 2 is one layer down
  const Report audit = attn::verify_no_leakage(layout, mask);
  CHECK_FALSE(audit.ok());
  bool flagged = false;
  for (const auto& v : audit.violations) {
    if (v.location == "cell (4,3)") flagged = true;
  }
  CHECK(flagged);
}

TEST_CASE("position indices restart at forks and resume after joins") {
  const SegmentLayout layout = fork_join_layout();
  const std::vector<std::uint32_t> pos = attn::build_positions(layout);
  CHECK(pos == std::vector<std::uint32_t>{0, 1, 2, 3,      // prefix
                                          4, 5, 6,         // step 1
                                          4, 5,            // step 2, same start
                                          7, 8, 9,         // join: 1 + max(6, 5)
                                          10, 11});        // conclusion
}

TEST_CASE("a linear chain reproduces serial positions") {
  SegmentLayout layout;
  layout.segments = {
      {attn::kPrefixSegment, -1, 0, 3},
      {1, 0, 3, 5},
      {2, 1, 5, 8},
      {attn::kConclusionSegment, 2, 8, 10},
  };
  layout.deps = {{1, {}}, {2, {1}}};
  layout.total = 10;
  const auto pos = attn::build_positions(layout);
  for (std::size_t t = 0; t < layout.total; ++t) {
    CHECK(pos[t] == static_cast<std::uint32_t>(t));
  }
  const Mask mask = attn::build_mask(layout);
  // one linear branch: plain causal attention
  for (std::size_t i = 0; i < mask.n; ++i) {
    for (std::size_t j = 0; j < mask.n; ++j) {
      CHECK(mask.at(i, j) == (j <= i));
    }
  }
}

TEST_CASE("layout validation rejects broken structure") {
  SegmentLayout layout = fork_join_layout();
  layout.segments[1].begin = 5;  // gap between prefix and step 1
  CHECK_FALSE(attn::validate_layout(layout).ok());

  layout = fork_join_layout();
  layout.segments[2].id = 1;  // duplicate id
  CHECK_FALSE(attn::validate_layout(layout).ok());

  layout = fork_join_layout();
  layout.deps[3] = {1, 9};  // dep on a segment that does not exist
  CHECK_FALSE(attn::validate_layout(layout).ok());

  layout = fork_join_layout();
  layout.segments[3].layer = 0;  // join cannot share its dependencies' layer
  CHECK_FALSE(attn::validate_layout(layout).ok());
}

TEST_CASE("mask runs reconstruct the dense mask") {
  oracle::Rng rng(33);
  const SegmentLayout layout = oracle::random_layer_complete_layout(rng, 40);
  const Mask mask = attn::build_mask(layout);
  const auto runs = attn::mask_runs(mask);
  REQUIRE(runs.size() == mask.n);
  for (std::size_t i = 0; i < mask.n; ++i) {
    std::vector<std::uint8_t> row(mask.n, 0);
    std::uint32_t prev_end = 0;
    for (const auto& [b, e] : runs[i]) {
      CHECK(b < e);
      CHECK(b >= prev_end);  // maximal runs never touch or overlap
      if (b == prev_end && prev_end) FAIL("adjacent runs not merged");
      prev_end = e;
      for (std::uint32_t j = b; j < e; ++j) row[j] = 1;
    }
    for (std::size_t j = 0; j < mask.n; ++j) {
      CHECK((row[j] != 0) == mask.at(i, j));
    }
  }
}

TEST_CASE("binary export matches the json export field for field") {
  const SegmentLayout layout = fork_join_layout();
  const nlohmann::json js = attn::export_json(layout);
  CHECK(js.at("n") == 14);
  CHECK(js.at("positions").size() == 14);
  CHECK(js.at("segments").size() == 5);
  CHECK(js.at("runs").size() == 14);

  const std::vector<std::uint8_t> bin = attn::export_binary(layout);
  std::size_t off = 0;
  REQUIRE(bin.size() >= 16);
  CHECK(std::memcmp(bin.data(), "PFAT", 4) == 0);
  off = 4;
  CHECK(rd32(bin, off) == 1);   // version
  const std::uint32_t n = rd32(bin, off);
  CHECK(n == 14);
  const std::uint32_t segs = rd32(bin, off);
  CHECK(segs == 5);

  const auto pos = attn::build_positions(layout);
  for (std::uint32_t t = 0; t < n; ++t) CHECK(rd32(bin, off) == pos[t]);

  for (std::uint32_t s = 0; s < segs; ++s) {
    CHECK(rd32s(bin, off) == layout.segments[s].id);
    CHECK(rd32s(bin, off) == layout.segments[s].layer);
    CHECK(rd32(bin, off) == layout.segments[s].begin);
    CHECK(rd32(bin, off) == layout.segments[s].end);
  }

  const auto runs = attn::mask_runs(attn::build_mask(layout));
  for (std::uint32_t t = 0; t < n; ++t) {
    const std::uint32_t count = rd32(bin, off);
    REQUIRE(count == runs[t].size());
    for (std::uint32_t r = 0; r < count; ++r) {
      CHECK(rd32(bin, off) == runs[t][r].first);
      CHECK(rd32(bin, off) == runs[t][r].second);
    }
  }
  CHECK(off == bin.size());
}

TEST_CASE("trace layouts pack by layer then outline index") {
  // document order 2 then 1 is legal (both dependency free) but the packed
  // layout still puts step 1 first
  const std::string text =
      "<Plan>\n"
      "<Outline id=\"1\" deps=\"\">a</Outline>\n"
      "<Outline id=\"2\" deps=\"\">b</Outline>\n"
      "<Outline id=\"3\" deps=\"1,2\">c</Outline>\n"
      "</Plan>\n"
      "<Execution>\n"
      "<Step i=\"2\">\nbeta\n</Step>\n"
      "<Step i=\"1\">\nalpha\n</Step>\n"
      "<Step i=\"3\">\ngamma\n</Step>\n"
      "</Execution>\n"
      "<Conclusion>\ndone\n</Conclusion>\n";
  const plan::TraceDocument doc =
      plan::parse_trace(text, plan::ConclusionPolicy::RequireSingle);
  const auto [layout, packed] = attn::layout_with_text(doc);
  REQUIRE(attn::validate_layout(layout).ok());
  CHECK(layout.total == packed.size());

  REQUIRE(layout.segments.size() == 5);
  CHECK(layout.segments[0].id == attn::kPrefixSegment);
  CHECK(layout.segments[0].layer == -1);
  CHECK(layout.segments[1].id == 1);
  CHECK(layout.segments[2].id == 2);
  CHECK(layout.segments[3].id == 3);
  CHECK(layout.segments[3].layer == 1);
  CHECK(layout.segments[4].id == attn::kConclusionSegment);
  CHECK(layout.segments[4].layer == 2);
  CHECK(layout.deps.at(3) == std::set<int>{1, 2});

  auto slice = [&](const Segment& s) {
    return packed.substr(s.begin, s.end - s.begin);
  };
  CHECK(slice(layout.segments[0]).find("<Plan>") != std::string::npos);
  CHECK(slice(layout.segments[0]).find("<Execution>") != std::string::npos);
  CHECK(slice(layout.segments[1]) == "<Step i=\"1\">\nalpha\n</Step>\n");
  CHECK(slice(layout.segments[2]) == "<Step i=\"2\">\nbeta\n</Step>\n");
  CHECK(slice(layout.segments[4]).find("</Execution>") == 0);
  CHECK(slice(layout.segments[4]).find("done") != std::string::npos);

  CHECK(attn::verify_no_leakage(layout, attn::build_mask(layout)).ok());
}
