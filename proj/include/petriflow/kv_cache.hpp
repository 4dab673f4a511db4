// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "petriflow/errors.hpp"

namespace petriflow::kv {

// Token ids are byte values in this runtime (0..255). The store itself is
// agnostic; any non-negative id works.
using TokenId = std::int32_t;

// Opaque reference to a logical token sequence owned by a RadixStore.
// Copying a Handle does not copy the sequence and does not affect refcounts;
// ownership is per registered handle id, not per Handle value.
struct Handle {
  std::uint64_t id = 0;

  bool valid() const { return id != 0; }
  friend bool operator==(const Handle& a, const Handle& b) { return a.id == b.id; }
  friend bool operator<(const Handle& a, const Handle& b) { return a.id < b.id; }
};

// A contiguous slice of an existing sequence, used to build composite
// sequences without copying tokens. offset/length are in tokens, relative to
// the source handle's logical stream.
struct SliceView {
  Handle handle;
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct StoreStats {
  std::size_t nodes = 0;            // radix nodes, root excluded
  std::size_t physical_tokens = 0;  // sum of stored span lengths
  std::size_t live_handles = 0;
};

// Refcounted radix tree over token sequences.
//
// Layout invariants:
//   - every node except the root holds a non-empty token span;
//   - a node's children are keyed by the first token of the child span, so
//     sibling spans never share a first token;
//   - the token stream of a root-to-leaf path is the concatenation of spans.
//
// A handle maps to an ordered list of (leaf, skip, len) segments; its logical
// stream is the concatenation of path-stream slices. Plain sequences have one
// segment; composites (views, join results) may have several.
//
// Refcount invariant: node.refcount equals the number of live handles whose
// segment paths pass through the node (counted once per handle). Refcounts
// are non-increasing from parent to child, so a zero-refcount node has only
// zero-refcount descendants and can be reclaimed as a subtree.
//
// fork and compose touch only the nodes on the referenced paths; cost is
// proportional to path length, never to store size. last_op_node_visits()
// exposes the touched-node count of the most recent mutating operation.
//
// All public operations are serialized by an internal mutex.
class RadixStore {
 public:
  RadixStore();
  RadixStore(const RadixStore&) = delete;
  RadixStore& operator=(const RadixStore&) = delete;

  // Registers an empty sequence rooted at the radix root.
  Handle new_sequence();

  // Extends h by tokens, reusing storage where the extension retraces an
  // existing path. Returns h (the handle id is stable across appends).
  // Appending to a sole-owner childless leaf extends the span in place;
  // any shared or interior boundary first splits the node at the handle's
  // endpoint, then descends.
  Handle append(Handle h, const std::vector<TokenId>& tokens);

  // Registers n new handles with h's exact segment list. No tokens are
  // copied; refcounts along the referenced paths increase by n. The original
  // handle stays live.
  std::vector<Handle> fork(Handle h, std::size_t n);

  // Registers a composite handle over the given slices, in order. Zero-copy.
  // Throws DeadHandle for dead sources, NotAnExtension for out-of-range
  // slices.
  Handle compose(const std::vector<SliceView>& views);

  // Zero-copy view of the first `length` tokens of h.
  Handle prefix_view(Handle h, std::size_t length);

  // Merges branch sequences that all extend shared_prefix: the result is
  // prefix once, then each branch's suffix in argument order. Throws
  // NotAnExtension if some branch does not start with shared_prefix.
  // Zero-copy; no physical tokens are added.
  Handle join_merge(const std::vector<Handle>& branches, Handle shared_prefix);

  // Releases a handle. Unknown ids throw DeadHandle; second release of the
  // same id throws DoubleRelease. Subtrees whose refcount reaches zero are
  // reclaimed immediately (the root persists).
  void release(Handle h);

  bool live(Handle h) const;
  std::vector<TokenId> materialize(Handle h) const;
  std::size_t length(Handle h) const;

  StoreStats stats() const;

  // Debug snapshot: nodes (id, parent, span, refcount, children) and live
  // handles with their segment lists, deterministically ordered.
  nlohmann::json dump() const;

  std::uint64_t last_op_node_visits() const;

  // Byte-level codec: one token per byte of text.
  static std::vector<TokenId> tokenize(std::string_view text);
  static std::string detokenize(const std::vector<TokenId>& tokens);

 private:
  using NodeId = std::uint32_t;
  static constexpr NodeId kRoot = 0;

  struct Node {
    std::vector<TokenId> span;
    NodeId parent = kRoot;
    std::map<TokenId, NodeId> children;  // keyed by first token of child span
    std::uint32_t refcount = 0;
  };

  // Slice [skip, skip+len) of the root-to-leaf path stream.
  struct Segment {
    NodeId leaf = kRoot;
    std::size_t skip = 0;
    std::size_t len = 0;
  };

  struct HandleState {
    std::vector<Segment> segments;
    std::size_t logical_len = 0;
  };

  const HandleState& state_of(Handle h) const;
  std::size_t path_len(NodeId leaf) const;
  std::vector<TokenId> path_tokens(NodeId leaf) const;
  std::vector<NodeId> path_nodes(NodeId leaf) const;
  std::set<NodeId> pinned_nodes(const HandleState& st) const;
  Handle register_state(HandleState st);
  void repin(std::uint64_t id, const std::set<NodeId>& before);
  void reclaim(const std::set<NodeId>& candidates);
  // Splits the node owning path offset `abs_end` so a node boundary lands
  // exactly there; returns the node whose path ends at abs_end.
  NodeId ensure_boundary(NodeId leaf, std::size_t abs_end);
  NodeId split_node(NodeId node, std::size_t cut);
  std::vector<TokenId> materialize_locked(const HandleState& st) const;

  mutable std::mutex mu_;
  std::map<NodeId, Node> nodes_;
  std::map<std::uint64_t, HandleState> handles_;
  std::set<std::uint64_t> released_;
  NodeId next_node_ = 1;
  std::uint64_t next_handle_ = 1;
  mutable std::uint64_t op_visits_ = 0;
};

}  // namespace petriflow::kv
