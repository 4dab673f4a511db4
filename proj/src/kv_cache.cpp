// Copyright (c) 2026 Petriflow Contributors
// SPDX-License-Identifier: Apache-2.0

#include "petriflow/kv_cache.hpp"

#include <algorithm>
#include <cassert>

namespace petriflow::kv {

RadixStore::RadixStore() { nodes_[kRoot] = Node{}; }

const RadixStore::HandleState& RadixStore::state_of(Handle h) const {
  auto it = handles_.find(h.id);
  if (it == handles_.end()) {
    if (released_.count(h.id)) {
      throw Error(ErrorCode::DeadHandle, "handle " + std::to_string(h.id),
                  "handle was released");
    }
    throw Error(ErrorCode::DeadHandle, "handle " + std::to_string(h.id),
                "unknown handle");
  }
  return it->second;
}

std::vector<RadixStore::NodeId> RadixStore::path_nodes(NodeId leaf) const {
  std::vector<NodeId> out;
  NodeId cur = leaf;
  while (true) {
    ++op_visits_;
    out.push_back(cur);
    if (cur == kRoot) break;
    cur = nodes_.at(cur).parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t RadixStore::path_len(NodeId leaf) const {
  std::size_t n = 0;
  for (NodeId id : path_nodes(leaf)) n += nodes_.at(id).span.size();
  return n;
}

std::vector<TokenId> RadixStore::path_tokens(NodeId leaf) const {
  std::vector<TokenId> out;
  for (NodeId id : path_nodes(leaf)) {
    const auto& span = nodes_.at(id).span;
    out.insert(out.end(), span.begin(), span.end());
  }
  return out;
}

std::set<RadixStore::NodeId> RadixStore::pinned_nodes(const HandleState& st) const {
  std::set<NodeId> pins;
  for (const Segment& seg : st.segments) {
    for (NodeId id : path_nodes(seg.leaf)) pins.insert(id);
  }
  return pins;
}

Handle RadixStore::register_state(HandleState st) {
  std::uint64_t id = next_handle_++;
  for (NodeId n : pinned_nodes(st)) ++nodes_.at(n).refcount;
  handles_[id] = std::move(st);
  return Handle{id};
}

void RadixStore::repin(std::uint64_t id, const std::set<NodeId>& before) {
  std::set<NodeId> after = pinned_nodes(handles_.at(id));
  std::set<NodeId> zeros;
  for (NodeId n : after) {
    if (!before.count(n)) ++nodes_.at(n).refcount;
  }
  for (NodeId n : before) {
    if (after.count(n)) continue;
    Node& node = nodes_.at(n);
    assert(node.refcount > 0);
    if (--node.refcount == 0 && n != kRoot) zeros.insert(n);
  }
  reclaim(zeros);
}

void RadixStore::reclaim(const std::set<NodeId>& candidates) {
  // Refcounts are non-increasing downward, so every live child of a
  // zero-refcount node is itself in the candidate set.
  for (NodeId id : candidates) {
    if (id == kRoot) continue;
    const Node& node = nodes_.at(id);
    assert(node.refcount == 0);
    NodeId parent = node.parent;
    if (!candidates.count(parent)) {
      auto pit = nodes_.find(parent);
      if (pit != nodes_.end()) pit->second.children.erase(node.span.front());
    }
  }
  for (NodeId id : candidates) {
    if (id != kRoot) nodes_.erase(id);
  }
}

RadixStore::NodeId RadixStore::split_node(NodeId node, std::size_t cut) {
  Node& n = nodes_.at(node);
  assert(cut > 0 && cut < n.span.size());
  op_visits_ += 2;

  NodeId tail_id = next_node_++;
  Node tail;
  tail.span.assign(n.span.begin() + static_cast<std::ptrdiff_t>(cut), n.span.end());
  tail.parent = node;
  tail.children = std::move(n.children);
  for (auto& [tok, child] : tail.children) nodes_.at(child).parent = tail_id;

  n.span.resize(cut);
  n.children.clear();
  n.children[tail.span.front()] = tail_id;
  nodes_[tail_id] = std::move(tail);

  // Node boundaries moved but path streams did not. A segment ending past the
  // shortened head now needs the tail as its leaf; skip/len stay valid because
  // root-to-tail reproduces the old root-to-node stream.
  std::size_t head_path_len = path_len(node);
  for (auto& [hid, hs] : handles_) {
    for (Segment& seg : hs.segments) {
      if (seg.leaf == node && seg.skip + seg.len > head_path_len) seg.leaf = tail_id;
    }
  }

  // Pin sets shifted wholesale; recompute the two affected counts absolutely.
  std::uint32_t head_refs = 0, tail_refs = 0;
  for (const auto& [hid, hs] : handles_) {
    bool on_head = false, on_tail = false;
    for (const Segment& seg : hs.segments) {
      for (NodeId id = seg.leaf;; id = nodes_.at(id).parent) {
        if (id == node) on_head = true;
        if (id == tail_id) on_tail = true;
        if (id == kRoot) break;
      }
    }
    head_refs += on_head ? 1 : 0;
    tail_refs += on_tail ? 1 : 0;
  }
  nodes_.at(node).refcount = head_refs;
  nodes_.at(tail_id).refcount = tail_refs;
  assert(head_refs > 0);
  if (tail_refs == 0) {
    // The tail held tokens past every live endpoint; children would have kept
    // it pinned, so it is childless and can be dropped.
    assert(nodes_.at(tail_id).children.empty());
    nodes_.at(node).children.erase(nodes_.at(tail_id).span.front());
    nodes_.erase(tail_id);
  }
  return tail_id;
}

RadixStore::NodeId RadixStore::ensure_boundary(NodeId leaf, std::size_t abs_end) {
  if (abs_end == 0) return kRoot;
  std::vector<NodeId> path = path_nodes(leaf);
  std::size_t start = 0;
  for (NodeId id : path) {
    const std::size_t len = nodes_.at(id).span.size();
    if (abs_end == start + len) return id;
    if (abs_end < start + len) {
      split_node(id, abs_end - start);
      return id;  // head keeps the id; its path now ends at abs_end
    }
    start += len;
  }
  throw Error(ErrorCode::NotAnExtension, "offset " + std::to_string(abs_end),
              "offset beyond path length");
}

Handle RadixStore::append(Handle h, const std::vector<TokenId>& tokens) {
  std::scoped_lock lock(mu_);
  op_visits_ = 0;
  state_of(h);  // liveness check
  if (tokens.empty()) return h;

  HandleState& st = handles_.at(h.id);

  auto descend = [&](NodeId from) -> NodeId {
    NodeId cur = from;
    std::size_t i = 0;
    const std::size_t n = tokens.size();
    while (i < n) {
      ++op_visits_;
      Node& cn = nodes_.at(cur);
      auto it = cn.children.find(tokens[i]);
      if (it == cn.children.end()) {
        NodeId fresh = next_node_++;
        Node node;
        node.span.assign(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.end());
        node.parent = cur;
        cn.children[tokens[i]] = fresh;
        nodes_[fresh] = std::move(node);
        return fresh;
      }
      NodeId child = it->second;
      const auto& span = nodes_.at(child).span;
      std::size_t j = 0;
      while (j < span.size() && i + j < n && span[j] == tokens[i + j]) ++j;
      if (j == span.size()) {
        cur = child;
        i += j;
        continue;
      }
      split_node(child, j);  // child keeps the matched head
      cur = child;
      i += j;
      // Loop either exits (tokens exhausted at the new boundary) or creates a
      // sibling of the tail on the next iteration.
    }
    return cur;
  };

  if (st.logical_len == 0) {
    std::set<NodeId> before = pinned_nodes(st);
    NodeId leaf = descend(kRoot);
    st.segments.assign(1, Segment{leaf, 0, tokens.size()});
    st.logical_len = tokens.size();
    repin(h.id, before);
    return h;
  }

  Segment& last = st.segments.back();
  const std::size_t abs_end = last.skip + last.len;
  Node& leaf_node = nodes_.at(last.leaf);
  if (last.leaf != kRoot && leaf_node.children.empty() &&
      leaf_node.refcount == 1 && abs_end == path_len(last.leaf)) {
    // Sole owner of a childless tip: extend the span in place.
    leaf_node.span.insert(leaf_node.span.end(), tokens.begin(), tokens.end());
    last.len += tokens.size();
    st.logical_len += tokens.size();
    return h;
  }

  NodeId boundary = ensure_boundary(last.leaf, abs_end);
  // ensure_boundary may have retargeted stored segments; capture pins after.
  std::set<NodeId> before = pinned_nodes(st);
  NodeId leaf = descend(boundary);
  Segment& last2 = st.segments.back();
  last2.leaf = leaf;
  last2.len += tokens.size();
  st.logical_len += tokens.size();
  repin(h.id, before);
  return h;
}

Handle RadixStore::new_sequence() {
  std::scoped_lock lock(mu_);
  op_visits_ = 0;
  HandleState st;
  st.segments.assign(1, Segment{kRoot, 0, 0});
  st.logical_len = 0;
  return register_state(std::move(st));
}

std::vector<Handle> RadixStore::fork(Handle h, std::size_t n) {
  std::scoped_lock lock(mu_);
  op_visits_ = 0;
  const HandleState& st = state_of(h);
  std::vector<Handle> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(register_state(st));
  return out;
}

Handle RadixStore::compose(const std::vector<SliceView>& views) {
  std::scoped_lock lock(mu_);
  op_visits_ = 0;
  HandleState st;
  for (const SliceView& view : views) {
    if (view.length == 0) continue;
    const HandleState& src = state_of(view.handle);
    if (view.offset + view.length > src.logical_len) {
      throw Error(ErrorCode::NotAnExtension,
                  "handle " + std::to_string(view.handle.id),
                  "slice exceeds sequence length");
    }
    std::size_t pos = 0;
    for (const Segment& seg : src.segments) {
      const std::size_t seg_start = pos;
      const std::size_t seg_end = pos + seg.len;
      pos = seg_end;
      const std::size_t a = std::max(seg_start, view.offset);
      const std::size_t b = std::min(seg_end, view.offset + view.length);
      if (a >= b) continue;
      Segment piece{seg.leaf, seg.skip + (a - seg_start), b - a};
      if (!st.segments.empty()) {
        Segment& prev = st.segments.back();
        if (prev.leaf == piece.leaf && prev.skip + prev.len == piece.skip) {
          prev.len += piece.len;
          continue;
        }
      }
      st.segments.push_back(piece);
    }
    st.logical_len += view.length;
  }
  if (st.segments.empty()) st.segments.assign(1, Segment{kRoot, 0, 0});
  return register_state(std::move(st));
}

Handle RadixStore::prefix_view(Handle h, std::size_t length) {
  return compose({SliceView{h, 0, length}});
}

Handle RadixStore::join_merge(const std::vector<Handle>& branches,
                              Handle shared_prefix) {
  std::vector<SliceView> views;
  std::size_t prefix_len = 0;
  {
    std::scoped_lock lock(mu_);
    const HandleState& pst = state_of(shared_prefix);
    prefix_len = pst.logical_len;
    const std::vector<TokenId> ptoks = materialize_locked(pst);
    for (const Handle& b : branches) {
      const HandleState& bst = state_of(b);
      if (bst.logical_len < prefix_len) {
        throw Error(ErrorCode::NotAnExtension, "handle " + std::to_string(b.id),
                    "branch shorter than shared prefix");
      }
      const std::vector<TokenId> btoks = materialize_locked(bst);
      if (!std::equal(ptoks.begin(), ptoks.end(), btoks.begin())) {
        throw Error(ErrorCode::NotAnExtension, "handle " + std::to_string(b.id),
                    "branch does not extend the shared prefix");
      }
    }
  }
  views.push_back(SliceView{shared_prefix, 0, prefix_len});
  for (const Handle& b : branches) {
    std::size_t blen = length(b);
    if (blen > prefix_len) views.push_back(SliceView{b, prefix_len, blen - prefix_len});
  }
  return compose(views);
}

void RadixStore::release(Handle h) {
  std::scoped_lock lock(mu_);
  op_visits_ = 0;
  if (released_.count(h.id)) {
    throw Error(ErrorCode::DoubleRelease, "handle " + std::to_string(h.id),
                "handle already released");
  }
  auto it = handles_.find(h.id);
  if (it == handles_.end()) {
    throw Error(ErrorCode::DeadHandle, "handle " + std::to_string(h.id),
                "unknown handle");
  }
  std::set<NodeId> pins = pinned_nodes(it->second);
  handles_.erase(it);
  released_.insert(h.id);
  std::set<NodeId> zeros;
  for (NodeId n : pins) {
    Node& node = nodes_.at(n);
    assert(node.refcount > 0);
    if (--node.refcount == 0 && n != kRoot) zeros.insert(n);
  }
  reclaim(zeros);
}

bool RadixStore::live(Handle h) const {
  std::scoped_lock lock(mu_);
  return handles_.count(h.id) != 0;
}

std::vector<TokenId> RadixStore::materialize_locked(const HandleState& st) const {
  std::vector<TokenId> out;
  out.reserve(st.logical_len);
  for (const Segment& seg : st.segments) {
    std::vector<TokenId> path = path_tokens(seg.leaf);
    assert(seg.skip + seg.len <= path.size());
    out.insert(out.end(), path.begin() + static_cast<std::ptrdiff_t>(seg.skip),
               path.begin() + static_cast<std::ptrdiff_t>(seg.skip + seg.len));
  }
  return out;
}

std::vector<TokenId> RadixStore::materialize(Handle h) const {
  std::scoped_lock lock(mu_);
  return materialize_locked(state_of(h));
}

std::size_t RadixStore::length(Handle h) const {
  std::scoped_lock lock(mu_);
  return state_of(h).logical_len;
}

StoreStats RadixStore::stats() const {
  std::scoped_lock lock(mu_);
  StoreStats s;
  s.nodes = nodes_.size() - 1;
  for (const auto& [id, node] : nodes_) s.physical_tokens += node.span.size();
  s.live_handles = handles_.size();
  return s;
}

nlohmann::json RadixStore::dump() const {
  std::scoped_lock lock(mu_);
  nlohmann::json out;
  out["nodes"] = nlohmann::json::array();
  for (const auto& [id, node] : nodes_) {
    nlohmann::json jn;
    jn["id"] = id;
    jn["parent"] = node.parent;
    jn["refcount"] = node.refcount;
    jn["span"] = node.span;
    std::vector<NodeId> kids;
    for (const auto& [tok, child] : node.children) kids.push_back(child);
    std::sort(kids.begin(), kids.end());
    jn["children"] = kids;
    out["nodes"].push_back(jn);
  }
  out["handles"] = nlohmann::json::array();
  for (const auto& [id, st] : handles_) {
    nlohmann::json jh;
    jh["id"] = id;
    jh["length"] = st.logical_len;
    jh["segments"] = nlohmann::json::array();
    for (const Segment& seg : st.segments) {
      jh["segments"].push_back(
          {{"leaf", seg.leaf}, {"skip", seg.skip}, {"len", seg.len}});
    }
    out["handles"].push_back(jh);
  }
  return out;
}

std::uint64_t RadixStore::last_op_node_visits() const {
  std::scoped_lock lock(mu_);
  return op_visits_;
}

std::vector<TokenId> RadixStore::tokenize(std::string_view text) {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<TokenId>(c));
  return out;
}

std::string RadixStore::detokenize(const std::vector<TokenId>& tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) out.push_back(static_cast<char>(static_cast<unsigned char>(t)));
  return out;
}

}  // namespace petriflow::kv
