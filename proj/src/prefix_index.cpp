#include "bleval/prefix_index.hpp"

#include <utility>

namespace bleval {

PrefixIndex::PrefixIndex(std::span<const IpPrefix> prefixes) {
  for (const auto& p : prefixes) insert(p);
}

bool PrefixIndex::insert(const IpPrefix& prefix) {
  Trie& t = trie_for(prefix.family());
  std::uint32_t node = 0;
  for (int depth = 0; depth < prefix.length(); ++depth) {
    int b = prefix.address().bit(depth) ? 1 : 0;
    std::uint32_t next = t.nodes[node].child[b];
    if (next == 0) {
      next = static_cast<std::uint32_t>(t.nodes.size());
      t.nodes.emplace_back();
      t.nodes[node].child[b] = next;
    }
    node = next;
  }
  if (t.nodes[node].terminal) return false;
  t.nodes[node].terminal = true;
  entries_.push_back(prefix);
  if (prefix.family() == Family::v4) ++v4_count_;
  return true;
}

bool PrefixIndex::contains(const IpAddress& addr) const { return longest_match(addr).has_value(); }

std::optional<IpPrefix> PrefixIndex::longest_match(const IpAddress& addr) const {
  const Trie& t = trie_for(addr.family());
  std::uint32_t node = 0;
  int best = -1;
  for (int depth = 0;; ++depth) {
    if (t.nodes[node].terminal) best = depth;
    if (depth == addr.width()) break;
    node = t.nodes[node].child[addr.bit(depth) ? 1 : 0];
    if (node == 0) break;
  }
  if (best < 0) return std::nullopt;
  return IpPrefix(addr.masked(best), best);
}

bool PrefixIndex::subtree_full(const Trie& t, std::uint32_t node, int depth, int width) {
  const Node& n = t.nodes[node];
  if (n.terminal) return true;
  if (depth == width || n.child[0] == 0 || n.child[1] == 0) return false;
  return subtree_full(t, n.child[0], depth + 1, width) && subtree_full(t, n.child[1], depth + 1, width);
}

bool PrefixIndex::covers(const IpPrefix& prefix) const {
  const Trie& t = trie_for(prefix.family());
  std::uint32_t node = 0;
  for (int depth = 0; depth < prefix.length(); ++depth) {
    if (t.nodes[node].terminal) return true;
    node = t.nodes[node].child[prefix.address().bit(depth) ? 1 : 0];
    if (node == 0) return false;
  }
  return subtree_full(t, node, prefix.length(), prefix.address().width());
}

BigCount PrefixIndex::expanded_address_count() const {
  BigCount total = 0;
  for (Family f : {Family::v4, Family::v6}) {
    const Trie& t = trie_for(f);
    const int width = family_width(f);
    // (node, depth); stop descending at the first terminal so nested
    // prefixes are not counted twice.
    std::vector<std::pair<std::uint32_t, int>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [node, depth] = stack.back();
      stack.pop_back();
      const Node& n = t.nodes[node];
      if (n.terminal) {
        total += BigCount(1) << (width - depth);
        continue;
      }
      for (auto c : n.child) {
        if (c != 0) stack.emplace_back(c, depth + 1);
      }
    }
  }
  return total;
}

std::size_t containment_count(const PrefixIndex& a, const PrefixIndex& b) {
  std::size_t n = 0;
  for (const auto& p : a.entries()) {
    if (b.covers(p)) ++n;
  }
  return n;
}

}  // namespace bleval
