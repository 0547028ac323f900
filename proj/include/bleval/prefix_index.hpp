#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bleval/ip.hpp"

namespace bleval {

using BigCount = boost::multiprecision::cpp_int;

/// Longest-prefix-match set over IPv4 and IPv6 prefixes.
///
/// Each family lives in its own binary trie keyed on address bits. Duplicate
/// prefixes collapse to one entry; nested prefixes are kept as they are, and
/// queries (expansion, containment) resolve the overlap. Mutation is
/// single-writer; const queries are safe from any number of threads once
/// insertion is finished.
class PrefixIndex {
 public:
  PrefixIndex() = default;
  explicit PrefixIndex(std::span<const IpPrefix> prefixes);

  /// Returns false if the prefix was already present.
  bool insert(const IpPrefix& prefix);

  bool contains(const IpAddress& addr) const;

  /// Most specific stored prefix covering `addr`.
  std::optional<IpPrefix> longest_match(const IpAddress& addr) const;

  /// True iff every address of `prefix` is covered by the stored prefixes
  /// (possibly by several of them together).
  bool covers(const IpPrefix& prefix) const;

  /// Distinct addresses in the union of all stored prefixes.
  BigCount expanded_address_count() const;

  std::size_t entry_count() const { return entries_.size(); }
  std::size_t v4_count() const { return v4_count_; }
  std::size_t v6_count() const { return entries_.size() - v4_count_; }
  bool empty() const { return entries_.empty(); }

  /// Distinct stored prefixes in first-insertion order.
  const std::vector<IpPrefix>& entries() const { return entries_; }

 private:
  struct Node {
    std::uint32_t child[2] = {0, 0};  // 0 = absent (root is never a child)
    bool terminal = false;
  };

  struct Trie {
    std::vector<Node> nodes{Node{}};
  };

  Trie& trie_for(Family f) { return f == Family::v4 ? v4_ : v6_; }
  const Trie& trie_for(Family f) const { return f == Family::v4 ? v4_ : v6_; }

  static bool subtree_full(const Trie& t, std::uint32_t node, int depth, int width);

  Trie v4_;
  Trie v6_;
  std::vector<IpPrefix> entries_;
  std::size_t v4_count_ = 0;
};

/// Number of entries of `a` whose every address is covered by `b`.
/// Asymmetric: a /32 inside one of b's /24s counts, the reverse does not.
std::size_t containment_count(const PrefixIndex& a, const PrefixIndex& b);

}  // namespace bleval
