#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "bleval/common.hpp"

namespace bleval {

enum class Family : std::uint8_t { v4, v6 };

constexpr int family_width(Family f) { return f == Family::v4 ? 32 : 128; }

/// An IPv4 or IPv6 address. Bytes are in network order; for v4 only the
/// first four are used and the rest stay zero.
class IpAddress {
 public:
  IpAddress() = default;

  static IpAddress v4(std::uint32_t host_order);
  static IpAddress v6(const std::array<std::uint8_t, 16>& bytes);

  /// Dotted quad or RFC 4291 text. Returns nullopt on malformed input.
  static std::optional<IpAddress> try_parse(std::string_view text);
  /// Throws InputError with the offending text.
  static IpAddress parse(std::string_view text);

  Family family() const { return family_; }
  int width() const { return family_width(family_); }
  const std::array<std::uint8_t, 16>& bytes() const { return bytes_; }

  /// Bit `i` counted from the most significant bit (0 = MSB).
  bool bit(int i) const { return (bytes_[static_cast<std::size_t>(i) >> 3] >> (7 - (i & 7))) & 1U; }

  /// Host-order value of a v4 address.
  std::uint32_t v4_value() const;

  /// Address with every bit at position >= `length` cleared.
  IpAddress masked(int length) const;

  std::string to_string() const;

  // v4 sorts before v6, then numerically.
  auto operator<=>(const IpAddress&) const = default;

 private:
  Family family_ = Family::v4;
  std::array<std::uint8_t, 16> bytes_{};
};

/// Thrown when a prefix has host bits set below its length.
class CanonicalizationError : public InputError {
 public:
  using InputError::InputError;
};

/// CIDR prefix in canonical form (no host bits set).
class IpPrefix {
 public:
  IpPrefix() = default;

  /// Throws CanonicalizationError if `address` has bits set past `length`,
  /// InputError if `length` is out of range for the family.
  IpPrefix(IpAddress address, int length);

  /// Masks host bits instead of rejecting them.
  static IpPrefix canonical(IpAddress address, int length);
  /// Full-length prefix for a single host.
  static IpPrefix host(IpAddress address) { return IpPrefix(address, address.width()); }

  /// "a.b.c.d/len", "a.b.c.d" (implied /32), or the v6 equivalents.
  static IpPrefix parse(std::string_view text);

  const IpAddress& address() const { return address_; }
  int length() const { return length_; }
  Family family() const { return address_.family(); }
  bool is_host() const { return length_ == address_.width(); }

  bool covers(const IpAddress& a) const;
  bool covers(const IpPrefix& p) const { return p.length_ >= length_ && p.family() == family() && covers(p.address_); }

  /// Always "addr/len".
  std::string to_string() const;
  /// Bare address for host prefixes, "addr/len" otherwise.
  std::string to_feed_string() const;

  auto operator<=>(const IpPrefix&) const = default;

 private:
  IpAddress address_;
  int length_ = 0;
};

}  // namespace bleval

template <>
struct std::hash<bleval::IpAddress> {
  std::size_t operator()(const bleval::IpAddress& a) const noexcept {
    // FNV-1a over family + bytes
    std::uint64_t h = 1469598103934665603ULL ^ static_cast<std::uint64_t>(a.family());
    for (auto b : a.bytes()) {
      h ^= b;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};
