#include "bleval/ip.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <cstring>

#include <fmt/format.h>

namespace bleval {

IpAddress IpAddress::v4(std::uint32_t host_order) {
  IpAddress a;
  a.family_ = Family::v4;
  a.bytes_[0] = static_cast<std::uint8_t>(host_order >> 24);
  a.bytes_[1] = static_cast<std::uint8_t>(host_order >> 16);
  a.bytes_[2] = static_cast<std::uint8_t>(host_order >> 8);
  a.bytes_[3] = static_cast<std::uint8_t>(host_order);
  return a;
}

IpAddress IpAddress::v6(const std::array<std::uint8_t, 16>& bytes) {
  IpAddress a;
  a.family_ = Family::v6;
  a.bytes_ = bytes;
  return a;
}

std::optional<IpAddress> IpAddress::try_parse(std::string_view text) {
  if (text.empty() || text.size() >= INET6_ADDRSTRLEN) return std::nullopt;
  char buf[INET6_ADDRSTRLEN];
  std::memcpy(buf, text.data(), text.size());
  buf[text.size()] = '\0';

  IpAddress a;
  if (text.find(':') == std::string_view::npos) {
    in_addr v4{};
    if (inet_pton(AF_INET, buf, &v4) != 1) return std::nullopt;
    a.family_ = Family::v4;
    std::memcpy(a.bytes_.data(), &v4, 4);
  } else {
    in6_addr v6{};
    if (inet_pton(AF_INET6, buf, &v6) != 1) return std::nullopt;
    a.family_ = Family::v6;
    std::memcpy(a.bytes_.data(), &v6, 16);
  }
  return a;
}

IpAddress IpAddress::parse(std::string_view text) {
  auto a = try_parse(text);
  if (!a) throw InputError(fmt::format("invalid IP address '{}'", text));
  return *a;
}

std::uint32_t IpAddress::v4_value() const {
  return (std::uint32_t{bytes_[0]} << 24) | (std::uint32_t{bytes_[1]} << 16) |
         (std::uint32_t{bytes_[2]} << 8) | std::uint32_t{bytes_[3]};
}

IpAddress IpAddress::masked(int length) const {
  IpAddress out = *this;
  for (int byte = 0; byte < 16; ++byte) {
    int keep = length - byte * 8;
    if (keep >= 8) continue;
    if (keep <= 0) {
      out.bytes_[static_cast<std::size_t>(byte)] = 0;
    } else {
      out.bytes_[static_cast<std::size_t>(byte)] &= static_cast<std::uint8_t>(0xFF << (8 - keep));
    }
  }
  return out;
}

std::string IpAddress::to_string() const {
  char buf[INET6_ADDRSTRLEN];
  const char* r = family_ == Family::v4 ? inet_ntop(AF_INET, bytes_.data(), buf, sizeof(buf))
                                        : inet_ntop(AF_INET6, bytes_.data(), buf, sizeof(buf));
  if (r == nullptr) throw InvariantError("inet_ntop failed");
  return buf;
}

IpPrefix::IpPrefix(IpAddress address, int length) : address_(address), length_(length) {
  if (length < 0 || length > address.width()) {
    throw InputError(fmt::format("prefix length {} out of range for {}", length, address.to_string()));
  }
  if (address.masked(length) != address) {
    throw CanonicalizationError(fmt::format("non-canonical prefix '{}/{}': host bits set (canonical form {}/{})",
                                            address.to_string(), length, address.masked(length).to_string(), length));
  }
}

IpPrefix IpPrefix::canonical(IpAddress address, int length) {
  if (length < 0 || length > address.width()) {
    throw InputError(fmt::format("prefix length {} out of range for {}", length, address.to_string()));
  }
  return IpPrefix(address.masked(length), length);
}

IpPrefix IpPrefix::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) return host(IpAddress::parse(text));

  IpAddress addr = IpAddress::parse(text.substr(0, slash));
  auto len_text = text.substr(slash + 1);
  int length = -1;
  auto [p, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), length);
  if (len_text.empty() || ec != std::errc{} || p != len_text.data() + len_text.size()) {
    throw InputError(fmt::format("invalid prefix length in '{}'", text));
  }
  return IpPrefix(addr, length);
}

bool IpPrefix::covers(const IpAddress& a) const {
  return a.family() == family() && a.masked(length_) == address_;
}

std::string IpPrefix::to_string() const { return fmt::format("{}/{}", address_.to_string(), length_); }

std::string IpPrefix::to_feed_string() const { return is_host() ? address_.to_string() : to_string(); }

}  // namespace bleval
