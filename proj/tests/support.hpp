#pragma once

// Test-only helpers: independent oracles and random fixtures.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bleval/flow.hpp"
#include "bleval/ip.hpp"

namespace bleval::test {

/// Bit-by-bit comparison, deliberately not using IpPrefix::covers or masked().
inline bool oracle_covers(const IpPrefix& p, const IpAddress& a) {
  if (p.family() != a.family()) return false;
  const auto& x = p.address().bytes();
  const auto& y = a.bytes();
  for (int i = 0; i < p.length(); ++i) {
    const int byte = i / 8, shift = 7 - i % 8;
    if (((x[byte] >> shift) & 1) != ((y[byte] >> shift) & 1)) return false;
  }
  return true;
}

inline bool oracle_contains(const std::vector<IpPrefix>& list, const IpAddress& a) {
  for (const auto& p : list) {
    if (oracle_covers(p, a)) return true;
  }
  return false;
}

inline IpAddress v4(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d) {
  return IpAddress::v4((a << 24) | (b << 16) | (c << 8) | d);
}

inline IpAddress ip(const char* text) { return IpAddress::parse(text); }
inline IpPrefix pfx(const char* text) { return IpPrefix::parse(text); }

inline IpAddress random_v6(std::mt19937_64& g) {
  std::array<std::uint8_t, 16> b{};
  // keep the top bits in a narrow range so prefixes and lookups collide
  b[0] = 0x20;
  b[1] = 0x01;
  b[2] = static_cast<std::uint8_t>(g() % 4);
  for (std::size_t i = 3; i < 16; ++i) b[i] = static_cast<std::uint8_t>(g());
  return IpAddress::v6(b);
}

inline IpAddress random_address(std::mt19937_64& g) {
  if (g() % 4 == 0) return random_v6(g);
  return IpAddress::v4(static_cast<std::uint32_t>((10u << 24) | (g() & 0x00FFFFFFu)));
}

inline IpPrefix random_prefix(std::mt19937_64& g) {
  auto a = random_address(g);
  const int width = a.width();
  const int lo = a.family() == Family::v4 ? 8 : 24;
  const int len = lo + static_cast<int>(g() % static_cast<std::uint64_t>(width - lo + 1));
  return IpPrefix::canonical(a, len);
}

/// An address near `p`: inside it half the time.
inline IpAddress address_near(std::mt19937_64& g, const IpPrefix& p) {
  auto bytes = p.address().bytes();
  const int width = p.address().width();
  for (int i = p.length(); i < width; ++i) {
    if (g() & 1) bytes[static_cast<std::size_t>(i / 8)] ^= static_cast<std::uint8_t>(1u << (7 - i % 8));
  }
  if (g() & 1 && p.length() > 0) {
    const int flip = static_cast<int>(g() % static_cast<std::uint64_t>(p.length()));
    bytes[static_cast<std::size_t>(flip / 8)] ^= static_cast<std::uint8_t>(1u << (7 - flip % 8));
  }
  if (p.family() == Family::v4) {
    return IpAddress::v4((std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
                         (std::uint32_t{bytes[2]} << 8) | bytes[3]);
  }
  return IpAddress::v6(bytes);
}

/// Every address of a v4 prefix inside the 10.20.0.0/16 test universe, as
/// 16-bit offsets.
inline std::set<std::uint32_t> expand_in_universe(const IpPrefix& p) {
  std::set<std::uint32_t> out;
  for (std::uint32_t off = 0; off < 65536; ++off) {
    if (oracle_covers(p, IpAddress::v4((10u << 24) | (20u << 16) | off))) out.insert(off);
  }
  return out;
}

/// Random prefix of length >= min_len inside 10.20.0.0/16.
inline IpPrefix universe_prefix(std::mt19937_64& g, int min_len) {
  const int len = min_len + static_cast<int>(g() % static_cast<std::uint64_t>(33 - min_len));
  return IpPrefix::canonical(IpAddress::v4((10u << 24) | (20u << 16) | static_cast<std::uint32_t>(g() & 0xFFFF)), len);
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("bleval_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline void write(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline NetworkConfig test_network(const std::string& name = "lab") {
  NetworkConfig c;
  c.network_name = name;
  c.local_prefixes = {IpPrefix::parse("10.0.0.0/16")};
  return c;
}

/// Inbound flow from `client` to local `server` with no reply.
inline FlowRecord probe(std::int64_t ts, const IpAddress& client, const IpAddress& server, std::uint16_t port,
                        Proto proto = Proto::tcp, std::uint64_t score = 0) {
  FlowRecord r;
  r.timestamp = ts;
  r.proto = proto;
  r.client_ip = client;
  r.server_ip = server;
  r.client_port = 40000;
  r.server_port = port;
  r.client_to_server_pkts = 1;
  r.client_to_server_bytes = 60;
  r.cyberscore = score;
  return r;
}

}  // namespace bleval::test
