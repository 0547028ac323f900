#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bleval/common.hpp"
#include "bleval/flow.hpp"
#include "bleval/ip.hpp"
#include "bleval/prefix_index.hpp"

namespace bleval {

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// A failure-line matcher. The regex must contain exactly one named group
/// `(?<ip>...)` holding the source address.
class LogPattern {
 public:
  LogPattern(std::string name, std::string service, std::string regex);
  ~LogPattern();
  LogPattern(const LogPattern&);
  LogPattern& operator=(const LogPattern&);
  LogPattern(LogPattern&&) noexcept;
  LogPattern& operator=(LogPattern&&) noexcept;

  const std::string& name() const { return name_; }
  const std::string& service() const { return service_; }
  const std::string& regex() const { return regex_; }

  /// The captured source address, if the line matches and it parses.
  std::optional<IpAddress> match(std::string_view line) const;

 private:
  struct Compiled;
  std::string name_;
  std::string service_;
  std::string regex_;
  std::shared_ptr<const Compiled> compiled_;
};

/// Pattern pack file:
///
///   [openssh-failed-password]
///   service = ssh
///   regex = Failed password for .* from (?<ip>\S+) port
///
std::vector<LogPattern> parse_pattern_pack(std::string_view text);
std::vector<LogPattern> load_pattern_pack(const std::filesystem::path& path);

enum class AttackKind : std::uint8_t { auth_bruteforce, closed_port_probe };
std::string_view to_string(AttackKind k);
AttackKind parse_attack_kind(std::string_view s);

struct AttackEvent {
  IpAddress remote_ip;
  Day date;
  AttackKind kind = AttackKind::auth_bruteforce;
  std::uint64_t evidence_count = 0;
  std::set<std::string> services;

  bool operator==(const AttackEvent&) const = default;
};

/// Per-IP failure counts accumulated over any number of chunks of one
/// day's logs. Thresholding happens only in finish(), so chunked and
/// whole-day input give the same events.
class LogTally {
 public:
  explicit LogTally(std::vector<LogPattern> patterns) : patterns_(std::move(patterns)) {}

  void feed_line(std::string_view line);
  void feed(std::string_view text);
  void merge(const LogTally& other);

  /// One auth_bruteforce event per non-whitelisted IP with at least
  /// `failure_threshold` matched lines, sorted by address.
  std::vector<AttackEvent> finish(Day date, std::uint64_t failure_threshold, const PrefixIndex& whitelist) const;

  std::uint64_t matched_lines() const { return matched_; }

 private:
  struct Entry {
    std::uint64_t count = 0;
    std::set<std::string> services;
  };
  std::vector<LogPattern> patterns_;
  std::map<IpAddress, Entry> per_ip_;
  std::uint64_t matched_ = 0;
};

std::vector<AttackEvent> scan_logs(std::string_view text, const std::vector<LogPattern>& patterns, Day date,
                                   std::uint64_t failure_threshold, const PrefixIndex& whitelist = {});

enum class PortState : std::uint8_t { open, closed };

struct PortContactEvent {
  std::int64_t timestamp = 0;
  IpAddress remote_ip;
  std::uint16_t local_port = 0;
  Proto proto = Proto::tcp;
  PortState port_state = PortState::closed;
};

inline constexpr std::string_view kPortEventHeader = "ts,remote_ip,port,proto,state";

/// Line-delimited `ts,remote_ip,port,proto,state`; header optional.
std::vector<PortContactEvent> parse_port_events(std::string_view text);
std::string format_port_events(const std::vector<PortContactEvent>& events);

/// One closed_port_probe event per non-whitelisted IP with at least one
/// closed-port contact inside the day.
std::vector<AttackEvent> scan_port_events(const std::vector<PortContactEvent>& events, Day date,
                                          const PrefixIndex& whitelist = {});

inline constexpr std::string_view kEventHeader = "date,remote_ip,kind,evidence,services";

std::string format_events(const std::vector<AttackEvent>& events);
std::vector<AttackEvent> parse_events(std::string_view text);

}  // namespace bleval
