#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bleval/common.hpp"
#include "bleval/ip.hpp"
#include "bleval/prefix_index.hpp"

namespace bleval {

enum class Proto : std::uint8_t { tcp, udp, other };

std::string_view to_string(Proto p);
/// "tcp" / "udp" / "other", or an IANA protocol number.
Proto parse_proto(std::string_view text);

struct FlowRecord {
  std::int64_t timestamp = 0;
  Proto proto = Proto::tcp;
  IpAddress client_ip;
  IpAddress server_ip;
  std::uint16_t client_port = 0;
  std::uint16_t server_port = 0;
  std::uint64_t client_to_server_pkts = 0;
  std::uint64_t server_to_client_pkts = 0;
  std::uint64_t client_to_server_bytes = 0;
  std::uint64_t server_to_client_bytes = 0;
  std::uint64_t cyberscore = 0;
};

inline constexpr std::string_view kFlowHeader =
    "ts,proto,client_ip,server_ip,client_port,server_port,c2s_pkts,s2c_pkts,c2s_bytes,s2c_bytes,cyberscore";

/// Parses one data line. Throws InputError describing the first bad field.
FlowRecord parse_flow_line(std::string_view line);
std::string format_flow_line(const FlowRecord& r);

struct NetworkConfig {
  std::string network_name;
  std::vector<IpPrefix> local_prefixes;
  std::set<std::uint16_t> excluded_ports{80, 443};
  std::uint32_t scanner_threshold = 128;
  std::vector<IpPrefix> admin_whitelist;
  /// Optional known-unused ranges. When non-empty, only observed hosts inside
  /// them can be receive-only.
  std::vector<IpPrefix> silent_hosts;

  /// Throws InputError if an invariant does not hold.
  void validate() const;

  /// key = value lines; `local`, `admin`, `silent` may repeat and take
  /// comma-separated prefix lists.
  static NetworkConfig parse(std::string_view text);
  static NetworkConfig load(const std::filesystem::path& path);
  std::string serialize() const;
};

enum class EndpointRole : std::uint8_t { local, remote };

/// Resolved prefix sets for a NetworkConfig.
class NetworkView {
 public:
  explicit NetworkView(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }
  EndpointRole classify(const IpAddress& a) const {
    return local_.contains(a) ? EndpointRole::local : EndpointRole::remote;
  }
  bool is_local(const IpAddress& a) const { return local_.contains(a); }
  bool is_whitelisted(const IpAddress& a) const { return admin_.contains(a); }
  bool may_be_silent(const IpAddress& a) const { return silent_.empty() || silent_.contains(a); }

 private:
  NetworkConfig config_;
  PrefixIndex local_;
  PrefixIndex admin_;
  PrefixIndex silent_;
};

EndpointRole classify_endpoint(const IpAddress& addr, const NetworkConfig& config);

struct HostActivity {
  std::uint64_t rx_pkts = 0;
  std::uint64_t tx_pkts = 0;
  std::uint64_t flows = 0;

  bool operator==(const HostActivity&) const = default;
};

struct FlowDiagnostic {
  std::size_t line_number = 0;
  std::string reason;
};

/// One network's flows for one UTC day, with per-local-host activity.
class DailyFlowSet {
 public:
  DailyFlowSet(std::shared_ptr<const NetworkView> network, Day date);

  /// Adds a flow whose timestamp lies inside the day. Throws InputError otherwise.
  void add(const FlowRecord& r);

  const std::string& network_name() const { return network_->config().network_name; }
  Day date() const { return date_; }
  const std::vector<FlowRecord>& flows() const { return flows_; }
  const NetworkView& network() const { return *network_; }
  const std::unordered_map<IpAddress, HostActivity>& local_activity() const { return activity_; }
  const std::vector<FlowDiagnostic>& diagnostics() const { return diagnostics_; }
  std::size_t malformed_count() const { return malformed_; }
  std::size_t out_of_window_count() const { return out_of_window_; }

 private:
  friend DailyFlowSet load_day(const std::filesystem::path&, const NetworkConfig&, Day);
  friend DailyFlowSet load_day_text(std::string_view, const NetworkConfig&, Day);

  std::shared_ptr<const NetworkView> network_;
  Day date_;
  std::vector<FlowRecord> flows_;
  std::unordered_map<IpAddress, HostActivity> activity_;
  std::vector<FlowDiagnostic> diagnostics_;
  std::size_t malformed_ = 0;
  std::size_t out_of_window_ = 0;
};

/// Loads a flow file (header line required). Records outside the day are
/// dropped with a diagnostic; bad lines are skipped unless they exceed 1% of
/// the records, in which case the whole file is rejected.
DailyFlowSet load_day(const std::filesystem::path& path, const NetworkConfig& config, Day date);
DailyFlowSet load_day_text(std::string_view text, const NetworkConfig& config, Day date);

/// Local hosts that received at least one packet and sent none.
std::unordered_set<IpAddress> receive_only_hosts(const DailyFlowSet& day);

/// Remote endpoints that acted as clients during the day.
std::unordered_set<IpAddress> remote_clients(const DailyFlowSet& day);

}  // namespace bleval
