#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bleval/common.hpp"
#include "bleval/ip.hpp"

namespace bleval {

class BudgetExhaustedError : public InputError {
 public:
  using InputError::InputError;
};

/// No usable answer from the provider. Whether budget was spent depends on
/// whether a response arrived at all; see CloudClient::lookup.
class TransportError : public InputError {
 public:
  using InputError::InputError;
};

enum class BudgetWindow : std::uint8_t { day, week };

struct RequestBudget {
  std::uint64_t limit = 0;
  BudgetWindow window = BudgetWindow::day;
};

struct ConsensusRule {
  enum class Kind : std::uint8_t { min_matches, accuracy_equals, classification_equals };
  Kind kind = Kind::min_matches;
  std::int64_t number = 0;
  std::string text;

  static ConsensusRule min_matches(std::int64_t n) { return {Kind::min_matches, n, {}}; }
  static ConsensusRule accuracy_equals(std::int64_t n) { return {Kind::accuracy_equals, n, {}}; }
  static ConsensusRule classification_equals(std::string s) { return {Kind::classification_equals, 0, std::move(s)}; }

  bool holds(const nlohmann::json& signal) const;
  std::string describe() const;
};

/// Declarative description of one reputation service. Field locations are
/// JSON pointers into the response body.
struct CloudProviderConfig {
  std::string provider_name;
  std::string base_url;                 // scheme://host[:port]
  std::string path_template = "/{ip}";  // `{ip}` is substituted
  std::string method = "GET";           // GET or POST
  std::string body_template;            // POST body, `{ip}` substituted
  std::string auth_env;                 // env var holding the API key; empty = no auth
  std::string auth_header = "Key";
  RequestBudget budget;
  ConsensusRule consensus_rule;
  std::string signal_field;             // raw signal fed to the consensus rule
  std::string listed_field;             // optional; defaults to the signal's truthiness

  void validate() const;
  static CloudProviderConfig from_json(const nlohmann::json& j);
  static CloudProviderConfig load(const std::filesystem::path& path);
};

struct CloudVerdict {
  IpAddress ip;
  std::string provider_name;
  bool listed = false;
  bool consensus = false;
  nlohmann::json raw_signal;
  std::int64_t queried_at = 0;
  bool from_cache = false;
};

/// Maps a response body to a verdict. Throws TransportError when the signal
/// field is missing.
CloudVerdict map_response(const CloudProviderConfig& cfg, const IpAddress& ip, const nlohmann::json& body,
                          std::int64_t now);

/// Append-only JSON-lines cache; the latest line for (provider, ip) wins.
class VerdictCache {
 public:
  explicit VerdictCache(std::filesystem::path path);
  std::optional<CloudVerdict> get(const std::string& provider, const IpAddress& ip,
                                  std::optional<std::int64_t> max_age_seconds, std::int64_t now) const;
  void put(const CloudVerdict& v);
  std::size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path path_;
  std::map<std::pair<std::string, IpAddress>, CloudVerdict> entries_;
};

/// Append-only record of spent requests keyed by (provider, window start).
class BudgetLedger {
 public:
  explicit BudgetLedger(std::filesystem::path path);
  std::uint64_t spent(const std::string& provider, Day window_start) const;
  void record(const std::string& provider, Day window_start, const IpAddress& ip, std::int64_t ts);

 private:
  std::filesystem::path path_;
  std::map<std::pair<std::string, Day>, std::uint64_t> spent_;
};

struct BatchSummary {
  std::vector<CloudVerdict> verdicts;  // in input order, served ones only
  std::uint64_t from_cache = 0;
  std::uint64_t from_network = 0;
  std::uint64_t unserved = 0;          // budget exhausted or transport failure
  std::uint64_t budget_spent = 0;      // requests that received a response
  std::vector<std::pair<IpAddress, std::string>> failures;
};

using EpochClock = std::function<std::int64_t()>;
std::int64_t system_epoch_seconds();

/// One provider's client. Lookups are serialized; separate providers can run
/// on separate threads. Cache and ledger live under `state_dir/cloud/`.
class CloudClient {
 public:
  CloudClient(CloudProviderConfig config, const std::filesystem::path& state_dir, EpochClock clock = system_epoch_seconds,
              std::optional<std::int64_t> max_age_seconds = std::nullopt);

  /// Cached verdicts cost nothing. Otherwise one request is spent if a
  /// response arrives; throws BudgetExhaustedError when the window's limit
  /// is already used and TransportError on network or decoding failure.
  CloudVerdict lookup(const IpAddress& ip);

  /// Processes in order; once the budget runs out only cache hits are served.
  BatchSummary batch_lookup(std::span<const IpAddress> ips);

  Day current_window_start() const;
  std::uint64_t spent_in_current_window() const;
  const CloudProviderConfig& config() const { return config_; }

 private:
  CloudVerdict lookup_locked(const IpAddress& ip);

  CloudProviderConfig config_;
  EpochClock clock_;
  std::optional<std::int64_t> max_age_;
  VerdictCache cache_;
  BudgetLedger ledger_;
  mutable std::mutex mu_;
};

inline constexpr std::string_view kVerdictCsvHeader = "ip,provider,listed,consensus,raw_signal,queried_at,from_cache";
std::string verdicts_csv(std::span<const CloudVerdict> verdicts);

}  // namespace bleval
