#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bleval/blacklist.hpp"
#include "bleval/evaluator.hpp"
#include "bleval/flow.hpp"
#include "bleval/log_sentinel.hpp"
#include "bleval/scan_detect.hpp"

namespace bleval {

/// On-disk project layout, every path relative to the root:
///
///   networks/<net>.conf            network configuration
///   flows/<net>/<date>.csv         daily flow records
///   logs/<net>/<date>.log          server log excerpts
///   ports/<net>/<date>.csv         closed/open port contact events
///   feeds/<feed>/<date>.txt|.meta  blacklist snapshots and stats
///   patterns.conf                  log pattern pack (optional)
///   detections/<net>/<date>.csv    scanner verdicts written by `detect`
///   events/<net>/<date>.csv        attack events written by `detect`
///   cloud/                         reputation cache and budget ledger
///   out/<command>/                 CSV and table output
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path network_path(const std::string& net) const;
  std::filesystem::path flows_path(const std::string& net, Day d) const;
  std::filesystem::path logs_path(const std::string& net, Day d) const;
  std::filesystem::path ports_path(const std::string& net, Day d) const;
  std::filesystem::path detections_path(const std::string& net, Day d) const;
  std::filesystem::path events_path(const std::string& net, Day d) const;
  std::filesystem::path patterns_path() const { return root_ / "patterns.conf"; }
  std::filesystem::path out_dir(const std::string& command) const { return root_ / "out" / command; }

  std::vector<std::string> networks() const;
  NetworkConfig network(const std::string& net) const;
  std::vector<Day> flow_days(const std::string& net) const;
  DailyFlowSet flows(const std::string& net, Day d) const;
  std::vector<ScannerVerdict> detections(const std::string& net, Day d) const;
  bool has_events(const std::string& net, Day d) const;
  std::vector<AttackEvent> events(const std::string& net, Day d) const;
  std::vector<LogPattern> patterns() const;

  const BlacklistStore& feeds() const { return feeds_; }
  BlacklistSnapshot feed(const std::string& name, Day d) const;
  /// All stored feed names when `requested` is empty.
  std::vector<std::string> feed_names(const std::vector<std::string>& requested) const;

  IpSet ground_truth(const std::string& net, Day d, GroundTruthKind kind, std::uint64_t score_min) const;

 private:
  std::filesystem::path root_;
  BlacklistStore feeds_;
};

/// Writes through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

struct DateRange {
  Day from;
  Day to;

  /// Throws InputError when `to` precedes `from`.
  std::vector<Day> days() const;
};

/// Ingests a fixture or export tree laid out like the store (feeds may sit
/// under incoming/feeds/). Returns a human-readable summary.
std::string ingest_tree(const Store& store, const std::filesystem::path& source);
std::string ingest_network(const Store& store, const std::filesystem::path& file);
std::string ingest_feed(const Store& store, const std::string& feed, Day d, const std::filesystem::path& file);
std::string ingest_flows(const Store& store, const std::string& net, Day d, const std::filesystem::path& file);
std::string ingest_logs(const Store& store, const std::string& net, Day d, const std::filesystem::path& file);
std::string ingest_ports(const Store& store, const std::string& net, Day d, const std::filesystem::path& file);
std::string ingest_patterns(const Store& store, const std::filesystem::path& file);

struct DetectOptions {
  std::vector<std::string> networks;  // empty: every network
  std::optional<DateRange> range;     // empty: every day with flows
  std::optional<std::uint32_t> threshold;
  std::optional<std::set<std::uint16_t>> exclude_ports;
  std::uint64_t failure_threshold = 3;
};
std::string run_detect(const Store& store, const DetectOptions& o);

struct MatchOptions {
  std::string network;
  DateRange range;
  std::vector<std::string> feeds;
  std::vector<std::string> unions;
  GroundTruthKind kind = GroundTruthKind::scanner;
  std::uint64_t score_min = 5000;
};
std::string run_match(const Store& store, const MatchOptions& o);

std::string run_intersect(const Store& store, Day date, const std::vector<std::string>& feeds);

struct DecayOptions {
  std::string network;
  std::vector<std::string> feeds;
  Day base;
  Day to;
  GroundTruthKind kind = GroundTruthKind::scanner;
  std::uint64_t score_min = 5000;
};
std::string run_decay(const Store& store, const DecayOptions& o);

std::string run_propagate(const Store& store, const std::string& source, const std::string& target, DateRange range);

struct FpOptions {
  std::string network;
  DateRange range;
  std::vector<std::string> feeds;
  std::uint64_t benign_score_max = 100;
};
std::string run_fp_check(const Store& store, const FpOptions& o);

struct CloudOptions {
  std::vector<std::filesystem::path> providers;
  std::string network;
  Day date;
  GroundTruthKind kind = GroundTruthKind::scanner;
  std::optional<std::int64_t> max_age_seconds;
  std::uint64_t score_min = 5000;
};
std::string run_cloud(const Store& store, const CloudOptions& o);

struct ReportOptions {
  DateRange range;
  std::vector<std::string> feeds;
  std::vector<std::string> unions;
  std::uint64_t score_min = 5000;
  std::uint64_t benign_score_max = 100;
};
std::string run_report(const Store& store, const ReportOptions& o);

}  // namespace bleval
