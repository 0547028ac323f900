#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bleval/blacklist.hpp"
#include "bleval/common.hpp"
#include "bleval/flow.hpp"
#include "bleval/ip.hpp"

namespace bleval {

using IpSet = std::set<IpAddress>;

enum class GroundTruthKind : std::uint8_t { scanner, alerted_high_score, log_attacker };
std::string_view to_string(GroundTruthKind k);
GroundTruthKind parse_ground_truth_kind(std::string_view s);

/// Malicious addresses observed on one network on one day.
struct GroundTruth {
  Day date;
  std::string network_name;
  GroundTruthKind kind = GroundTruthKind::scanner;
  IpSet ips;
};

/// A combined feed evaluated as the canonical union of its members.
struct UnionSpec {
  std::string name;
  std::vector<std::string> members;

  /// "A+B+C" -> {name "A+B+C", members A, B, C}
  static UnionSpec parse(std::string_view text);
};

struct MatchRow {
  std::string feed;
  Ratio rate;  // matched / total
  bool is_union = false;
};

struct MatchRateReport {
  Day date;
  std::string network_name;
  GroundTruthKind kind = GroundTruthKind::scanner;
  std::uint64_t total = 0;
  std::vector<MatchRow> rows;
};

/// Fraction of ground-truth addresses listed in each feed, plus one row per
/// requested union. Throws InputError if a feed is not from the
/// ground-truth date or a union names an unknown feed.
MatchRateReport match_rate(const GroundTruth& truth, std::span<const BlacklistSnapshot> feeds,
                           std::span<const UnionSpec> unions = {});

struct MatchSummaryRow {
  std::string feed;
  std::optional<double> mean_of_daily_rates;  // over days with a defined rate
  std::size_t days_defined = 0;
  Ratio pooled_rate;                          // sum matched / sum total
};

/// Multi-day roll-up of same-network, same-kind reports.
std::vector<MatchSummaryRow> summarize_match_rates(std::span<const MatchRateReport> daily);

struct DecayRow {
  int offset = 0;
  Day date;
  bool available = false;  // false when the fresh feed for `date` is missing
  Ratio daily;             // that day's feed
  Ratio stale;             // base-day feed
  std::int64_t delta_count = 0;  // stale matched - daily matched

  /// (stale - daily) as a fraction of the ground truth.
  std::optional<double> delta() const;
};

struct DecayReport {
  std::string feed_name;
  Day base_date;
  std::vector<DecayRow> rows;
};

/// Compares the base-day feed against each later day's fresh feed on that
/// day's ground truth. Offset 0 uses the base feed on both sides.
DecayReport decay(const BlacklistSnapshot& base_feed, const std::map<Day, BlacklistSnapshot>& fresh_feeds,
                  const std::map<Day, IpSet>& ground_truth_by_date);

/// Remote clients whose highest per-flow cyberscore is <= benign_score_max.
IpSet benign_remote_clients(const DailyFlowSet& day, std::uint64_t benign_score_max);

struct OverlapRow {
  std::string feed;
  std::uint64_t count = 0;
};

struct FalsePositiveReport {
  Day date;
  std::string network_name;
  std::uint64_t benign_score_max = 100;
  std::uint64_t benign_total = 0;
  std::vector<OverlapRow> rows;
};

FalsePositiveReport false_positive_overlap(const DailyFlowSet& day, std::span<const BlacklistSnapshot> feeds,
                                           std::uint64_t benign_score_max = 100);

/// Remote endpoints whose summed cyberscore over the day is strictly above score_min.
IpSet high_score_hosts(const DailyFlowSet& day, std::uint64_t score_min);

MatchRateReport high_score_coverage(const DailyFlowSet& day, std::span<const BlacklistSnapshot> feeds,
                                    std::uint64_t score_min = 5000, std::span<const UnionSpec> unions = {});

struct PropagationCurve {
  std::string source_network;
  std::string target_network;
  Day start;
  /// points[d]: share of day-0 source scanners seen in the target by day d.
  std::vector<Ratio> points;
};

/// Both maps must cover start .. start + horizon, where start is the first
/// source day.
PropagationCurve propagation(const std::map<Day, IpSet>& source, const std::map<Day, IpSet>& target, int horizon,
                             std::string source_name = {}, std::string target_name = {});

struct HistogramBucket {
  std::uint64_t lower = 0;                 // inclusive
  std::optional<std::uint64_t> upper;      // exclusive; open-ended when absent
  std::uint64_t groups = 0;
};

/// Distinct-address counts per /24 (v4) or /56 (v6) group.
struct AggregationHistogram {
  Family family = Family::v4;
  int group_prefix_length = 24;
  std::uint64_t groups = 0;
  std::uint64_t addresses = 0;
  std::vector<HistogramBucket> buckets;  // a partition: counts sum to `groups`
  std::vector<std::pair<std::uint64_t, std::uint64_t>> at_least;  // (bound, groups with size >= bound)
};

struct AggregationResult {
  AggregationHistogram v4;
  AggregationHistogram v6;
};

/// Groups addresses by network and buckets the group sizes. `bounds` must be
/// strictly ascending and >= 1; {8, 64} gives [1,8), [8,64), [64,inf).
AggregationResult aggregate_slash24(const IpSet& ips, std::vector<std::uint64_t> bounds = {8, 64});

/// Share of attackers that also appear among each network's remote addresses.
std::map<std::string, Ratio> cross_visit(const IpSet& attackers, const std::map<std::string, IpSet>& other_networks);

}  // namespace bleval
