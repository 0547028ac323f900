#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "bleval/blacklist.hpp"
#include "bleval/evaluator.hpp"

namespace bleval {

/// Left-aligned first column, right-aligned remaining columns, `|` borders.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  std::string render(std::string_view title = {}) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// "50.0% (30/60)" or "undefined (0/0)".
std::string format_ratio_cell(const Ratio& r);

struct FeedStatsRow {
  std::string feed;
  Day date;
  FeedStats stats;
};

std::string feed_stats_csv(std::span<const FeedStatsRow> rows);
std::string feed_stats_table(std::span<const FeedStatsRow> rows);

std::string intersection_csv(const IntersectionMatrix& m);
std::string intersection_table(const IntersectionMatrix& m);

std::string match_csv(std::span<const MatchRateReport> reports);
std::string match_table(std::span<const MatchRateReport> reports);

std::string match_summary_csv(std::string_view network, GroundTruthKind kind, std::span<const MatchSummaryRow> rows);
std::string match_summary_table(std::string_view network, GroundTruthKind kind, std::span<const MatchSummaryRow> rows);

std::string decay_csv(const DecayReport& r);
std::string decay_table(const DecayReport& r);

std::string false_positive_csv(std::span<const FalsePositiveReport> reports);
std::string false_positive_table(std::span<const FalsePositiveReport> reports);

std::string propagation_csv(const PropagationCurve& c);
std::string propagation_table(const PropagationCurve& c);

std::string aggregation_csv(const AggregationResult& r);
std::string aggregation_table(const AggregationResult& r);

std::string cross_visit_csv(std::string_view label, const std::map<std::string, Ratio>& visits);
std::string cross_visit_table(std::string_view label, std::uint64_t attackers, Ratio in_blacklist,
                              const std::map<std::string, Ratio>& visits);

}  // namespace bleval
