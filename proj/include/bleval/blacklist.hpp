#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bleval/common.hpp"
#include "bleval/prefix_index.hpp"

namespace bleval {

struct ParseDiagnostic {
  std::size_t line_number = 0;  // 1-based
  std::string content;
  std::string reason;
};

class EmptySnapshotError : public InputError {
 public:
  using InputError::InputError;
};

/// One feed on one day. Immutable once built.
class BlacklistSnapshot {
 public:
  BlacklistSnapshot(std::string feed_name, Day date, std::vector<IpPrefix> entries, std::size_t raw_line_count = 0,
                    std::size_t comment_line_count = 0, std::vector<ParseDiagnostic> diagnostics = {});

  const std::string& feed_name() const { return feed_name_; }
  Day date() const { return date_; }
  /// Distinct canonical prefixes, first-seen order.
  const std::vector<IpPrefix>& entries() const { return index_->entries(); }
  std::size_t entry_count() const { return index_->entry_count(); }
  /// Valid entry lines in the source, duplicates included.
  std::size_t raw_line_count() const { return raw_line_count_; }
  std::size_t comment_line_count() const { return comment_line_count_; }
  const std::vector<ParseDiagnostic>& diagnostics() const { return diagnostics_; }
  const PrefixIndex& index() const { return *index_; }

  bool contains(const IpAddress& a) const { return index_->contains(a); }

 private:
  std::string feed_name_;
  Day date_;
  std::shared_ptr<const PrefixIndex> index_;
  std::size_t raw_line_count_;
  std::size_t comment_line_count_;
  std::vector<ParseDiagnostic> diagnostics_;
};

/// Parses the plain-text ACL format: one address or CIDR per line, `#` and
/// `;` start comments, blank lines ignored, LF or CRLF. Bad lines become
/// diagnostics; zero valid entries throws EmptySnapshotError.
BlacklistSnapshot parse_blacklist(std::string_view text, std::string feed_name, Day date);

/// Canonical text form; parse_blacklist(serialize(s)) reproduces the entry set.
std::string serialize_blacklist(const BlacklistSnapshot& s);

/// |prev △ cur| / (|prev| + |cur|) over canonical entries.
/// Throws InputError on feed mismatch or non-consecutive dates.
Ratio churn(const BlacklistSnapshot& prev, const BlacklistSnapshot& cur);

struct FeedStats {
  std::size_t entry_count = 0;
  std::size_t raw_line_count = 0;
  BigCount expanded_ips = 0;
  std::optional<Ratio> churn_vs_previous_day;  // absent without a previous-day snapshot
};

FeedStats feed_stats(const BlacklistSnapshot& cur, const BlacklistSnapshot* previous_day);

/// cells[i][j] = containment_count(feed i, feed j); the diagonal is empty.
struct IntersectionMatrix {
  Day date;
  std::vector<std::string> feed_names;
  std::vector<std::vector<std::optional<std::size_t>>> cells;
};

IntersectionMatrix intersection_matrix(std::span<const BlacklistSnapshot> snapshots);

/// Canonical union of several same-day feeds under a new name.
BlacklistSnapshot union_feed(std::span<const BlacklistSnapshot> snapshots, std::string name);

/// Directory of dated snapshots:
///   <root>/feeds/<name>/<YYYY-MM-DD>.txt   canonical entries
///   <root>/feeds/<name>/<YYYY-MM-DD>.meta  key=value stats
class BlacklistStore {
 public:
  explicit BlacklistStore(std::filesystem::path root) : root_(std::move(root)) {}

  /// Writes the snapshot and its stats sidecar. Churn is computed against
  /// the previous day's stored snapshot when one exists.
  FeedStats save(const BlacklistSnapshot& s) const;

  BlacklistSnapshot load(const std::string& feed, Day date) const;
  bool has(const std::string& feed, Day date) const;

  std::vector<std::string> feeds() const;
  std::vector<Day> dates(const std::string& feed) const;

  std::filesystem::path snapshot_path(const std::string& feed, Day date) const;
  std::filesystem::path meta_path(const std::string& feed, Day date) const;

 private:
  std::filesystem::path root_;
};

}  // namespace bleval
