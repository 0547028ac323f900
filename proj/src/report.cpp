#include "bleval/report.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace bleval {

std::string TextTable::render(std::string_view title) const {
  std::vector<std::size_t> width(header_.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
  };
  widen(header_);
  for (const auto& r : rows_) widen(r);

  std::string rule = "+";
  for (auto w : width) rule += std::string(w + 2, '-') + "+";
  rule += '\n';

  auto line = [&](const std::vector<std::string>& row) {
    std::string out = "|";
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < row.size() ? row[i] : "";
      if (i == 0) {
        out += fmt::format(" {:<{}} |", cell, width[i]);
      } else {
        out += fmt::format(" {:>{}} |", cell, width[i]);
      }
    }
    return out + "\n";
  };

  std::string out;
  if (!title.empty()) out += fmt::format("{}\n", title);
  out += rule + line(header_) + rule;
  for (const auto& r : rows_) out += line(r);
  out += rule;
  return out;
}

std::string format_ratio_cell(const Ratio& r) {
  return fmt::format("{} ({}/{})", format_percent(r), r.numerator, r.denominator);
}

std::string feed_stats_csv(std::span<const FeedStatsRow> rows) {
  std::string out = "feed,date,entries,raw_lines,expanded_ips,churn_changed,churn_total,churn\n";
  for (const auto& r : rows) {
    const auto& c = r.stats.churn_vs_previous_day;
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.feed, r.date.to_string(), r.stats.entry_count,
                       r.stats.raw_line_count, r.stats.expanded_ips.str(), c ? std::to_string(c->numerator) : "",
                       c ? std::to_string(c->denominator) : "", c ? format_fraction(*c) : std::string(kUndefined));
  }
  return out;
}

std::string feed_stats_table(std::span<const FeedStatsRow> rows) {
  TextTable t({"Blacklist", "Date", "Entries", "Raw lines", "IPs", "Update rate"});
  for (const auto& r : rows) {
    const auto& c = r.stats.churn_vs_previous_day;
    t.add_row({r.feed, r.date.to_string(), std::to_string(r.stats.entry_count), std::to_string(r.stats.raw_line_count),
               r.stats.expanded_ips.str(), c ? format_ratio_cell(*c) : std::string(kUndefined)});
  }
  return t.render("Analysed IP blacklists");
}

std::string intersection_csv(const IntersectionMatrix& m) {
  std::string out = "date,feed,contained_in,count\n";
  for (std::size_t i = 0; i < m.feed_names.size(); ++i) {
    for (std::size_t j = 0; j < m.feed_names.size(); ++j) {
      if (i == j) continue;
      out += fmt::format("{},{},{},{}\n", m.date.to_string(), m.feed_names[i], m.feed_names[j], *m.cells[i][j]);
    }
  }
  return out;
}

std::string intersection_table(const IntersectionMatrix& m) {
  std::vector<std::string> header{"List name"};
  header.insert(header.end(), m.feed_names.begin(), m.feed_names.end());
  TextTable t(header);
  for (std::size_t i = 0; i < m.feed_names.size(); ++i) {
    std::vector<std::string> row{m.feed_names[i]};
    for (std::size_t j = 0; j < m.feed_names.size(); ++j) {
      row.push_back(m.cells[i][j] ? std::to_string(*m.cells[i][j]) : "-");
    }
    t.add_row(std::move(row));
  }
  return t.render(fmt::format("Blacklist entries intersection on {} (row entries contained in column list)",
                              m.date.to_string()));
}

std::string match_csv(std::span<const MatchRateReport> reports) {
  std::string out = "date,network,kind,feed,is_union,matched,total,rate\n";
  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      out += fmt::format("{},{},{},{},{},{},{},{}\n", rep.date.to_string(), rep.network_name, to_string(rep.kind),
                         row.feed, row.is_union ? 1 : 0, row.rate.numerator, row.rate.denominator,
                         format_fraction(row.rate));
    }
  }
  return out;
}

std::string match_table(std::span<const MatchRateReport> reports) {
  std::string out;
  for (const auto& rep : reports) {
    TextTable t({"Blacklist", "Match rate"});
    for (const auto& row : rep.rows) t.add_row({row.feed, format_ratio_cell(row.rate)});
    out += t.render(fmt::format("{} IPs match rate, {} on {} ({} addresses)", to_string(rep.kind), rep.network_name,
                                rep.date.to_string(), rep.total));
  }
  return out;
}

std::string match_summary_csv(std::string_view network, GroundTruthKind kind, std::span<const MatchSummaryRow> rows) {
  std::string out = "network,kind,feed,days_defined,mean_of_daily_rates,pooled_matched,pooled_total,pooled_rate\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", network, to_string(kind), r.feed, r.days_defined,
                       r.mean_of_daily_rates ? fmt::format("{:.6f}", *r.mean_of_daily_rates) : std::string(kUndefined),
                       r.pooled_rate.numerator, r.pooled_rate.denominator, format_fraction(r.pooled_rate));
  }
  return out;
}

std::string match_summary_table(std::string_view network, GroundTruthKind kind, std::span<const MatchSummaryRow> rows) {
  TextTable t({"Blacklist", "Mean of daily rates", "Pooled rate"});
  for (const auto& r : rows) {
    t.add_row({r.feed, format_percent(r.mean_of_daily_rates), format_ratio_cell(r.pooled_rate)});
  }
  return t.render(fmt::format("{} IPs match rate with file-based blacklists, {} (multi-day)", to_string(kind), network));
}

std::string decay_csv(const DecayReport& r) {
  std::string out = "feed,base_date,offset,date,available,total,daily_matched,stale_matched,daily_rate,stale_rate,delta\n";
  for (const auto& row : r.rows) {
    auto d = row.delta();
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.feed_name, r.base_date.to_string(), row.offset,
                       row.date.to_string(), row.available ? 1 : 0, row.stale.denominator,
                       row.available ? std::to_string(row.daily.numerator) : "", row.stale.numerator,
                       row.available ? format_fraction(row.daily) : "unavailable", format_fraction(row.stale),
                       d ? fmt::format("{:.6f}", *d) : (row.available ? std::string(kUndefined) : "unavailable"));
  }
  return out;
}

std::string decay_table(const DecayReport& r) {
  std::vector<std::string> header{"Match rate"};
  std::vector<std::string> daily{"Daily"}, stale{"Stale"}, delta{"Delta"};
  for (const auto& row : r.rows) {
    header.push_back(row.date.to_string());
    daily.push_back(row.available ? format_ratio_cell(row.daily) : "unavailable");
    stale.push_back(format_ratio_cell(row.stale));
    delta.push_back(row.available ? format_percent(row.delta()) : "unavailable");
  }
  TextTable t(header);
  t.add_row(daily);
  t.add_row(stale);
  t.add_row(delta);
  return t.render(fmt::format("{} matches using the {} blacklist", r.feed_name, r.base_date.to_string()));
}

std::string false_positive_csv(std::span<const FalsePositiveReport> reports) {
  std::string out = "date,network,benign_score_max,benign_total,feed,overlap\n";
  for (const auto& rep : reports) {
    for (const auto& row : rep.rows) {
      out += fmt::format("{},{},{},{},{},{}\n", rep.date.to_string(), rep.network_name, rep.benign_score_max,
                         rep.benign_total, row.feed, row.count);
    }
  }
  return out;
}

std::string false_positive_table(std::span<const FalsePositiveReport> reports) {
  std::string out;
  for (const auto& rep : reports) {
    TextTable t({"Blacklist", "Listed benign clients"});
    for (const auto& row : rep.rows) t.add_row({row.feed, fmt::format("{}/{}", row.count, rep.benign_total)});
    out += t.render(fmt::format("False-positive overlap, {} on {} (max cyberscore <= {})", rep.network_name,
                                rep.date.to_string(), rep.benign_score_max));
  }
  return out;
}

std::string propagation_csv(const PropagationCurve& c) {
  std::string out = "source,target,start,offset,seen,source_total,fraction\n";
  for (std::size_t d = 0; d < c.points.size(); ++d) {
    out += fmt::format("{},{},{},{},{},{},{}\n", c.source_network, c.target_network, c.start.to_string(), d,
                       c.points[d].numerator, c.points[d].denominator, format_fraction(c.points[d]));
  }
  return out;
}

std::string propagation_table(const PropagationCurve& c) {
  TextTable t({"Day offset", "Seen in target"});
  for (std::size_t d = 0; d < c.points.size(); ++d) t.add_row({std::to_string(d), format_ratio_cell(c.points[d])});
  return t.render(fmt::format("Scanners propagation {} -> {} from {}", c.source_network, c.target_network,
                              c.start.to_string()));
}

namespace {

std::string bucket_label(const HistogramBucket& b) {
  if (!b.upper) return fmt::format(">={}", b.lower);
  return fmt::format("{}..{}", b.lower, *b.upper - 1);
}

}  // namespace

std::string aggregation_csv(const AggregationResult& r) {
  std::string out = "family,group_prefix,bucket,groups\n";
  for (const auto* h : {&r.v4, &r.v6}) {
    const char* fam = h->family == Family::v4 ? "v4" : "v6";
    for (const auto& b : h->buckets) {
      out += fmt::format("{},/{},{},{}\n", fam, h->group_prefix_length, bucket_label(b), b.groups);
    }
    for (const auto& [bound, n] : h->at_least) {
      out += fmt::format("{},/{},at_least_{},{}\n", fam, h->group_prefix_length, bound, n);
    }
    out += fmt::format("{},/{},total,{}\n", fam, h->group_prefix_length, h->groups);
  }
  return out;
}

std::string aggregation_table(const AggregationResult& r) {
  std::string out;
  for (const auto* h : {&r.v4, &r.v6}) {
    TextTable t({"Addresses per network", "Networks"});
    for (const auto& b : h->buckets) t.add_row({bucket_label(b), std::to_string(b.groups)});
    for (const auto& [bound, n] : h->at_least) t.add_row({fmt::format("at least {}", bound), std::to_string(n)});
    t.add_row({"total", std::to_string(h->groups)});
    out += t.render(fmt::format("{} addresses grouped by /{} ({} addresses)", h->family == Family::v4 ? "IPv4" : "IPv6",
                                h->group_prefix_length, h->addresses));
  }
  return out;
}

std::string cross_visit_csv(std::string_view label, const std::map<std::string, Ratio>& visits) {
  std::string out = "attackers,network,visited,attackers_total,fraction\n";
  for (const auto& [net, r] : visits) {
    out += fmt::format("{},{},{},{},{}\n", label, net, r.numerator, r.denominator, format_fraction(r));
  }
  return out;
}

std::string cross_visit_table(std::string_view label, std::uint64_t attackers, Ratio in_blacklist,
                              const std::map<std::string, Ratio>& visits) {
  TextTable t({"Attackers", std::string(label)});
  t.add_row({"Total number of attacks", std::to_string(attackers)});
  t.add_row({"In blacklist", format_ratio_cell(in_blacklist)});
  for (const auto& [net, r] : visits) t.add_row({fmt::format("Also visited {}", net), format_ratio_cell(r)});
  return t.render("Server monitoring data analysis");
}

}  // namespace bleval
