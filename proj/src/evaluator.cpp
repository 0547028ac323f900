#include "bleval/evaluator.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

namespace bleval {

std::string_view to_string(GroundTruthKind k) {
  switch (k) {
    case GroundTruthKind::scanner: return "scanner";
    case GroundTruthKind::alerted_high_score: return "alerted_high_score";
    case GroundTruthKind::log_attacker: return "log_attacker";
  }
  return "scanner";
}

GroundTruthKind parse_ground_truth_kind(std::string_view s) {
  if (s == "scanner" || s == "scanners") return GroundTruthKind::scanner;
  if (s == "alerted_high_score" || s == "alerted") return GroundTruthKind::alerted_high_score;
  if (s == "log_attacker" || s == "log") return GroundTruthKind::log_attacker;
  throw InputError(fmt::format("unknown ground-truth kind '{}' (scanner, alerted, log)", s));
}

UnionSpec UnionSpec::parse(std::string_view text) {
  UnionSpec u;
  u.name = std::string(trim(text));
  for (const auto& m : split(u.name, '+')) {
    auto t = trim(m);
    if (t.empty()) throw InputError(fmt::format("union '{}' has an empty member", text));
    u.members.emplace_back(t);
  }
  if (u.members.size() < 2) throw InputError(fmt::format("union '{}' needs at least two members joined by '+'", text));
  return u;
}

namespace {

std::uint64_t count_listed(const IpSet& ips, const BlacklistSnapshot& feed) {
  return static_cast<std::uint64_t>(
      std::count_if(ips.begin(), ips.end(), [&](const IpAddress& a) { return feed.contains(a); }));
}

const BlacklistSnapshot& find_feed(std::span<const BlacklistSnapshot> feeds, const std::string& name) {
  for (const auto& f : feeds) {
    if (f.feed_name() == name) return f;
  }
  throw InputError(fmt::format("union member '{}' is not among the evaluated feeds", name));
}

}  // namespace

MatchRateReport match_rate(const GroundTruth& truth, std::span<const BlacklistSnapshot> feeds,
                           std::span<const UnionSpec> unions) {
  MatchRateReport r;
  r.date = truth.date;
  r.network_name = truth.network_name;
  r.kind = truth.kind;
  r.total = truth.ips.size();
  for (const auto& f : feeds) {
    if (f.date() != truth.date) {
      throw InputError(fmt::format("feed '{}' is from {} but the ground truth is from {}", f.feed_name(),
                                   f.date().to_string(), truth.date.to_string()));
    }
    r.rows.push_back({f.feed_name(), Ratio{count_listed(truth.ips, f), r.total}, false});
  }
  for (const auto& u : unions) {
    std::vector<BlacklistSnapshot> members;
    for (const auto& m : u.members) members.push_back(find_feed(feeds, m));
    auto combined = union_feed(members, u.name);
    r.rows.push_back({u.name, Ratio{count_listed(truth.ips, combined), r.total}, true});
  }
  return r;
}

std::vector<MatchSummaryRow> summarize_match_rates(std::span<const MatchRateReport> daily) {
  std::vector<MatchSummaryRow> out;
  std::vector<double> sums;
  for (const auto& rep : daily) {
    for (const auto& row : rep.rows) {
      auto it = std::find_if(out.begin(), out.end(), [&](const MatchSummaryRow& s) { return s.feed == row.feed; });
      if (it == out.end()) {
        out.push_back({row.feed, std::nullopt, 0, Ratio{}});
        sums.push_back(0.0);
        it = out.end() - 1;
      }
      auto idx = static_cast<std::size_t>(it - out.begin());
      it->pooled_rate.numerator += row.rate.numerator;
      it->pooled_rate.denominator += row.rate.denominator;
      if (auto v = row.rate.value()) {
        sums[idx] += *v;
        ++it->days_defined;
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].days_defined > 0) out[i].mean_of_daily_rates = sums[i] / static_cast<double>(out[i].days_defined);
  }
  return out;
}

std::optional<double> DecayRow::delta() const {
  if (!available || !daily.defined()) return std::nullopt;
  return static_cast<double>(delta_count) / static_cast<double>(daily.denominator);
}

DecayReport decay(const BlacklistSnapshot& base_feed, const std::map<Day, BlacklistSnapshot>& fresh_feeds,
                  const std::map<Day, IpSet>& ground_truth_by_date) {
  DecayReport rep;
  rep.feed_name = base_feed.feed_name();
  rep.base_date = base_feed.date();
  for (const auto& [date, truth] : ground_truth_by_date) {
    if (date < base_feed.date()) continue;
    DecayRow row;
    row.date = date;
    row.offset = date - base_feed.date();
    const std::uint64_t total = truth.size();
    row.stale = Ratio{count_listed(truth, base_feed), total};
    if (row.offset == 0) {
      row.available = true;
      row.daily = row.stale;
    } else if (auto it = fresh_feeds.find(date); it != fresh_feeds.end()) {
      row.available = true;
      row.daily = Ratio{count_listed(truth, it->second), total};
    } else {
      row.daily = Ratio{0, total};
    }
    if (row.available) {
      row.delta_count = static_cast<std::int64_t>(row.stale.numerator) - static_cast<std::int64_t>(row.daily.numerator);
    }
    rep.rows.push_back(row);
  }
  return rep;
}

IpSet benign_remote_clients(const DailyFlowSet& day, std::uint64_t benign_score_max) {
  std::unordered_map<IpAddress, std::uint64_t> max_score;
  for (const auto& f : day.flows()) {
    if (day.network().is_local(f.client_ip)) continue;
    auto [it, fresh] = max_score.try_emplace(f.client_ip, f.cyberscore);
    if (!fresh) it->second = std::max(it->second, f.cyberscore);
  }
  IpSet out;
  for (const auto& [ip, s] : max_score) {
    if (s <= benign_score_max) out.insert(ip);
  }
  return out;
}

FalsePositiveReport false_positive_overlap(const DailyFlowSet& day, std::span<const BlacklistSnapshot> feeds,
                                           std::uint64_t benign_score_max) {
  FalsePositiveReport rep;
  rep.date = day.date();
  rep.network_name = day.network_name();
  rep.benign_score_max = benign_score_max;
  const IpSet benign = benign_remote_clients(day, benign_score_max);
  rep.benign_total = benign.size();
  for (const auto& f : feeds) rep.rows.push_back({f.feed_name(), count_listed(benign, f)});
  return rep;
}

IpSet high_score_hosts(const DailyFlowSet& day, std::uint64_t score_min) {
  std::unordered_map<IpAddress, std::uint64_t> sum;
  for (const auto& f : day.flows()) {
    if (!day.network().is_local(f.client_ip)) sum[f.client_ip] += f.cyberscore;
    if (!day.network().is_local(f.server_ip)) sum[f.server_ip] += f.cyberscore;
  }
  IpSet out;
  for (const auto& [ip, s] : sum) {
    if (s > score_min) out.insert(ip);
  }
  return out;
}

MatchRateReport high_score_coverage(const DailyFlowSet& day, std::span<const BlacklistSnapshot> feeds,
                                    std::uint64_t score_min, std::span<const UnionSpec> unions) {
  GroundTruth t{day.date(), day.network_name(), GroundTruthKind::alerted_high_score, high_score_hosts(day, score_min)};
  return match_rate(t, feeds, unions);
}

PropagationCurve propagation(const std::map<Day, IpSet>& source, const std::map<Day, IpSet>& target, int horizon,
                             std::string source_name, std::string target_name) {
  if (horizon < 0) throw InputError("propagation horizon must be >= 0");
  if (source.empty()) throw InputError("propagation: no source days");
  PropagationCurve c;
  c.source_network = std::move(source_name);
  c.target_network = std::move(target_name);
  c.start = source.begin()->first;
  for (int d = 0; d <= horizon; ++d) {
    Day day = c.start + d;
    if (!source.contains(day) || !target.contains(day)) {
      throw InputError(fmt::format("propagation: no scanner set for {} (horizon {} from {})", day.to_string(), horizon,
                                   c.start.to_string()));
    }
  }
  const IpSet& seeds = source.at(c.start);
  IpSet seen;
  for (int d = 0; d <= horizon; ++d) {
    for (const auto& ip : target.at(c.start + d)) {
      if (seeds.contains(ip)) seen.insert(ip);
    }
    c.points.push_back(Ratio{seen.size(), seeds.size()});
  }
  return c;
}

namespace {

AggregationHistogram histogram_of(const std::map<IpAddress, std::uint64_t>& groups, Family family, int prefix_len,
                                  const std::vector<std::uint64_t>& bounds) {
  AggregationHistogram h;
  h.family = family;
  h.group_prefix_length = prefix_len;
  h.groups = groups.size();
  std::uint64_t lower = 1;
  for (auto b : bounds) {
    if (b > lower) h.buckets.push_back({lower, b, 0});
    lower = b;
  }
  h.buckets.push_back({lower, std::nullopt, 0});
  for (auto b : bounds) h.at_least.emplace_back(b, 0);

  for (const auto& [net, size] : groups) {
    h.addresses += size;
    for (auto& bucket : h.buckets) {
      if (size >= bucket.lower && (!bucket.upper || size < *bucket.upper)) {
        ++bucket.groups;
        break;
      }
    }
    for (auto& [b, n] : h.at_least) {
      if (size >= b) ++n;
    }
  }
  return h;
}

}  // namespace

AggregationResult aggregate_slash24(const IpSet& ips, std::vector<std::uint64_t> bounds) {
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (bounds[i] < 1 || (i > 0 && bounds[i] <= bounds[i - 1])) {
      throw InputError("aggregation bounds must be strictly ascending and >= 1");
    }
  }
  std::map<IpAddress, std::uint64_t> v4, v6;
  for (const auto& ip : ips) {
    if (ip.family() == Family::v4) {
      ++v4[ip.masked(24)];
    } else {
      ++v6[ip.masked(56)];
    }
  }
  return {histogram_of(v4, Family::v4, 24, bounds), histogram_of(v6, Family::v6, 56, bounds)};
}

std::map<std::string, Ratio> cross_visit(const IpSet& attackers, const std::map<std::string, IpSet>& other_networks) {
  std::map<std::string, Ratio> out;
  for (const auto& [name, remotes] : other_networks) {
    std::uint64_t hit = 0;
    for (const auto& a : attackers) {
      if (remotes.contains(a)) ++hit;
    }
    out[name] = Ratio{hit, attackers.size()};
  }
  return out;
}

}  // namespace bleval
