#include <gtest/gtest.h>

#include <algorithm>

#include "bleval/evaluator.hpp"
#include "support.hpp"

using namespace bleval;
using namespace bleval::test;

namespace {

const Day kDay = Day::parse("2024-03-04");
const std::int64_t kT0 = kDay.begin_epoch();

IpAddress attacker(std::uint32_t i) { return IpAddress::v4((45u << 24) + i); }

BlacklistSnapshot feed_of(const std::string& name, const std::vector<IpAddress>& ips, Day d = kDay,
                          std::vector<IpPrefix> extra = {}) {
  for (const auto& a : ips) extra.push_back(IpPrefix::host(a));
  if (extra.empty()) extra.push_back(pfx("192.0.2.1"));
  return BlacklistSnapshot(name, d, extra);
}

GroundTruth truth_of(std::uint32_t n, Day d = kDay) {
  GroundTruth t{d, "lab", GroundTruthKind::scanner, {}};
  for (std::uint32_t i = 0; i < n; ++i) t.ips.insert(attacker(i));
  return t;
}

std::vector<IpAddress> range(std::uint32_t from, std::uint32_t to) {
  std::vector<IpAddress> v;
  for (auto i = from; i < to; ++i) v.push_back(attacker(i));
  return v;
}

DailyFlowSet flows_of(const std::vector<FlowRecord>& v) {
  DailyFlowSet day(std::make_shared<const NetworkView>(test_network()), kDay);
  for (const auto& f : v) day.add(f);
  return day;
}

}  // namespace

TEST(UnionSpec, Parses) {
  auto u = UnionSpec::parse("FeedA+FeedB");
  EXPECT_EQ(u.name, "FeedA+FeedB");
  EXPECT_EQ(u.members, (std::vector<std::string>{"FeedA", "FeedB"}));
  EXPECT_THROW(UnionSpec::parse("FeedA"), InputError);
  EXPECT_THROW(UnionSpec::parse("FeedA+"), InputError);
}

TEST(MatchRate, CountsListedGroundTruth) {
  auto truth = truth_of(60);
  std::vector<BlacklistSnapshot> feeds{feed_of("A", range(0, 30)), feed_of("B", range(25, 34)),
                                       feed_of("C", {}, kDay, {pfx("46.0.0.0/8")})};
  std::vector<UnionSpec> unions{UnionSpec::parse("A+B")};
  auto rep = match_rate(truth, feeds, unions);
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.total, 60u);
  EXPECT_EQ(rep.rows[0].rate, (Ratio{30, 60}));
  EXPECT_EQ(rep.rows[1].rate, (Ratio{9, 60}));
  EXPECT_EQ(rep.rows[2].rate, (Ratio{0, 60}));
  EXPECT_EQ(rep.rows[3].rate, (Ratio{34, 60}));
  EXPECT_TRUE(rep.rows[3].is_union);
}

TEST(MatchRate, PrefixEntriesMatchCoveredAddresses) {
  auto truth = truth_of(10);
  std::vector<BlacklistSnapshot> feeds{feed_of("A", {}, kDay, {pfx("45.0.0.0/29")})};
  EXPECT_EQ(match_rate(truth, feeds).rows[0].rate, (Ratio{8, 10}));
}

TEST(MatchRate, EmptyTruthIsUndefined) {
  GroundTruth t{kDay, "lab", GroundTruthKind::scanner, {}};
  std::vector<BlacklistSnapshot> feeds{feed_of("A", range(0, 3))};
  auto rep = match_rate(t, feeds);
  EXPECT_FALSE(rep.rows[0].rate.defined());
  EXPECT_EQ(format_percent(rep.rows[0].rate), "undefined");
}

TEST(MatchRate, RejectsWrongDateAndUnknownUnionMember) {
  auto truth = truth_of(5);
  std::vector<BlacklistSnapshot> wrong{feed_of("A", range(0, 3), kDay + 1)};
  EXPECT_THROW(match_rate(truth, wrong), InputError);
  std::vector<BlacklistSnapshot> feeds{feed_of("A", range(0, 3))};
  std::vector<UnionSpec> unions{UnionSpec::parse("A+Z")};
  EXPECT_THROW(match_rate(truth, feeds, unions), InputError);
}

TEST(UnionDominance, HoldsOnRandomFixtures) {
  std::mt19937_64 g(61);
  for (int round = 0; round < 100; ++round) {
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(g() % 80);
    auto truth = truth_of(n);
    std::vector<BlacklistSnapshot> feeds;
    std::vector<std::set<IpAddress>> listed;
    for (int f = 0; f < 3; ++f) {
      std::vector<IpAddress> ips;
      for (std::uint32_t i = 0; i < n + 20; ++i) {
        if (g() % 3 == 0) ips.push_back(attacker(i));
      }
      feeds.push_back(feed_of(std::string(1, static_cast<char>('A' + f)), ips));
      listed.emplace_back(ips.begin(), ips.end());
    }
    std::vector<UnionSpec> unions{UnionSpec::parse("A+B+C")};
    auto rep = match_rate(truth, feeds, unions);
    const auto& u = rep.rows.back().rate;
    std::uint64_t best = 0;
    for (int f = 0; f < 3; ++f) {
      EXPECT_GE(u.numerator, rep.rows[static_cast<std::size_t>(f)].rate.numerator);
      best = std::max(best, rep.rows[static_cast<std::size_t>(f)].rate.numerator);
    }
    std::set<IpAddress> any;
    for (const auto& a : truth.ips) {
      for (const auto& s : listed) {
        if (s.contains(a)) any.insert(a);
      }
    }
    EXPECT_EQ(u.numerator, any.size());
    EXPECT_EQ(u.numerator > best, any.size() > best);
  }
}

TEST(Summary, MeanOfDailyAndPooled) {
  std::vector<MatchRateReport> days;
  for (int d = 0; d < 3; ++d) {
    auto truth = truth_of(d == 2 ? 0 : 10 * (d + 1), kDay + d);
    std::vector<BlacklistSnapshot> feeds{feed_of("A", range(0, 5), kDay + d)};
    days.push_back(match_rate(truth, feeds));
  }
  auto rows = summarize_match_rates(days);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].days_defined, 2u);
  EXPECT_DOUBLE_EQ(*rows[0].mean_of_daily_rates, (0.5 + 0.25) / 2);
  EXPECT_EQ(rows[0].pooled_rate, (Ratio{10, 30}));
}

TEST(Decay, OffsetZeroIsZeroAndDeltaIsStaleMinusDaily) {
  auto base = feed_of("A", range(0, 30));
  std::map<Day, BlacklistSnapshot> fresh;
  std::map<Day, IpSet> gt;
  gt[kDay] = truth_of(60).ips;
  for (int d = 1; d < 4; ++d) {
    // day d: scanners d*10 .. d*10+59, fresh feed lists half of them
    IpSet t;
    for (auto& a : range(d * 10, d * 10 + 60)) t.insert(a);
    gt[kDay + d] = t;
    fresh.emplace(kDay + d, feed_of("A", range(d * 10, d * 10 + 30), kDay + d));
  }
  auto rep = decay(base, fresh, gt);
  ASSERT_EQ(rep.rows.size(), 4u);
  EXPECT_EQ(rep.rows[0].delta_count, 0);
  EXPECT_EQ(*rep.rows[0].delta(), 0.0);
  for (int d = 1; d < 4; ++d) {
    const auto& r = rep.rows[static_cast<std::size_t>(d)];
    EXPECT_EQ(r.offset, d);
    EXPECT_EQ(r.stale, (Ratio{static_cast<std::uint64_t>(30 - d * 10), 60}));
    EXPECT_EQ(r.daily, (Ratio{30, 60}));
    EXPECT_EQ(r.delta_count, -d * 10);
  }
}

TEST(Decay, MissingFreshFeedIsUnavailable) {
  auto base = feed_of("A", range(0, 5));
  std::map<Day, IpSet> gt{{kDay, truth_of(10).ips}, {kDay + 1, truth_of(10).ips}};
  auto rep = decay(base, {}, gt);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_TRUE(rep.rows[0].available);
  EXPECT_FALSE(rep.rows[1].available);
  EXPECT_FALSE(rep.rows[1].delta());
}

TEST(FalsePositive, BenignJoin) {
  std::vector<FlowRecord> v;
  for (std::uint32_t i = 0; i < 20; ++i) {
    v.push_back(probe(kT0 + i, v4(150, 0, 0, i), ip("10.0.0.1"), 443, Proto::tcp, i * 10));
  }
  v.push_back(probe(kT0, v4(150, 0, 0, 5), ip("10.0.0.2"), 443, Proto::tcp, 101));
  auto day = flows_of(v);
  auto benign = benign_remote_clients(day, 100);
  // scores 0..100 step 10 are benign (i <= 10) except .5 whose max became 101
  EXPECT_EQ(benign.size(), 10u);
  EXPECT_FALSE(benign.contains(v4(150, 0, 0, 5)));
  EXPECT_TRUE(benign.contains(v4(150, 0, 0, 10)));
  EXPECT_FALSE(benign.contains(v4(150, 0, 0, 11)));

  std::vector<BlacklistSnapshot> clean{feed_of("A", range(0, 50)), feed_of("B", {v4(150, 0, 0, 5)})};
  auto rep = false_positive_overlap(day, clean, 100);
  EXPECT_EQ(rep.benign_total, 10u);
  EXPECT_EQ(rep.rows[0].count, 0u);
  EXPECT_EQ(rep.rows[1].count, 0u);

  std::vector<BlacklistSnapshot> planted{feed_of("A", range(0, 50)), feed_of("B", {v4(150, 0, 0, 3)})};
  rep = false_positive_overlap(day, planted, 100);
  EXPECT_EQ(rep.rows[0].count, 0u);
  EXPECT_EQ(rep.rows[1].count, 1u);
}

TEST(HighScore, StrictlyAboveThreshold) {
  std::vector<FlowRecord> v{probe(kT0, v4(45, 0, 0, 1), ip("10.0.0.1"), 22, Proto::tcp, 2500),
                            probe(kT0 + 1, v4(45, 0, 0, 1), ip("10.0.0.2"), 22, Proto::tcp, 2500),
                            probe(kT0, v4(45, 0, 0, 2), ip("10.0.0.1"), 22, Proto::tcp, 5001),
                            probe(kT0, ip("10.0.0.9"), v4(45, 0, 0, 3), 22, Proto::tcp, 9000)};
  auto day = flows_of(v);
  auto hs = high_score_hosts(day, 5000);
  EXPECT_EQ(hs, (IpSet{v4(45, 0, 0, 2), v4(45, 0, 0, 3)}));
  std::vector<BlacklistSnapshot> feeds{feed_of("A", {v4(45, 0, 0, 2)})};
  auto rep = high_score_coverage(day, feeds, 5000);
  EXPECT_EQ(rep.kind, GroundTruthKind::alerted_high_score);
  EXPECT_EQ(rep.rows[0].rate, (Ratio{1, 2}));
}

TEST(Propagation, CumulativeShareOfDayZeroSeeds) {
  std::map<Day, IpSet> src, dst;
  for (int d = 0; d < 4; ++d) {
    src[kDay + d] = {};
    dst[kDay + d] = {};
  }
  for (std::uint32_t i = 0; i < 30; ++i) src[kDay].insert(attacker(i));
  for (std::uint32_t i = 0; i < 20; ++i) dst[kDay + 1].insert(attacker(i));
  for (std::uint32_t i = 15; i < 25; ++i) dst[kDay + 2].insert(attacker(i));
  dst[kDay + 3].insert(attacker(999));
  auto c = propagation(src, dst, 3, "S", "T");
  ASSERT_EQ(c.points.size(), 4u);
  EXPECT_EQ(c.points[0], (Ratio{0, 30}));
  EXPECT_EQ(c.points[1], (Ratio{20, 30}));
  EXPECT_EQ(format_percent(c.points[1]), "66.7%");
  EXPECT_EQ(c.points[2], (Ratio{25, 30}));
  EXPECT_EQ(c.points[3], (Ratio{25, 30}));
}

TEST(Propagation, MissingDayIsAnError) {
  std::map<Day, IpSet> src{{kDay, {attacker(1)}}}, dst{{kDay, {}}};
  EXPECT_THROW(propagation(src, dst, 1), InputError);
  EXPECT_NO_THROW(propagation(src, dst, 0));
}

TEST(PropagationProperty, NonDecreasing) {
  std::mt19937_64 g(62);
  for (int round = 0; round < 30; ++round) {
    std::map<Day, IpSet> src, dst;
    for (int d = 0; d < 6; ++d) {
      for (int i = 0; i < 40; ++i) {
        if (g() % 2) src[kDay + d].insert(attacker(static_cast<std::uint32_t>(g() % 60)));
        if (g() % 2) dst[kDay + d].insert(attacker(static_cast<std::uint32_t>(g() % 60)));
      }
      src[kDay + d];
      dst[kDay + d];
    }
    auto c = propagation(src, dst, 5);
    for (std::size_t i = 1; i < c.points.size(); ++i) EXPECT_GE(c.points[i].numerator, c.points[i - 1].numerator);
  }
}

TEST(Aggregation, BucketsPartitionGroups) {
  IpSet ips;
  for (std::uint32_t i = 0; i < 3; ++i) ips.insert(v4(45, 0, 1, i));     // group of 3
  for (std::uint32_t i = 0; i < 8; ++i) ips.insert(v4(45, 0, 2, i));     // group of 8
  for (std::uint32_t i = 0; i < 70; ++i) ips.insert(v4(45, 0, 3, i));    // group of 70
  ips.insert(ip("2001:db8:0:1::1"));
  ips.insert(ip("2001:db8:0:2::1"));
  auto r = aggregate_slash24(ips);
  EXPECT_EQ(r.v4.groups, 3u);
  EXPECT_EQ(r.v4.addresses, 81u);
  ASSERT_EQ(r.v4.buckets.size(), 3u);
  EXPECT_EQ(r.v4.buckets[0].groups, 1u);
  EXPECT_EQ(r.v4.buckets[1].groups, 1u);
  EXPECT_EQ(r.v4.buckets[2].groups, 1u);
  EXPECT_FALSE(r.v4.buckets[2].upper);
  EXPECT_EQ(r.v4.at_least, (std::vector<std::pair<std::uint64_t, std::uint64_t>>{{8, 2}, {64, 1}}));
  // both v6 addresses share a /56
  EXPECT_EQ(r.v6.groups, 1u);
  EXPECT_EQ(r.v6.group_prefix_length, 56);
  EXPECT_THROW(aggregate_slash24(ips, {8, 8}), InputError);
  EXPECT_THROW(aggregate_slash24(ips, {0}), InputError);
}

TEST(AggregationProperty, MatchesMapOracle) {
  std::mt19937_64 g(63);
  for (int round = 0; round < 20; ++round) {
    IpSet ips;
    for (int i = 0; i < 500; ++i) {
      ips.insert(v4(45, 0, static_cast<std::uint32_t>(g() % 40), static_cast<std::uint32_t>(g() % (1 + g() % 120))));
    }
    std::map<std::uint32_t, std::uint64_t> per;
    for (const auto& a : ips) ++per[a.v4_value() >> 8];
    std::uint64_t small = 0, mid = 0, big = 0;
    for (const auto& [k, n] : per) (n < 8 ? small : n < 64 ? mid : big)++;
    auto r = aggregate_slash24(ips);
    EXPECT_EQ(r.v4.groups, per.size());
    EXPECT_EQ(r.v4.buckets[0].groups, small);
    EXPECT_EQ(r.v4.buckets[1].groups, mid);
    EXPECT_EQ(r.v4.buckets[2].groups, big);
  }
}

TEST(CrossVisit, SharePerNetwork) {
  IpSet attackers{attacker(1), attacker(2), attacker(3), attacker(4)};
  std::map<std::string, IpSet> others{{"B", {attacker(1), attacker(9)}}, {"C", {}}};
  auto r = cross_visit(attackers, others);
  EXPECT_EQ(r.at("B"), (Ratio{1, 4}));
  EXPECT_EQ(r.at("C"), (Ratio{0, 4}));
  EXPECT_FALSE(cross_visit({}, others).at("B").defined());
}

TEST(GroundTruthKind, NamesRoundTrip) {
  for (auto k : {GroundTruthKind::scanner, GroundTruthKind::alerted_high_score, GroundTruthKind::log_attacker}) {
    EXPECT_EQ(parse_ground_truth_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_ground_truth_kind("bogus"), InputError);
}
