#include <gtest/gtest.h>

#include "bleval/report.hpp"
#include "support.hpp"

using namespace bleval;
using namespace bleval::test;

namespace {

const Day kDay = Day::parse("2024-03-04");

MatchRateReport sample_match() {
  MatchRateReport r;
  r.date = kDay;
  r.network_name = "Org-A";
  r.total = 60;
  r.rows = {{"FeedA", {30, 60}, false}, {"FeedB", {9, 60}, false}, {"FeedA+FeedB", {34, 60}, true}};
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  auto v = split(s, '\n');
  if (!v.empty() && v.back().empty()) v.pop_back();
  return v;
}

}  // namespace

TEST(TextTable, AlignsColumns) {
  TextTable t({"Name", "Value"});
  t.add_row({"a", "1"});
  t.add_row({"longer", "12345"});
  auto out = t.render("Title");
  auto l = lines(out);
  ASSERT_EQ(l.size(), 7u);
  EXPECT_EQ(l[0], "Title");
  EXPECT_EQ(l[1], "+--------+-------+");
  EXPECT_EQ(l[2], "| Name   | Value |");
  EXPECT_EQ(l[4], "| a      |     1 |");
  EXPECT_EQ(l[5], "| longer | 12345 |");
  for (std::size_t i = 1; i < l.size(); ++i) EXPECT_EQ(l[i].size(), l[1].size());
}

TEST(RatioCell, ShowsCounts) {
  EXPECT_EQ(format_ratio_cell({30, 60}), "50.0% (30/60)");
  EXPECT_EQ(format_ratio_cell({0, 0}), "undefined (0/0)");
}

TEST(MatchOutput, CsvAndTable) {
  std::vector<MatchRateReport> reps{sample_match()};
  auto csv = lines(match_csv(reps));
  ASSERT_EQ(csv.size(), 4u);
  EXPECT_EQ(csv[0], "date,network,kind,feed,is_union,matched,total,rate");
  EXPECT_EQ(csv[1], "2024-03-04,Org-A,scanner,FeedA,0,30,60,0.500000");
  EXPECT_EQ(csv[3], "2024-03-04,Org-A,scanner,FeedA+FeedB,1,34,60,0.566667");
  auto table = match_table(reps);
  EXPECT_NE(table.find("50.0% (30/60)"), std::string::npos);
  EXPECT_NE(table.find("15.0% (9/60)"), std::string::npos);
}

TEST(DecayOutput, MarksUnavailableDays) {
  DecayReport r;
  r.feed_name = "FeedA";
  r.base_date = kDay;
  DecayRow zero;
  zero.date = kDay;
  zero.available = true;
  zero.daily = zero.stale = {30, 60};
  DecayRow missing;
  missing.offset = 1;
  missing.date = kDay + 1;
  missing.stale = {20, 60};
  missing.daily = {0, 60};
  r.rows = {zero, missing};
  auto csv = lines(decay_csv(r));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[1], "FeedA,2024-03-04,0,2024-03-04,1,60,30,30,0.500000,0.500000,0.000000");
  EXPECT_EQ(csv[2], "FeedA,2024-03-04,1,2024-03-05,0,60,,20,unavailable,0.333333,unavailable");
  EXPECT_NE(decay_table(r).find("unavailable"), std::string::npos);
}

TEST(IntersectionOutput, OffDiagonalOnly) {
  IntersectionMatrix m;
  m.date = kDay;
  m.feed_names = {"A", "B"};
  m.cells = {{std::nullopt, 1}, {0, std::nullopt}};
  auto csv = lines(intersection_csv(m));
  EXPECT_EQ(csv, (std::vector<std::string>{"date,feed,contained_in,count", "2024-03-04,A,B,1", "2024-03-04,B,A,0"}));
  EXPECT_NE(intersection_table(m).find("List name"), std::string::npos);
}

TEST(FeedStatsOutput, UndefinedChurnWithoutPreviousDay) {
  std::vector<FeedStatsRow> rows{{"A", kDay, {3, 4, 257, std::nullopt}}, {"A", kDay + 1, {2, 2, 2, Ratio{1, 5}}}};
  auto csv = lines(feed_stats_csv(rows));
  EXPECT_EQ(csv[1], "A,2024-03-04,3,4,257,,,undefined");
  EXPECT_EQ(csv[2], "A,2024-03-05,2,2,2,1,5,0.200000");
  EXPECT_NE(feed_stats_table(rows).find("20.0% (1/5)"), std::string::npos);
}

TEST(PropagationOutput, OneRowPerDay) {
  PropagationCurve c{"Org-A", "Org-B", kDay, {{0, 60}, {40, 60}}};
  auto csv = lines(propagation_csv(c));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_NE(csv[2].find("40,60"), std::string::npos);
  EXPECT_NE(propagation_table(c).find("66.7% (40/60)"), std::string::npos);
}

TEST(OutputsAreDeterministic, SameInputSameBytes) {
  std::vector<MatchRateReport> reps{sample_match()};
  EXPECT_EQ(match_csv(reps), match_csv(reps));
  EXPECT_EQ(match_table(reps), match_table(reps));
}
