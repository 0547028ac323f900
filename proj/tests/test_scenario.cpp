#include <gtest/gtest.h>

#include <fmt/format.h>

#include "bleval/scenario.hpp"
#include "bleval/workflow.hpp"
#include "support.hpp"

using namespace bleval;
using namespace bleval::test;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kScenario = fs::path(BLEVAL_SOURCE_DIR) / "data" / "scenario.json";

json small_scenario() {
  return json::parse(R"({
    "seed": 7, "start_date": "2024-01-01", "days": 2,
    "networks": [
      {"name": "Lab", "local": ["10.9.0.0/16"], "admin": ["198.51.100.0/24"], "active_hosts": 10,
       "receive_only_pool": 300, "benign_clients": 20, "admin_sweep_fan_out": 150, "server_logs": true}
    ],
    "planted_scanners": [
      {"ip": "203.0.113.27", "fan_out": 127, "ports": [22]},
      {"ip": "203.0.113.28", "fan_out": 128, "ports": [22]}
    ],
    "planted_log_attackers": [
      {"ip": "203.0.113.7", "failures": 3, "service": "smtp"},
      {"ip": "203.0.113.8", "failures": 2, "service": "web-admin"}
    ],
    "scanner_population": {"per_network_day": 10, "fan_out_min": 130, "fan_out_max": 140},
    "log_population": {"attackers_per_network_day": 8},
    "synthetic_feeds": [
      {"name": "Half", "fraction_of_planted_included": 0.5, "noise_entries": 10},
      {"name": "None", "fraction_of_planted_included": 0.0, "noise_entries": 10}
    ]
  })");
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

IpSet ips_of(const json& arr) {
  IpSet s;
  for (const auto& x : arr) s.insert(IpAddress::parse(x.get<std::string>()));
  return s;
}

}  // namespace

TEST(Scenario, LoadsShippedScenario) {
  auto s = Scenario::load(kScenario);
  EXPECT_EQ(s.networks.size(), 3u);
  EXPECT_EQ(s.days, 7);
  EXPECT_EQ(s.synthetic_feeds.size(), 3u);
  ASSERT_TRUE(s.propagation);
  EXPECT_EQ(s.propagation->numerator, 2u);
}

TEST(Scenario, ValidationNamesTheProblem) {
  auto j = small_scenario();
  j["planted_scanners"][0]["fan_out"] = 301;
  try {
    Scenario::from_json(j);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("exceeds the receive-only pool"), std::string::npos) << e.what();
  }
  j = small_scenario();
  j["planted_scanners"][0]["networks"] = {"Nowhere"};
  EXPECT_THROW(Scenario::from_json(j), InputError);
  j = small_scenario();
  j["synthetic_feeds"][0]["fraction_of_planted_included"] = 1.5;
  EXPECT_THROW(Scenario::from_json(j), InputError);
  j = small_scenario();
  j["unions"] = {"Half+Missing"};
  EXPECT_THROW(Scenario::from_json(j), InputError);
  j = small_scenario();
  j["planted_log_attackers"][0]["service"] = "telnet";
  EXPECT_THROW(Scenario::from_json(j), InputError);
  j = small_scenario();
  j["scanner_population"]["fan_out_min"] = 100;
  EXPECT_THROW(Scenario::from_json(j), InputError);
}

TEST(Scenario, SameSeedSameBytes) {
  auto s = Scenario::from_json(small_scenario());
  TempDir a, b;
  generate_fixture(s, a.path());
  generate_fixture(s, b.path());
  EXPECT_EQ(tree(a.path()), tree(b.path()));
  s.seed = 8;
  TempDir c;
  generate_fixture(s, c.path());
  EXPECT_NE(tree(a.path()), tree(c.path()));
}

TEST(Scenario, PatternPackShippedWithFixtureIsTheDefault) {
  auto s = Scenario::from_json(small_scenario());
  TempDir out;
  generate_fixture(s, out.path());
  EXPECT_EQ(slurp(out / "patterns.conf"), std::string(default_pattern_pack()));
  EXPECT_EQ(std::string(default_pattern_pack()), slurp(fs::path(BLEVAL_SOURCE_DIR) / "data" / "patterns.conf"));
}

TEST(Scenario, GeneratedLogsYieldExactlyTheManifestAttackers) {
  auto s = Scenario::from_json(small_scenario());
  TempDir out;
  auto m = generate_fixture(s, out.path());
  auto patterns = parse_pattern_pack(default_pattern_pack());
  PrefixIndex admin(s.networks[0].config.admin_whitelist);
  for (int d = 0; d < s.days; ++d) {
    const Day day = s.start_date + d;
    auto text = slurp(out / "logs" / "Lab" / (day.to_string() + ".log"));
    IpSet found;
    for (const auto& e : scan_logs(text, patterns, day, s.failure_threshold, admin)) found.insert(e.remote_ip);
    auto ports = parse_port_events(slurp(out / "ports" / "Lab" / (day.to_string() + ".csv")));
    for (const auto& e : scan_port_events(ports, day, admin)) found.insert(e.remote_ip);
    const auto& expected = m["networks"]["Lab"]["days"][day.to_string()]["log_attackers"];
    EXPECT_EQ(found, ips_of(expected)) << day.to_string();
    EXPECT_TRUE(found.contains(ip("203.0.113.7")));
    EXPECT_FALSE(found.contains(ip("203.0.113.8")));
  }
}

TEST(Scenario, BoundaryScannerBelowThresholdIsNotFlagged) {
  auto s = Scenario::from_json(small_scenario());
  TempDir out;
  auto m = generate_fixture(s, out.path());
  const Day day = s.start_date;
  auto flows = load_day(out / "flows" / "Lab" / (day.to_string() + ".csv"), s.networks[0].config, day);
  IpSet flagged;
  for (const auto& v : detect_scanners(flows, s.networks[0].config)) flagged.insert(v.remote_ip);
  EXPECT_FALSE(flagged.contains(ip("203.0.113.27")));
  EXPECT_TRUE(flagged.contains(ip("203.0.113.28")));
  EXPECT_FALSE(flagged.contains(ip("198.51.100.10")));
  EXPECT_EQ(flagged, ips_of(m["networks"]["Lab"]["days"][day.to_string()]["scanners"]));
}

class ShippedScenario : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    scenario_ = new Scenario(Scenario::load(kScenario));
    manifest_ = new json(generate_fixture(*scenario_, *dir_ / "fixture"));
    store_ = new Store(*dir_ / "store");
    ingest_tree(*store_, *dir_ / "fixture");
    run_detect(*store_, {});
  }
  static void TearDownTestSuite() {
    delete store_;
    delete manifest_;
    delete scenario_;
    delete dir_;
  }
  static TempDir* dir_;
  static Scenario* scenario_;
  static json* manifest_;
  static Store* store_;
};

TempDir* ShippedScenario::dir_ = nullptr;
Scenario* ShippedScenario::scenario_ = nullptr;
json* ShippedScenario::manifest_ = nullptr;
Store* ShippedScenario::store_ = nullptr;

TEST_F(ShippedScenario, DetectedScannersEqualPlanted) {
  for (const auto& [net, body] : (*manifest_)["networks"].items()) {
    for (const auto& [date, day] : body["days"].items()) {
      IpSet got;
      for (const auto& v : store_->detections(net, Day::parse(date))) got.insert(v.remote_ip);
      EXPECT_EQ(got, ips_of(day["scanners"])) << net << " " << date;
      for (const auto& below : ips_of(day["planted_below_threshold"])) EXPECT_FALSE(got.contains(below));
    }
  }
}

TEST_F(ShippedScenario, MatchRatesEqualManifestEverywhere) {
  for (const auto& [net, body] : (*manifest_)["networks"].items()) {
    for (const auto& [date, day] : body["days"].items()) {
      const Day d = Day::parse(date);
      std::vector<BlacklistSnapshot> feeds;
      for (const auto& f : store_->feed_names({})) feeds.push_back(store_->feed(f, d));
      std::vector<UnionSpec> unions;
      for (const auto& u : scenario_->unions) unions.push_back(UnionSpec::parse(u));
      for (const auto& [kind_name, per_feed] : day["match"].items()) {
        const auto kind = parse_ground_truth_kind(kind_name);
        GroundTruth t{d, net, kind, store_->ground_truth(net, d, kind, scenario_->high_score_min)};
        auto rep = match_rate(t, feeds, unions);
        for (const auto& row : rep.rows) {
          const auto& want = per_feed.at(row.feed);
          EXPECT_EQ(row.rate.numerator, want["matched"].get<std::uint64_t>()) << net << date << kind_name << row.feed;
          EXPECT_EQ(row.rate.denominator, want["total"].get<std::uint64_t>()) << net << date << kind_name << row.feed;
        }
      }
    }
  }
}

TEST_F(ShippedScenario, HeadlineRatesOnFirstDay) {
  const Day d = scenario_->start_date;
  GroundTruth t{d, "Org-A", GroundTruthKind::scanner, store_->ground_truth("Org-A", d, GroundTruthKind::scanner, 5000)};
  std::vector<BlacklistSnapshot> feeds{store_->feed("FeedA", d), store_->feed("FeedB", d), store_->feed("FeedC", d)};
  auto rep = match_rate(t, feeds);
  EXPECT_EQ(format_percent(rep.rows[0].rate), "50.0%");
  EXPECT_EQ(format_percent(rep.rows[1].rate), "15.0%");
  EXPECT_EQ(format_percent(rep.rows[2].rate), "0.0%");
}

TEST_F(ShippedScenario, DecayEqualsManifest) {
  const Day base = scenario_->start_date;
  for (const auto& [feed, per_net] : (*manifest_)["decay"].items()) {
    for (const auto& [net, rows] : per_net.items()) {
      std::map<Day, BlacklistSnapshot> fresh;
      std::map<Day, IpSet> gt;
      for (int i = 0; i < scenario_->days; ++i) {
        fresh.emplace(base + i, store_->feed(feed, base + i));
        gt[base + i] = store_->ground_truth(net, base + i, GroundTruthKind::scanner, 5000);
      }
      auto rep = decay(store_->feed(feed, base), fresh, gt);
      ASSERT_EQ(rep.rows.size(), rows.size());
      EXPECT_EQ(rep.rows[0].delta_count, 0);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rep.rows[i].stale.numerator, rows[i]["stale"].get<std::uint64_t>()) << feed << net << i;
        EXPECT_EQ(rep.rows[i].daily.numerator, rows[i]["daily"].get<std::uint64_t>()) << feed << net << i;
        EXPECT_EQ(rep.rows[i].delta_count, rows[i]["delta_count"].get<std::int64_t>()) << feed << net << i;
      }
    }
  }
}

TEST_F(ShippedScenario, PropagationEqualsPlantedFraction) {
  const auto& p = (*manifest_)["propagation"];
  std::map<Day, IpSet> src, dst;
  for (int i = 0; i < scenario_->days; ++i) {
    const Day d = scenario_->start_date + i;
    src[d] = store_->ground_truth("Org-A", d, GroundTruthKind::scanner, 5000);
    dst[d] = store_->ground_truth("Org-B", d, GroundTruthKind::scanner, 5000);
  }
  auto c = propagation(src, dst, scenario_->days - 1);
  ASSERT_EQ(c.points.size(), p["points"].size());
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    EXPECT_EQ(c.points[i].numerator, p["points"][i]["seen"].get<std::uint64_t>());
    EXPECT_EQ(c.points[i].denominator, p["points"][i]["total"].get<std::uint64_t>());
  }
  // day one is exactly the planted fraction
  EXPECT_EQ(c.points[1].numerator * 3, c.points[1].denominator * 2);
}

TEST_F(ShippedScenario, NoBenignClientIsListed) {
  for (const auto& [net, body] : (*manifest_)["networks"].items()) {
    for (const auto& [date, day] : body["days"].items()) {
      const Day d = Day::parse(date);
      std::vector<BlacklistSnapshot> feeds;
      for (const auto& f : store_->feed_names({})) feeds.push_back(store_->feed(f, d));
      auto rep = false_positive_overlap(store_->flows(net, d), feeds, 100);
      EXPECT_EQ(rep.benign_total, day["benign_remote_clients"].get<std::uint64_t>());
      for (const auto& row : rep.rows) {
        EXPECT_EQ(row.count, day["fp_overlap"][row.feed].get<std::uint64_t>());
        EXPECT_EQ(row.count, 0u);
      }
    }
  }
}
