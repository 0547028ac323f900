#include <gtest/gtest.h>

#include <algorithm>

#include "bleval/scan_detect.hpp"
#include "support.hpp"

using namespace bleval;
using namespace bleval::test;

namespace {

const Day kDay = Day::parse("2024-03-04");
const std::int64_t kT0 = kDay.begin_epoch();

IpAddress local_host(std::uint32_t i) { return IpAddress::v4((10u << 24) + 256 + i); }

void sweep(std::vector<FlowRecord>& out, const IpAddress& remote, std::uint32_t fan_out, std::uint16_t port,
           Proto proto = Proto::tcp) {
  for (std::uint32_t i = 0; i < fan_out; ++i) out.push_back(probe(kT0 + i, remote, local_host(i), port, proto));
}

DailyFlowSet build(const std::vector<FlowRecord>& flows, const NetworkConfig& config = test_network()) {
  DailyFlowSet day(std::make_shared<const NetworkView>(config), kDay);
  for (const auto& f : flows) day.add(f);
  return day;
}

std::set<IpAddress> flagged(const std::vector<ScannerVerdict>& v) {
  std::set<IpAddress> s;
  for (const auto& x : v) s.insert(x.remote_ip);
  return s;
}

}  // namespace

TEST(ScanDetect, ThresholdBoundary) {
  std::vector<FlowRecord> flows;
  sweep(flows, ip("203.0.113.27"), 127, 22);
  sweep(flows, ip("203.0.113.28"), 128, 22);
  sweep(flows, ip("203.0.113.50"), 500, 23);
  auto v = detect_scanners(build(flows), test_network());
  EXPECT_EQ(flagged(v), (std::set<IpAddress>{ip("203.0.113.28"), ip("203.0.113.50")}));
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].remote_ip, ip("203.0.113.50"));
  EXPECT_EQ(v[0].distinct_receive_only_contacted, 500u);
  EXPECT_EQ(v[1].distinct_receive_only_contacted, 128u);
}

TEST(ScanDetect, UdpAndExcludedPortsNeverCount) {
  std::vector<FlowRecord> flows;
  sweep(flows, ip("203.0.113.60"), 300, 53, Proto::udp);
  sweep(flows, ip("203.0.113.70"), 500, 443);
  sweep(flows, ip("203.0.113.71"), 500, 80);
  EXPECT_TRUE(detect_scanners(build(flows), test_network()).empty());
}

TEST(ScanDetect, MixedProtocolsCountOnlyQualifyingHosts) {
  std::vector<FlowRecord> flows;
  const auto remote = ip("203.0.113.90");
  for (std::uint32_t i = 0; i < 200; ++i) {
    flows.push_back(probe(kT0, remote, local_host(i), i < 127 ? 22 : 443));
  }
  EXPECT_TRUE(detect_scanners(build(flows), test_network()).empty());
  flows.push_back(probe(kT0, remote, local_host(300), 8080));
  EXPECT_EQ(detect_scanners(build(flows), test_network()).size(), 1u);
}

TEST(ScanDetect, RepeatedContactsCountOnce) {
  std::vector<FlowRecord> flows;
  for (int rep = 0; rep < 5; ++rep) sweep(flows, ip("203.0.113.5"), 100, 22);
  auto v = detect_scanners(build(flows), test_network());
  EXPECT_TRUE(v.empty());
  auto cfg = test_network();
  cfg.scanner_threshold = 100;
  v = detect_scanners(build(flows, cfg), cfg);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].distinct_receive_only_contacted, 100u);
  EXPECT_EQ(v[0].evidence_flow_count, 500u);
}

TEST(ScanDetect, RespondingHostsAreNotReceiveOnly) {
  std::vector<FlowRecord> flows;
  sweep(flows, ip("203.0.113.6"), 130, 22);
  for (std::uint32_t i = 0; i < 5; ++i) {
    auto reply = probe(kT0 + 1000, local_host(i), ip("151.101.0.1"), 443);
    flows.push_back(reply);
  }
  EXPECT_TRUE(detect_scanners(build(flows), test_network()).empty());
}

TEST(ScanDetect, WhitelistedAdminNeverFlagged) {
  auto cfg = test_network();
  cfg.admin_whitelist = {pfx("198.51.100.0/24")};
  std::vector<FlowRecord> flows;
  sweep(flows, ip("198.51.100.10"), 500, 22);
  EXPECT_TRUE(detect_scanners(build(flows, cfg), cfg).empty());
}

TEST(ScanDetect, VerdictsRoundTripThroughCsv) {
  std::vector<FlowRecord> flows;
  sweep(flows, ip("203.0.113.28"), 128, 22);
  sweep(flows, ip("2001:db8::9"), 200, 22);
  auto v = detect_scanners(build(flows), test_network());
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(parse_verdicts(format_verdicts(v)), v);
}

TEST(ScanDetectProperty, FlowOrderDoesNotMatter) {
  std::mt19937_64 g(41);
  for (int round = 0; round < 10; ++round) {
    std::vector<FlowRecord> flows;
    for (int r = 0; r < 20; ++r) {
      sweep(flows, v4(45, 0, 0, static_cast<std::uint32_t>(r)), 100 + static_cast<std::uint32_t>(g() % 60),
            static_cast<std::uint16_t>(g() % 2 ? 22 : 443));
    }
    auto a = detect_scanners(build(flows), test_network());
    std::shuffle(flows.begin(), flows.end(), g);
    auto b = detect_scanners(build(flows), test_network());
    EXPECT_EQ(a, b);
  }
}

TEST(ScanDetectProperty, LoweringThresholdOnlyAddsScanners) {
  std::mt19937_64 g(42);
  std::vector<FlowRecord> flows;
  for (int r = 0; r < 40; ++r) {
    sweep(flows, v4(45, 0, 1, static_cast<std::uint32_t>(r)), static_cast<std::uint32_t>(g() % 300), 22);
  }
  std::set<IpAddress> previous;
  for (std::uint32_t t = 300; t >= 1; t -= 13) {
    auto cfg = test_network();
    cfg.scanner_threshold = t;
    auto now = flagged(detect_scanners(build(flows, cfg), cfg));
    EXPECT_TRUE(std::includes(now.begin(), now.end(), previous.begin(), previous.end())) << "threshold " << t;
    previous = now;
    if (t < 13) break;
  }
}

TEST(ScanDetectProperty, AgreesWithDirectCount) {
  std::mt19937_64 g(43);
  std::vector<FlowRecord> flows;
  for (int i = 0; i < 20000; ++i) {
    auto remote = v4(45, 0, 2, static_cast<std::uint32_t>(g() % 30));
    auto local = local_host(static_cast<std::uint32_t>(g() % 400));
    auto f = probe(kT0 + i % 86400, remote, local, static_cast<std::uint16_t>(g() % 4 == 0 ? 443 : 22),
                   g() % 10 == 0 ? Proto::udp : Proto::tcp);
    if (g() % 50 == 0) f.server_to_client_pkts = 1;
    flows.push_back(f);
  }
  auto day = build(flows);
  auto ro = receive_only_hosts(day);
  std::map<IpAddress, std::set<IpAddress>> contacted;
  for (const auto& f : flows) {
    if (f.proto == Proto::tcp && f.server_port != 443 && ro.contains(f.server_ip)) contacted[f.client_ip].insert(f.server_ip);
  }
  std::set<IpAddress> expected;
  for (const auto& [r, s] : contacted) {
    if (s.size() >= 128) expected.insert(r);
  }
  EXPECT_EQ(flagged(detect_scanners(day, test_network())), expected);
}
