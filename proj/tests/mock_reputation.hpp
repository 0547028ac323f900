#pragma once

// In-process reputation service for cloud tests. Answers are a pure function
// of the queried address so expectations can be computed independently.

#include <atomic>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "bleval/cloud.hpp"

namespace bleval::test {

/// Engines flagging `a`: last octet mod 10.
inline int mock_engine_count(const IpAddress& a) { return a.bytes()[a.width() / 8 - 1] % 10; }
/// Confidence: 0, 50 or 100 by last octet mod 3.
inline int mock_confidence(const IpAddress& a) { return 50 * (a.bytes()[a.width() / 8 - 1] % 3); }
/// "malicious", "benign" or "unknown" by last octet mod 3.
inline std::string mock_classification(const IpAddress& a) {
  static const char* names[] = {"malicious", "benign", "unknown"};
  return names[a.bytes()[a.width() / 8 - 1] % 3];
}
/// Addresses under 45.0.9.0/24 are unknown to every service.
inline bool mock_not_found(const IpAddress& a) {
  return a.family() == Family::v4 && (a.v4_value() >> 8) == ((45u << 16) | 9u);
}

class MockReputationServer {
 public:
  MockReputationServer() {
    server_.Get(R"(/engines/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      auto a = IpAddress::parse(req.matches[1].str());
      if (mock_not_found(a)) {
        res.status = 404;
        return;
      }
      nlohmann::json body{{"data", {{"attributes", {{"last_analysis_stats", {{"malicious", mock_engine_count(a)}, {"harmless", 60}}}}}}}};
      res.set_content(body.dump(), "application/json");
    });
    server_.Get("/check", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (req.get_header_value("Key") != "secret") {
        res.status = 401;
        return;
      }
      auto a = IpAddress::parse(req.get_param_value("ipAddress"));
      nlohmann::json body{{"data", {{"ipAddress", a.to_string()}, {"abuseConfidenceScore", mock_confidence(a)}}}};
      res.set_content(body.dump(), "application/json");
    });
    server_.Post("/context", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      auto a = IpAddress::parse(nlohmann::json::parse(req.body).at("ip").get<std::string>());
      auto cls = mock_classification(a);
      nlohmann::json body{{"ip", a.to_string()}, {"seen", cls != "unknown"}, {"classification", cls}};
      res.set_content(body.dump(), "application/json");
    });
    server_.Get(R"(/garbled/([^/]+))", [this](const httplib::Request&, httplib::Response& res) {
      ++requests_;
      res.set_content("{not json", "application/json");
    });
    server_.Get(R"(/broken/([^/]+))", [this](const httplib::Request&, httplib::Response& res) {
      ++requests_;
      res.status = 503;
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockReputationServer() {
    server_.stop();
    thread_.join();
  }
  MockReputationServer(const MockReputationServer&) = delete;
  MockReputationServer& operator=(const MockReputationServer&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::uint64_t requests() const { return requests_.load(); }

  CloudProviderConfig engines(std::uint64_t limit = 500, BudgetWindow w = BudgetWindow::day) const {
    CloudProviderConfig c;
    c.provider_name = "engines";
    c.base_url = url();
    c.path_template = "/engines/{ip}";
    c.budget = {limit, w};
    c.consensus_rule = ConsensusRule::min_matches(5);
    c.signal_field = "/data/attributes/last_analysis_stats/malicious";
    return c;
  }
  CloudProviderConfig confidence(std::uint64_t limit = 1000) const {
    CloudProviderConfig c;
    c.provider_name = "confidence";
    c.base_url = url();
    c.path_template = "/check?ipAddress={ip}";
    c.auth_env = "BLEVAL_TEST_KEY";
    c.budget = {limit, BudgetWindow::day};
    c.consensus_rule = ConsensusRule::accuracy_equals(100);
    c.signal_field = "/data/abuseConfidenceScore";
    return c;
  }
  CloudProviderConfig context(std::uint64_t limit = 50) const {
    CloudProviderConfig c;
    c.provider_name = "context";
    c.base_url = url();
    c.path_template = "/context";
    c.method = "POST";
    c.body_template = R"({"ip": "{ip}"})";
    c.budget = {limit, BudgetWindow::week};
    c.consensus_rule = ConsensusRule::classification_equals("malicious");
    c.signal_field = "/classification";
    c.listed_field = "/seen";
    return c;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace bleval::test
