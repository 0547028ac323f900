#include "bleval/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <fmt/format.h>

#include "bleval/evaluator.hpp"
#include "bleval/log_sentinel.hpp"

namespace bleval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
std::vector<T> json_list(const json& j, const char* key) {
  std::vector<T> out;
  if (j.contains(key)) out = j.at(key).get<std::vector<T>>();
  return out;
}

std::vector<IpPrefix> prefix_list(const json& j, const char* key) {
  std::vector<IpPrefix> out;
  for (const auto& s : json_list<std::string>(j, key)) out.push_back(IpPrefix::parse(s));
  return out;
}

bool listed_in(const std::vector<std::string>& names, const std::string& name) {
  return names.empty() || std::find(names.begin(), names.end(), name) != names.end();
}

bool active_on(const std::vector<int>& days, int d) {
  return days.empty() || std::find(days.begin(), days.end(), d) != days.end();
}

std::uint64_t floor_share(double fraction, std::size_t n) {
  return static_cast<std::uint64_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace

const Scenario::Network& Scenario::network(const std::string& name) const {
  for (const auto& n : networks) {
    if (n.config.network_name == name) return n;
  }
  throw InputError(fmt::format("scenario: unknown network '{}'", name));
}

void Scenario::validate() const {
  if (days < 1) throw InputError("scenario: days must be >= 1");
  if (networks.empty()) throw InputError("scenario: at least one network is required");
  if (failure_threshold < 1) throw InputError("scenario: failure_threshold must be >= 1");
  std::set<std::string> names;
  for (const auto& n : networks) {
    n.config.validate();
    const auto& name = n.config.network_name;
    if (!names.insert(name).second) throw InputError(fmt::format("scenario: duplicate network '{}'", name));
    const auto& base = n.config.local_prefixes.front();
    if (base.family() != Family::v4 || base.length() > 22) {
      throw InputError(fmt::format("scenario: network '{}' needs an IPv4 first local prefix of /22 or wider", name));
    }
    const std::uint64_t room = (std::uint64_t{1} << (32 - base.length())) - 256;
    if (n.active_hosts < 1 || n.active_hosts > 250) {
      throw InputError(fmt::format("scenario: network '{}' active_hosts must be 1..250", name));
    }
    if (n.receive_only_pool > room) {
      throw InputError(fmt::format("scenario: network '{}' receive_only_pool {} does not fit in {}", name,
                                   n.receive_only_pool, base.to_string()));
    }
    if (n.admin_sweep_fan_out > n.receive_only_pool) {
      throw InputError(fmt::format("scenario: network '{}' admin_sweep_fan_out {} exceeds the receive-only pool ({})",
                                   name, n.admin_sweep_fan_out, n.receive_only_pool));
    }
    if (n.admin_sweep_fan_out > 0 && n.config.admin_whitelist.empty()) {
      throw InputError(fmt::format("scenario: network '{}' has admin_sweep_fan_out but no admin prefix", name));
    }
  }
  for (const auto& s : planted_scanners) {
    if (s.ports.empty()) throw InputError(fmt::format("scenario: planted scanner {} has no ports", s.ip.to_string()));
    if (s.proto == Proto::other) throw InputError("scenario: planted scanners must use tcp or udp");
    for (const auto& n : s.networks) network(n);
    for (int d : s.days) {
      if (d < 0 || d >= days) throw InputError(fmt::format("scenario: planted scanner day {} out of range", d));
    }
    for (const auto& n : networks) {
      if (listed_in(s.networks, n.config.network_name) && s.fan_out > n.receive_only_pool) {
        throw InputError(fmt::format("scenario: planted scanner {} fan_out {} exceeds the receive-only pool ({}) of "
                                     "network '{}'",
                                     s.ip.to_string(), s.fan_out, n.receive_only_pool, n.config.network_name));
      }
    }
  }
  for (const auto& a : planted_log_attackers) {
    for (const auto& n : a.networks) {
      if (!network(n).server_logs) {
        throw InputError(fmt::format("scenario: planted log attacker {} targets '{}' which has no server logs",
                                     a.ip.to_string(), n));
      }
    }
    static const std::set<std::string> services{"ssh", "imap", "smtp", "web-admin"};
    if (!services.contains(a.service)) {
      throw InputError(fmt::format("scenario: unknown service '{}' (ssh, imap, smtp, web-admin)", a.service));
    }
  }
  const auto& p = scanner_population;
  if (p.per_network_day > 0) {
    if (p.fan_out_min > p.fan_out_max) throw InputError("scenario: scanner fan_out_min exceeds fan_out_max");
    if (p.ports.empty()) throw InputError("scenario: scanner population needs ports");
    for (const auto& n : networks) {
      if (p.fan_out_max > n.receive_only_pool) {
        throw InputError(fmt::format("scenario: scanner fan_out_max {} exceeds the receive-only pool ({}) of network "
                                     "'{}'",
                                     p.fan_out_max, n.receive_only_pool, n.config.network_name));
      }
      for (auto port : p.ports) {
        if (n.config.excluded_ports.contains(port)) {
          throw InputError(fmt::format("scenario: population port {} is excluded in network '{}'", port,
                                       n.config.network_name));
        }
      }
      if (p.fan_out_min < n.config.scanner_threshold) {
        throw InputError(fmt::format("scenario: population fan_out_min {} is below the threshold of network '{}'",
                                     p.fan_out_min, n.config.network_name));
      }
    }
  }
  if (p.carry_over < 0 || p.carry_over > 1) throw InputError("scenario: carry_over must be in [0, 1]");
  if (propagation) {
    network(propagation->source);
    network(propagation->target);
    if (propagation->source == propagation->target) throw InputError("scenario: propagation needs two networks");
    if (propagation->denominator == 0 || propagation->numerator > propagation->denominator) {
      throw InputError("scenario: propagation fraction must be within [0, 1]");
    }
    if (propagation->lag_days < 1 || propagation->lag_days >= days) {
      throw InputError("scenario: propagation lag_days must be >= 1 and < days");
    }
  }
  const auto& l = log_population;
  if (l.failures_min < failure_threshold || l.failures_min > l.failures_max) {
    throw InputError("scenario: log attacker failures must satisfy failure_threshold <= failures_min <= failures_max");
  }
  if (l.near_miss_per_network_day > 0 && failure_threshold < 2) {
    throw InputError("scenario: near misses need failure_threshold >= 2");
  }
  if (l.visit_fraction < 0 || l.visit_fraction > 1) throw InputError("scenario: visit_fraction must be in [0, 1]");
  std::set<std::string> feed_names;
  for (const auto& f : synthetic_feeds) {
    if (f.name.empty() || !feed_names.insert(f.name).second) {
      throw InputError(fmt::format("scenario: feed name '{}' is empty or repeated", f.name));
    }
    if (f.fraction_of_planted_included < 0 || f.fraction_of_planted_included > 1) {
      throw InputError(fmt::format("scenario: feed '{}' fraction must be in [0, 1]", f.name));
    }
    if (f.noise_prefixes > 100) throw InputError(fmt::format("scenario: feed '{}' noise_prefixes must be <= 100", f.name));
    if (f.benign_planted > networks.front().benign_clients) {
      throw InputError(fmt::format("scenario: feed '{}' benign_planted exceeds benign_clients", f.name));
    }
  }
  for (const auto& u : unions) {
    for (const auto& m : UnionSpec::parse(u).members) {
      if (!feed_names.contains(m)) throw InputError(fmt::format("scenario: union '{}' names unknown feed '{}'", u, m));
    }
  }
}

Scenario Scenario::from_json(const json& j) {
  Scenario s;
  try {
    s.seed = j.value("seed", s.seed);
    s.start_date = Day::parse(j.at("start_date").get<std::string>());
    s.days = j.value("days", s.days);
    s.failure_threshold = j.value("failure_threshold", s.failure_threshold);
    s.high_score_min = j.value("high_score_min", s.high_score_min);
    s.benign_score_max = j.value("benign_score_max", s.benign_score_max);
    for (const auto& n : j.at("networks")) {
      Network net;
      net.config.network_name = n.at("name").get<std::string>();
      net.config.local_prefixes = prefix_list(n, "local");
      net.config.admin_whitelist = prefix_list(n, "admin");
      net.config.silent_hosts = prefix_list(n, "silent");
      if (n.contains("exclude_ports")) {
        auto ports = n.at("exclude_ports").get<std::vector<std::uint16_t>>();
        net.config.excluded_ports = {ports.begin(), ports.end()};
      }
      net.config.scanner_threshold = n.value("scanner_threshold", net.config.scanner_threshold);
      net.active_hosts = n.value("active_hosts", net.active_hosts);
      net.receive_only_pool = n.value("receive_only_pool", net.receive_only_pool);
      net.benign_clients = n.value("benign_clients", net.benign_clients);
      net.admin_sweep_fan_out = n.value("admin_sweep_fan_out", net.admin_sweep_fan_out);
      net.server_logs = n.value("server_logs", net.server_logs);
      s.networks.push_back(std::move(net));
    }
    for (const auto& p : j.value("planted_scanners", json::array())) {
      PlantedScanner ps;
      ps.ip = IpAddress::parse(p.at("ip").get<std::string>());
      ps.fan_out = p.at("fan_out").get<std::uint32_t>();
      ps.ports = p.at("ports").get<std::vector<std::uint16_t>>();
      ps.proto = parse_proto(p.value("proto", std::string("tcp")));
      ps.cyberscore = p.value("cyberscore", ps.cyberscore);
      ps.networks = json_list<std::string>(p, "networks");
      ps.days = json_list<int>(p, "days");
      s.planted_scanners.push_back(std::move(ps));
    }
    for (const auto& p : j.value("planted_log_attackers", json::array())) {
      PlantedLogAttacker a;
      a.ip = IpAddress::parse(p.at("ip").get<std::string>());
      a.failures = p.at("failures").get<std::uint32_t>();
      a.service = p.value("service", a.service);
      a.networks = json_list<std::string>(p, "networks");
      a.days = json_list<int>(p, "days");
      s.planted_log_attackers.push_back(std::move(a));
    }
    if (j.contains("scanner_population")) {
      const auto& p = j.at("scanner_population");
      auto& sp = s.scanner_population;
      sp.per_network_day = p.value("per_network_day", sp.per_network_day);
      sp.fan_out_min = p.value("fan_out_min", sp.fan_out_min);
      sp.fan_out_max = p.value("fan_out_max", sp.fan_out_max);
      if (p.contains("ports")) sp.ports = p.at("ports").get<std::vector<std::uint16_t>>();
      sp.carry_over = p.value("carry_over", sp.carry_over);
    }
    if (j.contains("propagation")) {
      const auto& p = j.at("propagation");
      Propagation pr;
      pr.source = p.at("source").get<std::string>();
      pr.target = p.at("target").get<std::string>();
      pr.numerator = p.value("numerator", pr.numerator);
      pr.denominator = p.value("denominator", pr.denominator);
      pr.lag_days = p.value("lag_days", pr.lag_days);
      s.propagation = pr;
    }
    if (j.contains("log_population")) {
      const auto& p = j.at("log_population");
      auto& lp = s.log_population;
      lp.attackers_per_network_day = p.value("attackers_per_network_day", lp.attackers_per_network_day);
      lp.failures_min = p.value("failures_min", lp.failures_min);
      lp.failures_max = p.value("failures_max", lp.failures_max);
      lp.near_miss_per_network_day = p.value("near_miss_per_network_day", lp.near_miss_per_network_day);
      lp.probers_per_network_day = p.value("probers_per_network_day", lp.probers_per_network_day);
      lp.visit_fraction = p.value("visit_fraction", lp.visit_fraction);
    }
    for (const auto& f : j.value("synthetic_feeds", json::array())) {
      SyntheticFeed sf;
      sf.name = f.at("name").get<std::string>();
      sf.fraction_of_planted_included = f.value("fraction_of_planted_included", 0.0);
      sf.noise_entries = f.value("noise_entries", sf.noise_entries);
      sf.noise_prefixes = f.value("noise_prefixes", sf.noise_prefixes);
      sf.noise_v6 = f.value("noise_v6", sf.noise_v6);
      sf.benign_planted = f.value("benign_planted", sf.benign_planted);
      s.synthetic_feeds.push_back(std::move(sf));
    }
    s.unions = json_list<std::string>(j, "unions");
  } catch (const json::exception& e) {
    throw InputError(fmt::format("scenario: {}", e.what()));
  }
  s.validate();
  return s;
}

Scenario Scenario::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read scenario {}", path.string()));
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

namespace {

/// mt19937_64 with a portable bounded draw, so trees match across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = g_();
    } while (x >= limit);
    return x % n;
  }
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }
  template <typename T>
  std::vector<T> sample(std::vector<T> v, std::size_t k) {
    shuffle(v);
    v.resize(std::min(k, v.size()));
    return v;
  }

 private:
  std::mt19937_64 g_;
};

/// Hands out unused v4 addresses from a /8, walking upward with random gaps.
class Allocator {
 public:
  Allocator(std::uint8_t first_octet, std::uint32_t max_gap, const std::set<IpAddress>& reserved)
      : next_(std::uint32_t{first_octet} << 24), end_((std::uint32_t{first_octet} + 1) << 24), max_gap_(max_gap),
        reserved_(reserved) {}

  IpAddress take(Rng& rng) {
    while (true) {
      next_ += 1 + static_cast<std::uint32_t>(rng.below(max_gap_));
      if (next_ >= end_) throw InputError("scenario: address range exhausted");
      const std::uint32_t last = next_ & 0xFF;
      if (last == 0 || last == 255) continue;
      IpAddress a = IpAddress::v4(next_);
      if (!reserved_.contains(a)) return a;
    }
  }

 private:
  std::uint32_t next_;
  std::uint32_t end_;
  std::uint32_t max_gap_;
  const std::set<IpAddress>& reserved_;
};

struct LogLine {
  std::int64_t second = 0;
  std::string text;
};

struct NetDay {
  std::vector<FlowRecord> flows;
  std::vector<LogLine> logs;
  std::vector<PortContactEvent> ports;
  std::vector<IpAddress> population;  // generated scanners, candidates for carry-over
  IpSet scanners;                     // expected detector output
  IpSet below_threshold;              // planted but not expected
  IpSet log_attackers;                // expected auth_bruteforce and closed_port_probe sources
  IpSet auth_attackers;
  std::vector<IpAddress> benign;
  std::map<IpAddress, std::uint64_t> score_sum;   // remote endpoints
  std::map<IpAddress, std::uint64_t> client_max;  // remote clients
};

struct FeedDay {
  std::set<IpAddress> hosts;
  std::set<IpPrefix> prefixes;
  bool exact = true;

  bool covers(const IpAddress& a) const {
    if (hosts.contains(a)) return true;
    for (const auto& p : prefixes) {
      if (p.family() == a.family() && a.masked(p.length()) == p.address()) return true;
    }
    return false;
  }
};

std::uint64_t covered(const IpSet& ips, const FeedDay& f) {
  return static_cast<std::uint64_t>(std::count_if(ips.begin(), ips.end(), [&](const IpAddress& a) { return f.covers(a); }));
}

json ratio_json(std::uint64_t matched, std::uint64_t total) { return json{{"matched", matched}, {"total", total}}; }

json ip_list(const IpSet& s) {
  json out = json::array();
  for (const auto& ip : s) out.push_back(ip.to_string());
  return out;
}

std::string syslog_stamp(Day day, std::int64_t second) {
  static constexpr const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  std::chrono::year_month_day ymd{day.sys_days()};
  return fmt::format("{} {:2} {:02}:{:02}:{:02}", kMonths[static_cast<unsigned>(ymd.month()) - 1],
                     static_cast<unsigned>(ymd.day()), second / 3600, second / 60 % 60, second % 60);
}

std::string access_stamp(Day day, std::int64_t second) {
  static constexpr const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  std::chrono::year_month_day ymd{day.sys_days()};
  return fmt::format("{:02}/{}/{:04}:{:02}:{:02}:{:02} +0000", static_cast<unsigned>(ymd.day()),
                     kMonths[static_cast<unsigned>(ymd.month()) - 1], static_cast<int>(ymd.year()), second / 3600,
                     second / 60 % 60, second % 60);
}

class Generator {
 public:
  explicit Generator(const Scenario& s) : s_(s), rng_(s.seed) {
    for (const auto& p : s.planted_scanners) reserved_.insert(p.ip);
    for (const auto& a : s.planted_log_attackers) reserved_.insert(a.ip);
  }

  json run(const fs::path& out);

 private:
  IpAddress local_host(std::size_t net, std::uint32_t offset) const {
    return IpAddress::v4(s_.networks[net].config.local_prefixes.front().address().v4_value() + offset);
  }
  IpAddress active_host(std::size_t net, std::uint32_t i) const { return local_host(net, 1 + i); }
  IpAddress pool_host(std::size_t net, std::uint32_t i) const { return local_host(net, 256 + i); }

  std::optional<IpAddress> admin_host(std::size_t net) const {
    const auto& admin = s_.networks[net].config.admin_whitelist;
    if (admin.empty()) return std::nullopt;
    const auto& p = admin.front();
    if (p.family() == Family::v4 && p.length() <= 28) return IpAddress::v4(p.address().v4_value() + 10);
    return p.address();
  }

  bool whitelisted(std::size_t net, const IpAddress& a) const {
    for (const auto& p : s_.networks[net].config.admin_whitelist) {
      if (p.covers(a)) return true;
    }
    return false;
  }

  std::int64_t when(int d) { return (s_.start_date + d).begin_epoch() + static_cast<std::int64_t>(rng_.below(86400)); }

  void emit(NetDay& nd, const FlowRecord& r, bool client_remote, bool server_remote) {
    nd.flows.push_back(r);
    if (client_remote) {
      nd.score_sum[r.client_ip] += r.cyberscore;
      auto [it, fresh] = nd.client_max.try_emplace(r.client_ip, r.cyberscore);
      if (!fresh) it->second = std::max(it->second, r.cyberscore);
    }
    if (server_remote) nd.score_sum[r.server_ip] += r.cyberscore;
  }

  /// Scanner flows; returns the number of pool hosts contacted on a port the
  /// detector counts.
  std::uint32_t sweep(std::size_t net, int d, NetDay& nd, const IpAddress& src, std::uint32_t fan_out,
                      const std::vector<std::uint16_t>& ports, Proto proto, std::optional<std::uint64_t> score) {
    const auto& cfg = s_.networks[net].config;
    std::vector<std::uint32_t> idx(s_.networks[net].receive_only_pool);
    for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
    idx = rng_.sample(std::move(idx), fan_out);
    std::uint32_t counted = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      FlowRecord r;
      r.timestamp = when(d);
      r.proto = proto;
      r.client_ip = src;
      r.server_ip = pool_host(net, idx[j]);
      r.client_port = static_cast<std::uint16_t>(rng_.range(1024, 65535));
      r.server_port = ports[j % ports.size()];
      r.client_to_server_pkts = rng_.range(1, 2);
      r.client_to_server_bytes = r.client_to_server_pkts * (proto == Proto::tcp ? 60 : 48);
      r.cyberscore = score ? *score : rng_.range(s_.benign_score_max + 1, s_.benign_score_max + 100);
      emit(nd, r, true, false);
      if (!cfg.excluded_ports.contains(r.server_port)) ++counted;
    }
    return counted;
  }

  void benign_traffic(std::size_t net, int d, NetDay& nd, const std::vector<IpAddress>& benign_pool);
  void log_activity(std::size_t net, int d, NetDay& nd, Allocator& attackers, Allocator& probers,
                    Allocator& near_miss);
  void failure_line(std::size_t net, int d, NetDay& nd, const IpAddress& ip, const std::string& service);

  const Scenario& s_;
  Rng rng_;
  std::set<IpAddress> reserved_;
};

void Generator::benign_traffic(std::size_t net, int d, NetDay& nd, const std::vector<IpAddress>& benign_pool) {
  const auto& n = s_.networks[net];
  static constexpr std::uint16_t kServices[] = {80, 443, 22, 25, 993};
  nd.benign = rng_.sample(benign_pool, n.benign_clients);
  for (const auto& ip : nd.benign) {
    const auto flows = rng_.range(1, 4);
    for (std::uint64_t k = 0; k < flows; ++k) {
      FlowRecord r;
      r.timestamp = when(d);
      r.proto = Proto::tcp;
      r.client_ip = ip;
      r.server_ip = active_host(net, static_cast<std::uint32_t>(rng_.below(n.active_hosts)));
      r.client_port = static_cast<std::uint16_t>(rng_.range(1024, 65535));
      r.server_port = kServices[rng_.below(std::size(kServices))];
      r.client_to_server_pkts = rng_.range(3, 20);
      r.server_to_client_pkts = rng_.range(2, 30);
      r.client_to_server_bytes = r.client_to_server_pkts * 120;
      r.server_to_client_bytes = r.server_to_client_pkts * 800;
      r.cyberscore = rng_.range(0, s_.benign_score_max);
      emit(nd, r, true, false);
    }
  }
  for (std::uint32_t h = 0; h < n.active_hosts; ++h) {
    const auto flows = rng_.range(1, 2);
    for (std::uint64_t k = 0; k < flows; ++k) {
      FlowRecord r;
      r.timestamp = when(d);
      const bool dns = rng_.below(3) == 0;
      r.proto = dns ? Proto::udp : Proto::tcp;
      r.client_ip = active_host(net, h);
      r.server_ip = IpAddress::v4((151u << 24) | (101u << 16) | static_cast<std::uint32_t>(1 + rng_.below(64)));
      r.client_port = static_cast<std::uint16_t>(rng_.range(1024, 65535));
      r.server_port = dns ? 53 : 443;
      r.client_to_server_pkts = rng_.range(2, 10);
      r.server_to_client_pkts = rng_.range(2, 10);
      r.client_to_server_bytes = r.client_to_server_pkts * 100;
      r.server_to_client_bytes = r.server_to_client_pkts * 900;
      r.cyberscore = rng_.range(0, 20);
      emit(nd, r, false, true);
    }
  }
}

void Generator::failure_line(std::size_t net, int d, NetDay& nd, const IpAddress& ip, const std::string& service) {
  const Day day = s_.start_date + d;
  const auto sec = static_cast<std::int64_t>(rng_.below(86400));
  const auto host = fmt::format("srv{}", net + 1);
  const auto pid = rng_.range(1000, 60000);
  static constexpr const char* kUsers[] = {"root", "admin", "test", "oracle", "info", "postgres"};
  const char* user = kUsers[rng_.below(std::size(kUsers))];
  std::string text;
  if (service == "ssh") {
    text = fmt::format("{} {} sshd[{}]: Failed password for {}{} from {} port {} ssh2", syslog_stamp(day, sec), host,
                       pid, rng_.below(2) == 0 ? "invalid user " : "", user, ip.to_string(),
                       rng_.range(1024, 65535));
  } else if (service == "imap") {
    text = fmt::format(
        "{} {} dovecot: imap-login: Disconnected (auth failed, 1 attempts in 2 secs): user=<{}>, method=PLAIN, "
        "rip={}, lip={}, session=<{:012x}>",
        syslog_stamp(day, sec), host, user, ip.to_string(), active_host(net, 0).to_string(), rng_.below(1ULL << 48));
  } else if (service == "smtp") {
    text = fmt::format("{} {} postfix/smtpd[{}]: warning: unknown[{}]: SASL LOGIN authentication failed: UGFzc3dvcmQ6",
                       syslog_stamp(day, sec), host, pid, ip.to_string());
  } else {
    text = fmt::format("{} - - [{}] \"POST /admin/login HTTP/1.1\" 401 {}", ip.to_string(), access_stamp(day, sec),
                       rng_.range(200, 900));
  }
  nd.logs.push_back({sec, std::move(text)});
}

void Generator::log_activity(std::size_t net, int d, NetDay& nd, Allocator& attackers, Allocator& probers,
                             Allocator& near_miss) {
  const auto& n = s_.networks[net];
  const auto& lp = s_.log_population;
  static const std::vector<std::string> kServices{"ssh", "imap", "smtp", "web-admin"};
  static constexpr std::uint16_t kProbePorts[] = {23, 445, 1433, 3389, 5900};
  const Day day = s_.start_date + d;

  auto probe = [&](const IpAddress& ip, std::uint64_t contacts) {
    for (std::uint64_t k = 0; k < contacts; ++k) {
      PortContactEvent e;
      e.timestamp = when(d);
      e.remote_ip = ip;
      e.local_port = kProbePorts[rng_.below(std::size(kProbePorts))];
      e.proto = rng_.below(4) == 0 ? Proto::udp : Proto::tcp;
      e.port_state = PortState::closed;
      nd.ports.push_back(e);
    }
    if (!whitelisted(net, ip)) nd.log_attackers.insert(ip);
  };

  for (std::uint32_t i = 0; i < lp.attackers_per_network_day; ++i) {
    const IpAddress ip = attackers.take(rng_);
    const auto failures = rng_.range(lp.failures_min, lp.failures_max);
    const auto& service = kServices[rng_.below(kServices.size())];
    for (std::uint64_t k = 0; k < failures; ++k) failure_line(net, d, nd, ip, service);
    nd.auth_attackers.insert(ip);
    nd.log_attackers.insert(ip);
    if (rng_.below(2) == 0) probe(ip, rng_.range(1, 2));
  }
  for (std::uint32_t i = 0; i < lp.near_miss_per_network_day; ++i) {
    const IpAddress ip = near_miss.take(rng_);
    const auto failures = rng_.range(1, s_.failure_threshold - 1);
    const auto& service = kServices[rng_.below(kServices.size())];
    for (std::uint64_t k = 0; k < failures; ++k) failure_line(net, d, nd, ip, service);
  }
  for (std::uint32_t i = 0; i < lp.probers_per_network_day; ++i) probe(probers.take(rng_), rng_.range(1, 4));
  for (const auto& a : s_.planted_log_attackers) {
    if (!listed_in(a.networks, n.config.network_name) || !active_on(a.days, d)) continue;
    for (std::uint32_t k = 0; k < a.failures; ++k) failure_line(net, d, nd, a.ip, a.service);
    if (a.failures >= s_.failure_threshold && !whitelisted(net, a.ip)) {
      nd.auth_attackers.insert(a.ip);
      nd.log_attackers.insert(a.ip);
    }
  }
  if (auto admin = admin_host(net)) {
    for (int k = 0; k < 10; ++k) failure_line(net, d, nd, *admin, "ssh");
  }
  for (const auto& ip : nd.benign) {
    if (rng_.below(10) != 0) continue;
    PortContactEvent e;
    e.timestamp = when(d);
    e.remote_ip = ip;
    e.local_port = 443;
    e.proto = Proto::tcp;
    e.port_state = PortState::open;
    nd.ports.push_back(e);
  }
  const auto host = fmt::format("srv{}", net + 1);
  for (std::uint32_t i = 0; i < 20 + n.active_hosts; ++i) {
    const auto sec = static_cast<std::int64_t>(rng_.below(86400));
    const auto pid = rng_.range(1000, 60000);
    std::string text;
    switch (rng_.below(3)) {
      case 0:
        text = fmt::format("{} {} sshd[{}]: Accepted publickey for deploy from {} port {} ssh2", syslog_stamp(day, sec),
                           host, pid, active_host(net, static_cast<std::uint32_t>(rng_.below(n.active_hosts))).to_string(),
                           rng_.range(1024, 65535));
        break;
      case 1:
        text = fmt::format("{} {} CRON[{}]: pam_unix(cron:session): session opened for user root by (uid=0)",
                           syslog_stamp(day, sec), host, pid);
        break;
      default:
        text = fmt::format("{} - - [{}] \"GET /index.html HTTP/1.1\" 200 {}",
                           nd.benign.empty() ? active_host(net, 0).to_string()
                                             : nd.benign[rng_.below(nd.benign.size())].to_string(),
                           access_stamp(day, sec), rng_.range(500, 9000));
        break;
    }
    nd.logs.push_back({sec, std::move(text)});
  }
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw InputError(fmt::format("write to {} failed", path.string()));
}

json Generator::run(const fs::path& out) {
  const std::size_t nets = s_.networks.size();
  const int days = s_.days;
  Allocator scanner_ips(45, 40, reserved_);
  Allocator attacker_ips(91, 40, reserved_);
  Allocator prober_ips(92, 40, reserved_);
  Allocator near_miss_ips(93, 40, reserved_);
  Allocator benign_ips(150, 200, reserved_);

  std::vector<std::vector<IpAddress>> benign_pools(nets);
  for (std::size_t i = 0; i < nets; ++i) {
    for (std::uint32_t k = 0; k < 2 * s_.networks[i].benign_clients; ++k) benign_pools[i].push_back(benign_ips.take(rng_));
  }

  std::vector<std::vector<NetDay>> grid(nets, std::vector<NetDay>(static_cast<std::size_t>(days)));
  json propagation_plan;
  const auto& pop = s_.scanner_population;

  for (int d = 0; d < days; ++d) {
    for (std::size_t i = 0; i < nets; ++i) {
      auto& nd = grid[i][static_cast<std::size_t>(d)];
      const auto& n = s_.networks[i];
      const auto& name = n.config.network_name;

      std::vector<IpAddress> members;
      std::set<IpAddress> chosen;
      if (s_.propagation && s_.propagation->target == name && d >= s_.propagation->lag_days) {
        const std::size_t src = static_cast<std::size_t>(
            std::find_if(s_.networks.begin(), s_.networks.end(),
                         [&](const Scenario::Network& x) { return x.config.network_name == s_.propagation->source; }) -
            s_.networks.begin());
        const auto& seeds = grid[src][static_cast<std::size_t>(d - s_.propagation->lag_days)].scanners;
        const auto& already = grid[i][static_cast<std::size_t>(d - s_.propagation->lag_days)].scanners;
        std::vector<IpAddress> candidates;
        for (const auto& ip : seeds) {
          if (!already.contains(ip)) candidates.push_back(ip);
        }
        const std::uint64_t k = seeds.size() * s_.propagation->numerator / s_.propagation->denominator;
        auto moved = rng_.sample(candidates, k);
        std::sort(moved.begin(), moved.end());
        if (d == s_.propagation->lag_days) {
          propagation_plan = json{{"planted", moved.size()}, {"seeds", seeds.size()}};
        }
        for (const auto& ip : moved) {
          if (chosen.insert(ip).second) members.push_back(ip);
        }
      }
      if (d > 0 && members.size() < pop.per_network_day) {
        const auto& prev = grid[i][static_cast<std::size_t>(d - 1)].population;
        std::vector<IpAddress> candidates;
        for (const auto& ip : prev) {
          if (!chosen.contains(ip)) candidates.push_back(ip);
        }
        const auto want = std::min<std::uint64_t>(floor_share(pop.carry_over, prev.size()),
                                                  pop.per_network_day - members.size());
        for (const auto& ip : rng_.sample(candidates, want)) {
          if (chosen.insert(ip).second) members.push_back(ip);
        }
      }
      while (members.size() < pop.per_network_day) {
        auto ip = scanner_ips.take(rng_);
        chosen.insert(ip);
        members.push_back(ip);
      }
      for (const auto& ip : members) {
        const auto fan_out = static_cast<std::uint32_t>(rng_.range(pop.fan_out_min, pop.fan_out_max));
        auto ports = rng_.sample(pop.ports, rng_.range(1, std::min<std::size_t>(3, pop.ports.size())));
        const auto counted = sweep(i, d, nd, ip, fan_out, ports, Proto::tcp, std::nullopt);
        if (counted >= n.config.scanner_threshold && !whitelisted(i, ip)) {
          nd.scanners.insert(ip);
        } else {
          nd.below_threshold.insert(ip);
        }
        nd.population.push_back(ip);
      }
      for (const auto& p : s_.planted_scanners) {
        if (!listed_in(p.networks, name) || !active_on(p.days, d)) continue;
        const auto counted = sweep(i, d, nd, p.ip, p.fan_out, p.ports, p.proto, p.cyberscore);
        if (p.proto == Proto::tcp && counted >= n.config.scanner_threshold && !whitelisted(i, p.ip)) {
          nd.scanners.insert(p.ip);
        } else {
          nd.below_threshold.insert(p.ip);
        }
      }
      if (n.admin_sweep_fan_out > 0) {
        sweep(i, d, nd, *admin_host(i), n.admin_sweep_fan_out, {22}, Proto::tcp, 10);
      }
      benign_traffic(i, d, nd, benign_pools[i]);
    }

    for (std::size_t i = 0; i < nets; ++i) {
      if (s_.networks[i].server_logs) {
        log_activity(i, d, grid[i][static_cast<std::size_t>(d)], attacker_ips, prober_ips, near_miss_ips);
      }
    }
    // attackers seen in one network's logs also show up in the others' flows
    for (std::size_t i = 0; i < nets; ++i) {
      const auto& attackers = grid[i][static_cast<std::size_t>(d)].auth_attackers;
      if (attackers.empty()) continue;
      const std::vector<IpAddress> pool(attackers.begin(), attackers.end());
      for (std::size_t j = 0; j < nets; ++j) {
        if (j == i) continue;
        auto& target = grid[j][static_cast<std::size_t>(d)];
        for (const auto& ip : rng_.sample(pool, floor_share(s_.log_population.visit_fraction, pool.size()))) {
          for (int k = 0; k < 2; ++k) {
            FlowRecord r;
            r.timestamp = when(d);
            r.proto = Proto::tcp;
            r.client_ip = ip;
            r.server_ip = active_host(j, static_cast<std::uint32_t>(rng_.below(s_.networks[j].active_hosts)));
            r.client_port = static_cast<std::uint16_t>(rng_.range(1024, 65535));
            r.server_port = 22;
            r.client_to_server_pkts = 5;
            r.server_to_client_pkts = 4;
            r.client_to_server_bytes = 400;
            r.server_to_client_bytes = 600;
            r.cyberscore = s_.benign_score_max + 50;
            emit(target, r, true, false);
          }
        }
      }
    }
  }

  // feeds: exact per-group coverage, decided greedily group by group
  std::map<std::string, std::vector<FeedDay>> feeds;
  std::set<std::string> inexact;
  for (const auto& f : s_.synthetic_feeds) {
    auto& series = feeds[f.name];
    series.resize(static_cast<std::size_t>(days));
    std::set<IpAddress> noise;
    std::set<IpPrefix> noise_prefixes;
    for (int d = 0; d < days; ++d) {
      auto& fd = series[static_cast<std::size_t>(d)];
      std::set<IpAddress> decided;
      for (std::size_t i = 0; i < nets; ++i) {
        const auto& nd = grid[i][static_cast<std::size_t>(d)];
        for (const IpSet* group : {&nd.scanners, &nd.log_attackers}) {
          if (group->empty()) continue;
          const auto k = floor_share(f.fraction_of_planted_included, group->size());
          std::uint64_t have = 0;
          std::vector<IpAddress> open;
          for (const auto& ip : *group) {
            if (fd.hosts.contains(ip)) ++have;
            if (!decided.contains(ip)) open.push_back(ip);
          }
          const auto need = k > have ? k - have : 0;
          if (have > k || need > open.size()) fd.exact = false;
          for (const auto& ip : rng_.sample(open, need)) fd.hosts.insert(ip);
          decided.insert(group->begin(), group->end());
        }
      }
      for (const auto& ip : rng_.sample(grid[0][static_cast<std::size_t>(d)].benign, f.benign_planted)) {
        fd.hosts.insert(ip);
      }

      std::vector<IpAddress> kept(noise.begin(), noise.end());
      kept = rng_.sample(kept, floor_share(0.8, kept.size()));
      noise = {kept.begin(), kept.end()};
      while (noise.size() < f.noise_entries) {
        const auto a = static_cast<std::uint32_t>(rng_.below(10));
        const auto b = static_cast<std::uint32_t>(rng_.below(10));
        const auto c = static_cast<std::uint32_t>(rng_.range(1, 254));
        noise.insert(IpAddress::v4((185u << 24) | ((10 + a) << 16) | (b << 8) | c));
      }
      std::vector<IpPrefix> kept_prefixes(noise_prefixes.begin(), noise_prefixes.end());
      kept_prefixes = rng_.sample(kept_prefixes, floor_share(0.8, kept_prefixes.size()));
      noise_prefixes = {kept_prefixes.begin(), kept_prefixes.end()};
      while (noise_prefixes.size() < f.noise_prefixes) {
        const auto a = static_cast<std::uint32_t>(rng_.below(10));
        const auto b = static_cast<std::uint32_t>(rng_.below(10));
        noise_prefixes.insert(IpPrefix(IpAddress::v4((185u << 24) | ((10 + a) << 16) | (b << 8)), 24));
      }
      fd.hosts.insert(noise.begin(), noise.end());
      fd.prefixes = noise_prefixes;
      for (std::uint32_t k = 0; k < f.noise_v6; ++k) {
        std::array<std::uint8_t, 16> bytes{0x20, 0x01, 0x0d, 0xb8};
        for (std::size_t b = 6; b < 16; ++b) bytes[b] = static_cast<std::uint8_t>(rng_.below(256));
        fd.hosts.insert(IpAddress::v6(bytes));
      }
      if (fd.hosts.empty() && fd.prefixes.empty()) {
        throw InputError(fmt::format("scenario: feed '{}' would be empty on {}; add noise_entries", f.name,
                                     (s_.start_date + d).to_string()));
      }
      if (!fd.exact) inexact.insert(f.name);
    }
  }

  // files
  write_text(out / "patterns.conf", std::string(default_pattern_pack()));
  for (std::size_t i = 0; i < nets; ++i) {
    const auto& n = s_.networks[i];
    const auto& name = n.config.network_name;
    write_text(out / "networks" / (name + ".conf"), n.config.serialize());
    for (int d = 0; d < days; ++d) {
      auto& nd = grid[i][static_cast<std::size_t>(d)];
      const auto date = (s_.start_date + d).to_string();
      std::stable_sort(nd.flows.begin(), nd.flows.end(),
                       [](const FlowRecord& a, const FlowRecord& b) { return a.timestamp < b.timestamp; });
      std::string text(kFlowHeader);
      text += '\n';
      for (const auto& r : nd.flows) text += format_flow_line(r) + '\n';
      write_text(out / "flows" / name / (date + ".csv"), text);
      if (!n.server_logs) continue;
      std::stable_sort(nd.logs.begin(), nd.logs.end(),
                       [](const LogLine& a, const LogLine& b) { return a.second < b.second; });
      std::string log;
      for (const auto& l : nd.logs) log += l.text + '\n';
      write_text(out / "logs" / name / (date + ".log"), log);
      std::stable_sort(nd.ports.begin(), nd.ports.end(),
                       [](const PortContactEvent& a, const PortContactEvent& b) { return a.timestamp < b.timestamp; });
      write_text(out / "ports" / name / (date + ".csv"), format_port_events(nd.ports));
    }
  }
  for (const auto& [name, series] : feeds) {
    for (int d = 0; d < days; ++d) {
      const auto& fd = series[static_cast<std::size_t>(d)];
      const auto date = (s_.start_date + d).to_string();
      std::string text = fmt::format("# synthetic feed {}\n# generated for {}\n\n", name, date);
      for (const auto& p : fd.prefixes) text += p.to_string() + '\n';
      for (const auto& h : fd.hosts) text += h.to_string() + '\n';
      write_text(out / "incoming" / "feeds" / name / (date + ".txt"), text);
    }
  }

  // manifest, computed from the generator's own bookkeeping
  json m;
  m["seed"] = s_.seed;
  m["start_date"] = s_.start_date.to_string();
  m["days"] = days;
  m["failure_threshold"] = s_.failure_threshold;
  m["high_score_min"] = s_.high_score_min;
  m["benign_score_max"] = s_.benign_score_max;
  m["feeds"] = json::array();
  for (const auto& f : s_.synthetic_feeds) {
    m["feeds"].push_back({{"name", f.name}, {"fraction", f.fraction_of_planted_included},
                          {"exact", !inexact.contains(f.name)}});
  }
  m["unions"] = s_.unions;

  auto union_covers = [&](const std::string& spec, int d, const IpAddress& ip) {
    for (const auto& member : UnionSpec::parse(spec).members) {
      if (feeds.at(member)[static_cast<std::size_t>(d)].covers(ip)) return true;
    }
    return false;
  };
  auto rates = [&](const IpSet& truth, int d) {
    json r;
    for (const auto& [name, series] : feeds) r[name] = ratio_json(covered(truth, series[static_cast<std::size_t>(d)]), truth.size());
    for (const auto& u : s_.unions) {
      const auto hit = std::count_if(truth.begin(), truth.end(), [&](const IpAddress& ip) { return union_covers(u, d, ip); });
      r[u] = ratio_json(static_cast<std::uint64_t>(hit), truth.size());
    }
    return r;
  };

  json& networks = m["networks"];
  std::vector<IpSet> all_attackers(nets), all_clients(nets);
  for (std::size_t i = 0; i < nets; ++i) {
    const auto& name = s_.networks[i].config.network_name;
    networks[name]["server_logs"] = s_.networks[i].server_logs;
    for (int d = 0; d < days; ++d) {
      const auto& nd = grid[i][static_cast<std::size_t>(d)];
      IpSet alerted, benign;
      for (const auto& [ip, sum] : nd.score_sum) {
        if (sum > s_.high_score_min) alerted.insert(ip);
      }
      for (const auto& [ip, mx] : nd.client_max) {
        all_clients[i].insert(ip);
        if (mx <= s_.benign_score_max) benign.insert(ip);
      }
      all_attackers[i].insert(nd.log_attackers.begin(), nd.log_attackers.end());
      json day;
      day["flows"] = nd.flows.size();
      day["scanners"] = ip_list(nd.scanners);
      day["planted_below_threshold"] = ip_list(nd.below_threshold);
      day["alerted"] = ip_list(alerted);
      day["benign_remote_clients"] = benign.size();
      day["match"]["scanner"] = rates(nd.scanners, d);
      day["match"]["alerted_high_score"] = rates(alerted, d);
      json fp;
      for (const auto& [fname, series] : feeds) fp[fname] = covered(benign, series[static_cast<std::size_t>(d)]);
      day["fp_overlap"] = fp;
      if (s_.networks[i].server_logs) {
        day["log_attackers"] = ip_list(nd.log_attackers);
        day["match"]["log_attacker"] = rates(nd.log_attackers, d);
      }
      networks[name]["days"][(s_.start_date + d).to_string()] = day;
    }
  }

  json& decay_json = m["decay"];
  for (const auto& [fname, series] : feeds) {
    for (std::size_t i = 0; i < nets; ++i) {
      json rows = json::array();
      for (int d = 0; d < days; ++d) {
        const auto& truth = grid[i][static_cast<std::size_t>(d)].scanners;
        const auto stale = covered(truth, series[0]);
        const auto daily = covered(truth, series[static_cast<std::size_t>(d)]);
        rows.push_back({{"offset", d},
                        {"date", (s_.start_date + d).to_string()},
                        {"total", truth.size()},
                        {"daily", daily},
                        {"stale", stale},
                        {"delta_count", static_cast<std::int64_t>(stale) - static_cast<std::int64_t>(daily)}});
      }
      decay_json[fname][s_.networks[i].config.network_name] = rows;
    }
  }

  if (s_.propagation) {
    const auto& pr = *s_.propagation;
    std::size_t src = 0, dst = 0;
    for (std::size_t i = 0; i < nets; ++i) {
      if (s_.networks[i].config.network_name == pr.source) src = i;
      if (s_.networks[i].config.network_name == pr.target) dst = i;
    }
    const auto& seeds = grid[src][0].scanners;
    IpSet seen;
    json points = json::array();
    for (int d = 0; d < days; ++d) {
      for (const auto& ip : grid[dst][static_cast<std::size_t>(d)].scanners) {
        if (seeds.contains(ip)) seen.insert(ip);
      }
      points.push_back({{"offset", d}, {"seen", seen.size()}, {"total", seeds.size()}});
    }
    m["propagation"] = {{"source", pr.source}, {"target", pr.target}, {"start", s_.start_date.to_string()},
                        {"numerator", pr.numerator}, {"denominator", pr.denominator}, {"lag_days", pr.lag_days},
                        {"points", points}};
    if (!propagation_plan.is_null()) m["propagation"]["plan"] = propagation_plan;
  }

  json& cv = m["cross_visit"];
  cv = json::object();
  for (std::size_t i = 0; i < nets; ++i) {
    if (!s_.networks[i].server_logs) continue;
    json row;
    for (std::size_t j = 0; j < nets; ++j) {
      if (j == i) continue;
      const auto hit = std::count_if(all_attackers[i].begin(), all_attackers[i].end(),
                                     [&](const IpAddress& ip) { return all_clients[j].contains(ip); });
      row[s_.networks[j].config.network_name] = ratio_json(static_cast<std::uint64_t>(hit), all_attackers[i].size());
    }
    cv[s_.networks[i].config.network_name] = row;
  }

  write_text(out / "manifest.json", m.dump(2) + "\n");
  return m;
}

}  // namespace

nlohmann::json generate_fixture(const Scenario& scenario, const fs::path& out) {
  scenario.validate();
  Generator g(scenario);
  return g.run(out);
}

}  // namespace bleval
