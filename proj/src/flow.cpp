#include "bleval/flow.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace bleval {

namespace fs = std::filesystem;

std::string_view to_string(Proto p) {
  switch (p) {
    case Proto::tcp: return "tcp";
    case Proto::udp: return "udp";
    case Proto::other: return "other";
  }
  return "other";
}

Proto parse_proto(std::string_view text) {
  if (text == "tcp" || text == "TCP" || text == "6") return Proto::tcp;
  if (text == "udp" || text == "UDP" || text == "17") return Proto::udp;
  if (text == "other") return Proto::other;
  unsigned n = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (!text.empty() && ec == std::errc{} && p == text.data() + text.size() && n <= 255) return Proto::other;
  throw InputError(fmt::format("invalid protocol '{}'", text));
}

namespace {

template <typename T>
T parse_uint(std::string_view text, std::string_view field) {
  T v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || p != text.data() + text.size()) {
    throw InputError(fmt::format("field {}: '{}' is not a valid unsigned integer", field, text));
  }
  return v;
}

std::vector<IpPrefix> parse_prefix_list(std::string_view value) {
  std::vector<IpPrefix> out;
  for (const auto& item : split(value, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(IpPrefix::parse(t));
  }
  return out;
}

std::string join_prefixes(const std::vector<IpPrefix>& ps) {
  std::string out;
  for (const auto& p : ps) {
    if (!out.empty()) out += ", ";
    out += p.to_string();
  }
  return out;
}

}  // namespace

FlowRecord parse_flow_line(std::string_view line) {
  auto f = split(line, ',');
  if (f.size() != 11) throw InputError(fmt::format("expected 11 fields, got {}", f.size()));
  for (auto& s : f) s = std::string(trim(s));

  FlowRecord r;
  auto ts = trim(f[0]);
  auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), r.timestamp);
  if (ts.empty() || ec != std::errc{} || p != ts.data() + ts.size() || r.timestamp < 0) {
    throw InputError(fmt::format("field ts: '{}' is not a valid epoch timestamp", ts));
  }
  r.proto = parse_proto(f[1]);
  r.client_ip = IpAddress::parse(f[2]);
  r.server_ip = IpAddress::parse(f[3]);
  r.client_port = parse_uint<std::uint16_t>(f[4], "client_port");
  r.server_port = parse_uint<std::uint16_t>(f[5], "server_port");
  r.client_to_server_pkts = parse_uint<std::uint64_t>(f[6], "c2s_pkts");
  r.server_to_client_pkts = parse_uint<std::uint64_t>(f[7], "s2c_pkts");
  r.client_to_server_bytes = parse_uint<std::uint64_t>(f[8], "c2s_bytes");
  r.server_to_client_bytes = parse_uint<std::uint64_t>(f[9], "s2c_bytes");
  r.cyberscore = parse_uint<std::uint64_t>(f[10], "cyberscore");
  if (r.proto != Proto::other && (r.client_port == 0 || r.server_port == 0)) {
    throw InputError(fmt::format("port 0 on a {} flow", to_string(r.proto)));
  }
  return r;
}

std::string format_flow_line(const FlowRecord& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", r.timestamp, to_string(r.proto), r.client_ip.to_string(),
                     r.server_ip.to_string(), r.client_port, r.server_port, r.client_to_server_pkts,
                     r.server_to_client_pkts, r.client_to_server_bytes, r.server_to_client_bytes, r.cyberscore);
}

void NetworkConfig::validate() const {
  if (network_name.empty()) throw InputError("network config: name must not be empty");
  if (local_prefixes.empty()) {
    throw InputError(fmt::format("network config '{}': at least one local prefix is required", network_name));
  }
  if (scanner_threshold < 1) {
    throw InputError(fmt::format("network config '{}': scanner_threshold must be >= 1", network_name));
  }
}

NetworkConfig NetworkConfig::parse(std::string_view text) {
  NetworkConfig c;
  bool ports_seen = false;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(std::string_view(raw).substr(0, raw.find('#')));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError(fmt::format("network config line {}: expected key = value", line_no));
    }
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    try {
      if (key == "name") {
        c.network_name = std::string(value);
      } else if (key == "local") {
        auto ps = parse_prefix_list(value);
        c.local_prefixes.insert(c.local_prefixes.end(), ps.begin(), ps.end());
      } else if (key == "admin") {
        auto ps = parse_prefix_list(value);
        c.admin_whitelist.insert(c.admin_whitelist.end(), ps.begin(), ps.end());
      } else if (key == "silent") {
        auto ps = parse_prefix_list(value);
        c.silent_hosts.insert(c.silent_hosts.end(), ps.begin(), ps.end());
      } else if (key == "exclude_ports") {
        if (!ports_seen) c.excluded_ports.clear();
        ports_seen = true;
        for (const auto& item : split(value, ',')) {
          auto t = trim(item);
          if (!t.empty() && t != "none") c.excluded_ports.insert(parse_uint<std::uint16_t>(t, "exclude_ports"));
        }
      } else if (key == "scanner_threshold") {
        c.scanner_threshold = parse_uint<std::uint32_t>(value, "scanner_threshold");
      } else {
        throw InputError(fmt::format("unknown key '{}'", key));
      }
    } catch (const InputError& e) {
      throw InputError(fmt::format("network config line {}: {}", line_no, e.what()));
    }
  }
  c.validate();
  return c;
}

NetworkConfig NetworkConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read network config {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string NetworkConfig::serialize() const {
  std::string out = fmt::format("name = {}\nlocal = {}\n", network_name, join_prefixes(local_prefixes));
  std::string ports;
  for (auto p : excluded_ports) ports += (ports.empty() ? "" : ",") + std::to_string(p);
  out += fmt::format("exclude_ports = {}\n", ports.empty() ? "none" : ports);
  out += fmt::format("scanner_threshold = {}\n", scanner_threshold);
  if (!admin_whitelist.empty()) out += fmt::format("admin = {}\n", join_prefixes(admin_whitelist));
  if (!silent_hosts.empty()) out += fmt::format("silent = {}\n", join_prefixes(silent_hosts));
  return out;
}

NetworkView::NetworkView(NetworkConfig config)
    : config_(std::move(config)),
      local_(config_.local_prefixes),
      admin_(config_.admin_whitelist),
      silent_(config_.silent_hosts) {
  config_.validate();
}

EndpointRole classify_endpoint(const IpAddress& addr, const NetworkConfig& config) {
  for (const auto& p : config.local_prefixes) {
    if (p.covers(addr)) return EndpointRole::local;
  }
  return EndpointRole::remote;
}

DailyFlowSet::DailyFlowSet(std::shared_ptr<const NetworkView> network, Day date)
    : network_(std::move(network)), date_(date) {}

void DailyFlowSet::add(const FlowRecord& r) {
  if (!date_.contains_epoch(r.timestamp)) {
    throw InputError(fmt::format("timestamp {} outside {}", r.timestamp, date_.to_string()));
  }
  if (network_->is_local(r.client_ip)) {
    auto& h = activity_[r.client_ip];
    h.tx_pkts += r.client_to_server_pkts;
    h.rx_pkts += r.server_to_client_pkts;
    ++h.flows;
  }
  if (network_->is_local(r.server_ip)) {
    auto& h = activity_[r.server_ip];
    h.rx_pkts += r.client_to_server_pkts;
    h.tx_pkts += r.server_to_client_pkts;
    ++h.flows;
  }
  flows_.push_back(r);
}

DailyFlowSet load_day_text(std::string_view text, const NetworkConfig& config, Day date) {
  DailyFlowSet day(std::make_shared<const NetworkView>(config), date);
  if (trim(text).empty()) return day;
  std::size_t records = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kFlowHeader) {
        throw InputError(fmt::format("flow file for {}: line 1 must be the header '{}'", date.to_string(), kFlowHeader));
      }
      header_seen = true;
      continue;
    }
    if (trim(line).empty()) continue;
    ++records;
    FlowRecord r;
    try {
      r = parse_flow_line(line);
    } catch (const InputError& e) {
      ++day.malformed_;
      day.diagnostics_.push_back({line_no, e.what()});
      continue;
    }
    if (!date.contains_epoch(r.timestamp)) {
      ++day.out_of_window_;
      day.diagnostics_.push_back({line_no, fmt::format("timestamp {} outside {}", r.timestamp, date.to_string())});
      continue;
    }
    day.add(r);
  }
  if (day.malformed_ * 100 > records) {
    throw InputError(fmt::format("flow file for {}: {} of {} records malformed (>1%); first problem at line {}: {}",
                                 date.to_string(), day.malformed_, records, day.diagnostics_.front().line_number,
                                 day.diagnostics_.front().reason));
  }
  return day;
}

DailyFlowSet load_day(const fs::path& path, const NetworkConfig& config, Day date) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read flow file {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  try {
    return load_day_text(text, config, date);
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::unordered_set<IpAddress> receive_only_hosts(const DailyFlowSet& day) {
  std::unordered_set<IpAddress> out;
  for (const auto& [addr, act] : day.local_activity()) {
    if (act.rx_pkts > 0 && act.tx_pkts == 0 && day.network().may_be_silent(addr)) out.insert(addr);
  }
  return out;
}

std::unordered_set<IpAddress> remote_clients(const DailyFlowSet& day) {
  std::unordered_set<IpAddress> out;
  for (const auto& f : day.flows()) {
    if (!day.network().is_local(f.client_ip)) out.insert(f.client_ip);
  }
  return out;
}

}  // namespace bleval
