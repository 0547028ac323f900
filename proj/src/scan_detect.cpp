#include "bleval/scan_detect.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

namespace bleval {

namespace {

struct Contacts {
  std::unordered_set<IpAddress> hosts;
  std::uint64_t flows = 0;
};

}  // namespace

std::vector<ScannerVerdict> detect_scanners(const DailyFlowSet& day, const NetworkConfig& config) {
  const auto silent = receive_only_hosts(day);
  const NetworkView& net = day.network();
  const PrefixIndex whitelist(config.admin_whitelist);

  std::unordered_map<IpAddress, Contacts> by_remote;
  for (const auto& f : day.flows()) {
    if (f.proto != Proto::tcp) continue;
    if (config.excluded_ports.contains(f.server_port)) continue;
    if (net.is_local(f.client_ip) || !silent.contains(f.server_ip)) continue;
    if (whitelist.contains(f.client_ip) || net.is_whitelisted(f.client_ip)) continue;
    auto& c = by_remote[f.client_ip];
    c.hosts.insert(f.server_ip);
    ++c.flows;
  }

  std::vector<ScannerVerdict> out;
  for (const auto& [remote, c] : by_remote) {
    if (c.hosts.size() >= config.scanner_threshold) {
      out.push_back({remote, day.date(), c.hosts.size(), c.flows, day.network_name()});
    }
  }
  std::sort(out.begin(), out.end(), [](const ScannerVerdict& a, const ScannerVerdict& b) {
    if (a.distinct_receive_only_contacted != b.distinct_receive_only_contacted) {
      return a.distinct_receive_only_contacted > b.distinct_receive_only_contacted;
    }
    return a.remote_ip < b.remote_ip;
  });
  return out;
}

std::string format_verdicts(const std::vector<ScannerVerdict>& verdicts) {
  std::string out(kVerdictHeader);
  out += '\n';
  for (const auto& v : verdicts) {
    out += fmt::format("{},{},{},{},{}\n", v.date.to_string(), v.network_name, v.remote_ip.to_string(),
                       v.distinct_receive_only_contacted, v.evidence_flow_count);
  }
  return out;
}

std::vector<ScannerVerdict> parse_verdicts(std::string_view text) {
  std::vector<ScannerVerdict> out;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line == kVerdictHeader) continue;
    auto f = split(line, ',');
    if (f.size() != 5) throw InputError(fmt::format("verdict line {}: expected 5 fields", line_no));
    ScannerVerdict v;
    v.date = Day::parse(f[0]);
    v.network_name = f[1];
    v.remote_ip = IpAddress::parse(f[2]);
    try {
      v.distinct_receive_only_contacted = std::stoull(f[3]);
      v.evidence_flow_count = std::stoull(f[4]);
    } catch (const std::exception&) {
      throw InputError(fmt::format("verdict line {}: bad counts", line_no));
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace bleval
