#include "bleval/log_sentinel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/regex.hpp>
#include <fmt/format.h>

namespace bleval {

struct LogPattern::Compiled {
  boost::regex re;
};

namespace {

std::size_t count_ip_groups(std::string_view regex) {
  std::size_t n = 0;
  for (std::string_view tag : {"(?<ip>", "(?P<ip>", "(?'ip'"}) {
    for (auto pos = regex.find(tag); pos != std::string_view::npos; pos = regex.find(tag, pos + 1)) {
      if (pos > 0 && regex[pos - 1] == '\\') continue;
      ++n;
    }
  }
  return n;
}

}  // namespace

LogPattern::LogPattern(std::string name, std::string service, std::string regex)
    : name_(std::move(name)), service_(std::move(service)), regex_(std::move(regex)) {
  if (name_.empty()) throw ConfigError("log pattern: empty name");
  if (service_.empty()) throw ConfigError(fmt::format("log pattern '{}': empty service", name_));
  std::size_t groups = count_ip_groups(regex_);
  if (groups != 1) {
    throw ConfigError(fmt::format("log pattern '{}': regex must contain exactly one (?<ip>...) capture, found {}",
                                  name_, groups));
  }
  try {
    compiled_ = std::make_shared<const Compiled>(Compiled{boost::regex(regex_, boost::regex::perl)});
  } catch (const boost::regex_error& e) {
    throw ConfigError(fmt::format("log pattern '{}': invalid regex: {}", name_, e.what()));
  }
}

LogPattern::~LogPattern() = default;
LogPattern::LogPattern(const LogPattern&) = default;
LogPattern& LogPattern::operator=(const LogPattern&) = default;
LogPattern::LogPattern(LogPattern&&) noexcept = default;
LogPattern& LogPattern::operator=(LogPattern&&) noexcept = default;

std::optional<IpAddress> LogPattern::match(std::string_view line) const {
  boost::match_results<std::string_view::const_iterator> m;
  if (!boost::regex_search(line.begin(), line.end(), m, compiled_->re)) return std::nullopt;
  const auto& sub = m["ip"];
  if (!sub.matched) return std::nullopt;
  return IpAddress::try_parse(sub.str());
}

std::vector<LogPattern> parse_pattern_pack(std::string_view text) {
  std::vector<LogPattern> out;
  std::string name, service, regex;
  std::size_t section_line = 0;
  auto flush = [&] {
    if (name.empty()) return;
    if (regex.empty()) throw ConfigError(fmt::format("pattern pack line {}: [{}] has no regex", section_line, name));
    out.emplace_back(name, service, regex);
    name.clear();
    service.clear();
    regex.clear();
  };

  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      flush();
      if (line.back() != ']' || line.size() < 3) throw ConfigError(fmt::format("pattern pack line {}: bad section", line_no));
      name = std::string(trim(line.substr(1, line.size() - 2)));
      section_line = line_no;
      continue;
    }
    if (name.empty()) throw ConfigError(fmt::format("pattern pack line {}: key outside a [section]", line_no));
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("pattern pack line {}: expected key = value", line_no));
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key == "service") {
      service = value;
    } else if (key == "regex") {
      regex = value;
    } else {
      throw ConfigError(fmt::format("pattern pack line {}: unknown key '{}'", line_no, key));
    }
  }
  flush();
  return out;
}

std::vector<LogPattern> load_pattern_pack(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read pattern pack {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pattern_pack(ss.str());
}

std::string_view to_string(AttackKind k) {
  return k == AttackKind::auth_bruteforce ? "auth_bruteforce" : "closed_port_probe";
}

AttackKind parse_attack_kind(std::string_view s) {
  if (s == "auth_bruteforce") return AttackKind::auth_bruteforce;
  if (s == "closed_port_probe") return AttackKind::closed_port_probe;
  throw InputError(fmt::format("unknown attack kind '{}'", s));
}

void LogTally::feed_line(std::string_view line) {
  for (const auto& p : patterns_) {
    if (auto ip = p.match(line)) {
      auto& e = per_ip_[*ip];
      ++e.count;
      e.services.insert(p.service());
      ++matched_;
      return;  // one failure per line
    }
  }
}

void LogTally::feed(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    feed_line(line);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
  }
}

void LogTally::merge(const LogTally& other) {
  for (const auto& [ip, e] : other.per_ip_) {
    auto& mine = per_ip_[ip];
    mine.count += e.count;
    mine.services.insert(e.services.begin(), e.services.end());
  }
  matched_ += other.matched_;
}

std::vector<AttackEvent> LogTally::finish(Day date, std::uint64_t failure_threshold,
                                          const PrefixIndex& whitelist) const {
  if (failure_threshold < 1) throw InputError("failure threshold must be >= 1");
  std::vector<AttackEvent> out;
  for (const auto& [ip, e] : per_ip_) {
    if (e.count < failure_threshold || whitelist.contains(ip)) continue;
    out.push_back({ip, date, AttackKind::auth_bruteforce, e.count, e.services});
  }
  return out;
}

std::vector<AttackEvent> scan_logs(std::string_view text, const std::vector<LogPattern>& patterns, Day date,
                                   std::uint64_t failure_threshold, const PrefixIndex& whitelist) {
  LogTally t(patterns);
  t.feed(text);
  return t.finish(date, failure_threshold, whitelist);
}

std::vector<PortContactEvent> parse_port_events(std::string_view text) {
  std::vector<PortContactEvent> out;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line == kPortEventHeader) continue;
    auto f = split(line, ',');
    try {
      if (f.size() != 5) throw InputError(fmt::format("expected 5 fields, got {}", f.size()));
      PortContactEvent e;
      e.timestamp = std::stoll(f[0]);
      e.remote_ip = IpAddress::parse(trim(f[1]));
      unsigned port = 0;
      auto pt = trim(f[2]);
      auto [p, ec] = std::from_chars(pt.data(), pt.data() + pt.size(), port);
      if (ec != std::errc{} || p != pt.data() + pt.size() || port < 1 || port > 65535) {
        throw InputError(fmt::format("port '{}' not in 1..65535", pt));
      }
      e.local_port = static_cast<std::uint16_t>(port);
      e.proto = parse_proto(trim(f[3]));
      if (e.proto == Proto::other) throw InputError("proto must be tcp or udp");
      auto st = trim(f[4]);
      if (st == "open") {
        e.port_state = PortState::open;
      } else if (st == "closed") {
        e.port_state = PortState::closed;
      } else {
        throw InputError(fmt::format("state '{}' must be open or closed", st));
      }
      out.push_back(e);
    } catch (const std::invalid_argument&) {
      throw InputError(fmt::format("port event line {}: bad timestamp", line_no));
    } catch (const std::out_of_range&) {
      throw InputError(fmt::format("port event line {}: bad timestamp", line_no));
    } catch (const InputError& e) {
      throw InputError(fmt::format("port event line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

std::string format_port_events(const std::vector<PortContactEvent>& events) {
  std::string out(kPortEventHeader);
  out += '\n';
  for (const auto& e : events) {
    out += fmt::format("{},{},{},{},{}\n", e.timestamp, e.remote_ip.to_string(), e.local_port, to_string(e.proto),
                       e.port_state == PortState::open ? "open" : "closed");
  }
  return out;
}

std::vector<AttackEvent> scan_port_events(const std::vector<PortContactEvent>& events, Day date,
                                          const PrefixIndex& whitelist) {
  std::map<IpAddress, AttackEvent> per_ip;
  for (const auto& e : events) {
    if (e.port_state != PortState::closed || !date.contains_epoch(e.timestamp)) continue;
    if (whitelist.contains(e.remote_ip)) continue;
    auto [it, fresh] = per_ip.try_emplace(e.remote_ip);
    if (fresh) it->second = AttackEvent{e.remote_ip, date, AttackKind::closed_port_probe, 0, {}};
    ++it->second.evidence_count;
    it->second.services.insert(fmt::format("{}/{}", to_string(e.proto), e.local_port));
  }
  std::vector<AttackEvent> out;
  out.reserve(per_ip.size());
  for (auto& [ip, ev] : per_ip) out.push_back(std::move(ev));
  return out;
}

std::string format_events(const std::vector<AttackEvent>& events) {
  std::string out(kEventHeader);
  out += '\n';
  for (const auto& e : events) {
    std::string services;
    for (const auto& s : e.services) services += (services.empty() ? "" : ";") + s;
    out += fmt::format("{},{},{},{},{}\n", e.date.to_string(), e.remote_ip.to_string(), to_string(e.kind),
                       e.evidence_count, services);
  }
  return out;
}

std::vector<AttackEvent> parse_events(std::string_view text) {
  std::vector<AttackEvent> out;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line == kEventHeader) continue;
    auto f = split(line, ',');
    if (f.size() != 5) throw InputError(fmt::format("event line {}: expected 5 fields", line_no));
    AttackEvent e;
    e.date = Day::parse(f[0]);
    e.remote_ip = IpAddress::parse(f[1]);
    e.kind = parse_attack_kind(f[2]);
    try {
      e.evidence_count = std::stoull(f[3]);
    } catch (const std::exception&) {
      throw InputError(fmt::format("event line {}: bad evidence count", line_no));
    }
    for (const auto& s : split(f[4], ';')) {
      if (!s.empty()) e.services.insert(s);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace bleval
