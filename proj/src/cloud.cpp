#include "bleval/cloud.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>

namespace bleval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool truthy(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>() > 0;
  if (v.is_string()) {
    auto s = v.get<std::string>();
    return !s.empty() && s != "unknown";
  }
  if (v.is_array() || v.is_object()) return !v.empty();
  return false;
}

std::string substitute_ip(std::string tmpl, const IpAddress& ip) {
  const std::string needle = "{ip}";
  const std::string value = ip.to_string();
  for (auto pos = tmpl.find(needle); pos != std::string::npos; pos = tmpl.find(needle, pos + value.size())) {
    tmpl.replace(pos, needle.size(), value);
  }
  return tmpl;
}

const json* find_pointer(const json& body, const std::string& pointer) {
  try {
    json::json_pointer p(pointer);
    if (!body.contains(p)) return nullptr;
    return &body.at(p);
  } catch (const json::exception&) {
    return nullptr;
  }
}

}  // namespace

bool ConsensusRule::holds(const json& signal) const {
  switch (kind) {
    case Kind::min_matches:
      return signal.is_number() && signal.get<double>() >= static_cast<double>(number);
    case Kind::accuracy_equals:
      return signal.is_number() && signal.get<double>() == static_cast<double>(number);
    case Kind::classification_equals:
      return signal.is_string() && signal.get<std::string>() == text;
  }
  return false;
}

std::string ConsensusRule::describe() const {
  switch (kind) {
    case Kind::min_matches: return fmt::format("min_matches {}", number);
    case Kind::accuracy_equals: return fmt::format("accuracy_equals {}", number);
    case Kind::classification_equals: return fmt::format("classification_equals \"{}\"", text);
  }
  return {};
}

void CloudProviderConfig::validate() const {
  if (provider_name.empty()) throw InputError("cloud provider: provider_name is required");
  if (base_url.empty()) throw InputError(fmt::format("cloud provider '{}': base_url is required", provider_name));
  if (budget.limit == 0) throw InputError(fmt::format("cloud provider '{}': budget limit must be > 0", provider_name));
  if (signal_field.empty()) throw InputError(fmt::format("cloud provider '{}': signal_field is required", provider_name));
  if (method != "GET" && method != "POST") {
    throw InputError(fmt::format("cloud provider '{}': method must be GET or POST", provider_name));
  }
  if (!base_url.starts_with("http://") && !base_url.starts_with("https://")) {
    throw InputError(fmt::format("cloud provider '{}': base_url must start with http:// or https://", provider_name));
  }
  const bool in_path = path_template.find("{ip}") != std::string::npos;
  const bool in_body = method == "POST" && body_template.find("{ip}") != std::string::npos;
  if (!in_path && !in_body) {
    throw InputError(fmt::format("cloud provider '{}': path_template{} must contain {{ip}}", provider_name,
                                 method == "POST" ? " or body_template" : ""));
  }
  for (const auto* field : {&signal_field, &listed_field}) {
    if (field->empty()) continue;
    try {
      json::json_pointer ptr(*field);
    } catch (const json::exception&) {
      throw InputError(fmt::format("cloud provider '{}': '{}' is not a JSON pointer (e.g. /data/score)", provider_name,
                                   *field));
    }
  }
}

CloudProviderConfig CloudProviderConfig::from_json(const json& j) {
  CloudProviderConfig c;
  try {
    c.provider_name = j.at("provider_name").get<std::string>();
    c.base_url = j.at("base_url").get<std::string>();
    c.path_template = j.value("path_template", c.path_template);
    c.method = j.value("method", c.method);
    c.body_template = j.value("body_template", std::string{});
    c.auth_env = j.value("auth_env", std::string{});
    c.auth_header = j.value("auth_header", c.auth_header);
    if (j.contains("api_key")) {
      throw InputError("API keys must come from the environment variable named by auth_env, not the config file");
    }
    const auto& b = j.at("budget");
    c.budget.limit = b.at("limit").get<std::uint64_t>();
    auto window = b.at("window").get<std::string>();
    if (window == "day") {
      c.budget.window = BudgetWindow::day;
    } else if (window == "week") {
      c.budget.window = BudgetWindow::week;
    } else {
      throw InputError(fmt::format("budget window '{}' must be day or week", window));
    }
    const auto& rule = j.at("consensus_rule");
    if (!rule.is_object() || rule.size() != 1) {
      throw InputError("consensus_rule must hold exactly one of min_matches, accuracy_equals, classification_equals");
    }
    if (rule.contains("min_matches")) {
      c.consensus_rule = ConsensusRule::min_matches(rule["min_matches"].get<std::int64_t>());
    } else if (rule.contains("accuracy_equals")) {
      c.consensus_rule = ConsensusRule::accuracy_equals(rule["accuracy_equals"].get<std::int64_t>());
    } else if (rule.contains("classification_equals")) {
      c.consensus_rule = ConsensusRule::classification_equals(rule["classification_equals"].get<std::string>());
    } else {
      throw InputError(fmt::format("unknown consensus rule {}", rule.dump()));
    }
    c.signal_field = j.at("signal_field").get<std::string>();
    c.listed_field = j.value("listed_field", std::string{});
  } catch (const json::exception& e) {
    throw InputError(fmt::format("cloud provider config: {}", e.what()));
  }
  c.validate();
  return c;
}

CloudProviderConfig CloudProviderConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read provider config {}", path.string()));
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

CloudVerdict map_response(const CloudProviderConfig& cfg, const IpAddress& ip, const json& body, std::int64_t now) {
  const json* signal = find_pointer(body, cfg.signal_field);
  if (signal == nullptr) {
    throw TransportError(fmt::format("{}: response for {} lacks signal field {}", cfg.provider_name, ip.to_string(),
                                     cfg.signal_field));
  }
  CloudVerdict v;
  v.ip = ip;
  v.provider_name = cfg.provider_name;
  v.raw_signal = *signal;
  v.queried_at = now;
  v.consensus = cfg.consensus_rule.holds(*signal);
  if (!cfg.listed_field.empty()) {
    const json* listed = find_pointer(body, cfg.listed_field);
    v.listed = listed != nullptr && truthy(*listed);
  } else {
    v.listed = truthy(*signal);
  }
  // a consensus verdict is a listing by definition
  v.listed = v.listed || v.consensus;
  return v;
}

namespace {

json verdict_to_json(const CloudVerdict& v) {
  return json{{"provider", v.provider_name}, {"ip", v.ip.to_string()}, {"listed", v.listed},
              {"consensus", v.consensus},    {"raw", v.raw_signal},        {"queried_at", v.queried_at}};
}

void append_line(const fs::path& path, const std::string& line) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw InputError(fmt::format("cannot append to {}", path.string()));
  out << line << '\n';
  out.flush();
  if (!out) throw InputError(fmt::format("write to {} failed", path.string()));
}

}  // namespace

VerdictCache::VerdictCache(fs::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      CloudVerdict v;
      v.provider_name = j.at("provider").get<std::string>();
      v.ip = IpAddress::parse(j.at("ip").get<std::string>());
      v.listed = j.at("listed").get<bool>();
      v.consensus = j.at("consensus").get<bool>();
      v.raw_signal = j.at("raw");
      v.queried_at = j.at("queried_at").get<std::int64_t>();
      entries_[{v.provider_name, v.ip}] = v;
    } catch (const std::exception&) {
      // a torn final line after a crash; everything before it is intact
    }
  }
}

std::optional<CloudVerdict> VerdictCache::get(const std::string& provider, const IpAddress& ip,
                                              std::optional<std::int64_t> max_age_seconds, std::int64_t now) const {
  auto it = entries_.find({provider, ip});
  if (it == entries_.end()) return std::nullopt;
  if (max_age_seconds && now - it->second.queried_at > *max_age_seconds) return std::nullopt;
  CloudVerdict v = it->second;
  v.from_cache = true;
  return v;
}

void VerdictCache::put(const CloudVerdict& v) {
  append_line(path_, verdict_to_json(v).dump());
  CloudVerdict stored = v;
  stored.from_cache = false;
  entries_[{v.provider_name, v.ip}] = stored;
}

BudgetLedger::BudgetLedger(fs::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    auto f = split(trim(line), ',');
    if (f.size() != 4) continue;
    try {
      ++spent_[{f[0], Day::parse(f[1])}];
    } catch (const InputError&) {
    }
  }
}

std::uint64_t BudgetLedger::spent(const std::string& provider, Day window_start) const {
  auto it = spent_.find({provider, window_start});
  return it == spent_.end() ? 0 : it->second;
}

void BudgetLedger::record(const std::string& provider, Day window_start, const IpAddress& ip, std::int64_t ts) {
  append_line(path_, fmt::format("{},{},{},{}", provider, window_start.to_string(), ts, ip.to_string()));
  ++spent_[{provider, window_start}];
}

std::int64_t system_epoch_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

CloudClient::CloudClient(CloudProviderConfig config, const fs::path& state_dir, EpochClock clock,
                         std::optional<std::int64_t> max_age_seconds)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      max_age_(max_age_seconds),
      cache_(state_dir / "cloud" / (config_.provider_name + ".cache.jsonl")),
      ledger_(state_dir / "cloud" / (config_.provider_name + ".ledger.csv")) {
  config_.validate();
}

Day CloudClient::current_window_start() const {
  Day today = Day::from_epoch_seconds(clock_());
  return config_.budget.window == BudgetWindow::day ? today : today.week_start();
}

std::uint64_t CloudClient::spent_in_current_window() const {
  std::lock_guard lock(mu_);
  return ledger_.spent(config_.provider_name, current_window_start());
}

CloudVerdict CloudClient::lookup(const IpAddress& ip) {
  std::lock_guard lock(mu_);
  return lookup_locked(ip);
}

CloudVerdict CloudClient::lookup_locked(const IpAddress& ip) {
  const std::int64_t now = clock_();
  if (auto hit = cache_.get(config_.provider_name, ip, max_age_, now)) return *hit;

  const Day window = current_window_start();
  if (ledger_.spent(config_.provider_name, window) >= config_.budget.limit) {
    throw BudgetExhaustedError(fmt::format("{}: budget of {} requests per {} starting {} is exhausted; {} not queried",
                                           config_.provider_name, config_.budget.limit,
                                           config_.budget.window == BudgetWindow::day ? "day" : "week",
                                           window.to_string(), ip.to_string()));
  }

  httplib::Client http(config_.base_url);
  http.set_connection_timeout(10);
  http.set_read_timeout(30);
  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    const char* key = std::getenv(config_.auth_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw InputError(fmt::format("{}: environment variable {} holding the API key is not set",
                                   config_.provider_name, config_.auth_env));
    }
    headers.emplace(config_.auth_header, key);
  }
  const std::string path = substitute_ip(config_.path_template, ip);
  auto res = config_.method == "POST"
                 ? http.Post(path, headers, substitute_ip(config_.body_template, ip), "application/json")
                 : http.Get(path, headers);
  if (!res) {
    throw TransportError(fmt::format("{}: request for {} failed: {}", config_.provider_name, ip.to_string(),
                                     httplib::to_string(res.error())));
  }
  // a response arrived, so the provider counted it
  ledger_.record(config_.provider_name, window, ip, now);

  CloudVerdict v;
  if (res->status == 404) {
    v = CloudVerdict{ip, config_.provider_name, false, false, json("not_found"), now, false};
  } else if (res->status != 200) {
    throw TransportError(fmt::format("{}: HTTP {} for {}", config_.provider_name, res->status, ip.to_string()));
  } else {
    json body;
    try {
      body = json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw TransportError(fmt::format("{}: undecodable response for {}: {}", config_.provider_name, ip.to_string(),
                                       e.what()));
    }
    v = map_response(config_, ip, body, now);
  }
  cache_.put(v);
  return v;
}

BatchSummary CloudClient::batch_lookup(std::span<const IpAddress> ips) {
  std::lock_guard lock(mu_);
  BatchSummary s;
  bool exhausted = false;
  for (const auto& ip : ips) {
    if (exhausted) {
      if (auto hit = cache_.get(config_.provider_name, ip, max_age_, clock_())) {
        ++s.from_cache;
        s.verdicts.push_back(*hit);
      } else {
        ++s.unserved;
      }
      continue;
    }
    const std::uint64_t before = ledger_.spent(config_.provider_name, current_window_start());
    try {
      auto v = lookup_locked(ip);
      (v.from_cache ? s.from_cache : s.from_network) += 1;
      s.verdicts.push_back(std::move(v));
    } catch (const BudgetExhaustedError& e) {
      exhausted = true;
      ++s.unserved;
      s.failures.emplace_back(ip, e.what());
    } catch (const TransportError& e) {
      ++s.unserved;
      s.failures.emplace_back(ip, e.what());
    }
    s.budget_spent += ledger_.spent(config_.provider_name, current_window_start()) - before;
  }
  return s;
}

std::string verdicts_csv(std::span<const CloudVerdict> verdicts) {
  std::string out(kVerdictCsvHeader);
  out += '\n';
  for (const auto& v : verdicts) {
    std::string raw = v.raw_signal.is_string() ? v.raw_signal.get<std::string>() : v.raw_signal.dump();
    for (auto& c : raw) {
      if (c == ',' || c == '\n') c = ' ';
    }
    out += fmt::format("{},{},{},{},{},{},{}\n", v.ip.to_string(), v.provider_name, v.listed ? 1 : 0,
                       v.consensus ? 1 : 0, raw, v.queried_at, v.from_cache ? 1 : 0);
  }
  return out;
}

}  // namespace bleval
