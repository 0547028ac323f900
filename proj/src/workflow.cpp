#include "bleval/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include <fmt/format.h>

#include "bleval/cloud.hpp"
#include "bleval/report.hpp"
#include "bleval/scenario.hpp"

namespace bleval {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require(const fs::path& path, std::string_view what, std::string_view hint) {
  if (!fs::exists(path)) throw InputError(fmt::format("missing {}: {} ({})", what, path.string(), hint));
}

std::vector<Day> dated_files(const fs::path& dir, std::string_view ext) {
  std::vector<Day> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ext) out.push_back(Day::parse(e.path().stem().string()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string range_tag(DateRange r) {
  return r.from == r.to ? r.from.to_string() : fmt::format("{}_{}", r.from.to_string(), r.to.to_string());
}

std::vector<UnionSpec> parse_unions(const std::vector<std::string>& specs) {
  std::vector<UnionSpec> out;
  for (const auto& s : specs) out.push_back(UnionSpec::parse(s));
  return out;
}

std::vector<BlacklistSnapshot> load_feeds(const Store& store, const std::vector<std::string>& names, Day d) {
  std::vector<BlacklistSnapshot> out;
  for (const auto& n : names) out.push_back(store.feed(n, d));
  return out;
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.txt`; returns the table.
std::string emit(const Store& store, const std::string& command, const std::string& stem, const std::string& csv,
                 const std::string& table) {
  const auto dir = store.out_dir(command);
  write_file_atomic(dir / (stem + ".csv"), csv);
  write_file_atomic(dir / (stem + ".txt"), table);
  return table;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(fmt::format("cannot write {}", tmp.string()));
    out << text;
    out.flush();
    if (!out) throw InputError(fmt::format("write to {} failed", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::vector<Day> DateRange::days() const {
  if (to < from) throw InputError(fmt::format("--to {} precedes --from {}", to.to_string(), from.to_string()));
  std::vector<Day> out;
  for (Day d = from; d <= to; d = d + 1) out.push_back(d);
  return out;
}

Store::Store(fs::path root) : root_(std::move(root)), feeds_(root_) {}

fs::path Store::network_path(const std::string& net) const { return root_ / "networks" / (net + ".conf"); }
fs::path Store::flows_path(const std::string& net, Day d) const {
  return root_ / "flows" / net / (d.to_string() + ".csv");
}
fs::path Store::logs_path(const std::string& net, Day d) const { return root_ / "logs" / net / (d.to_string() + ".log"); }
fs::path Store::ports_path(const std::string& net, Day d) const {
  return root_ / "ports" / net / (d.to_string() + ".csv");
}
fs::path Store::detections_path(const std::string& net, Day d) const {
  return root_ / "detections" / net / (d.to_string() + ".csv");
}
fs::path Store::events_path(const std::string& net, Day d) const {
  return root_ / "events" / net / (d.to_string() + ".csv");
}

std::vector<std::string> Store::networks() const {
  std::vector<std::string> out;
  const auto dir = root_ / "networks";
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".conf") out.push_back(e.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

NetworkConfig Store::network(const std::string& net) const {
  const auto path = network_path(net);
  require(path, fmt::format("configuration for network '{}'", net), "ingest it with `bleval ingest --network-config`");
  auto cfg = NetworkConfig::load(path);
  if (cfg.network_name != net) {
    throw InputError(fmt::format("{} names network '{}', expected '{}'", path.string(), cfg.network_name, net));
  }
  return cfg;
}

std::vector<Day> Store::flow_days(const std::string& net) const { return dated_files(root_ / "flows" / net, ".csv"); }

DailyFlowSet Store::flows(const std::string& net, Day d) const {
  const auto path = flows_path(net, d);
  require(path, fmt::format("flows for network '{}' on {}", net, d.to_string()), "ingest them with `bleval ingest`");
  return load_day(path, network(net), d);
}

std::vector<ScannerVerdict> Store::detections(const std::string& net, Day d) const {
  const auto path = detections_path(net, d);
  require(path, fmt::format("scanner detections for network '{}' on {}", net, d.to_string()),
          fmt::format("run `bleval detect --network {} --date {}`", net, d.to_string()));
  return parse_verdicts(read_text(path));
}

bool Store::has_events(const std::string& net, Day d) const { return fs::exists(events_path(net, d)); }

std::vector<AttackEvent> Store::events(const std::string& net, Day d) const {
  const auto path = events_path(net, d);
  require(path, fmt::format("attack events for network '{}' on {}", net, d.to_string()),
          "ingest logs or port events, then run `bleval detect`");
  return parse_events(read_text(path));
}

std::vector<LogPattern> Store::patterns() const {
  if (fs::exists(patterns_path())) return load_pattern_pack(patterns_path());
  return parse_pattern_pack(default_pattern_pack());
}

BlacklistSnapshot Store::feed(const std::string& name, Day d) const { return feeds_.load(name, d); }

std::vector<std::string> Store::feed_names(const std::vector<std::string>& requested) const {
  if (!requested.empty()) return requested;
  auto all = feeds_.feeds();
  if (all.empty()) throw InputError(fmt::format("no feeds in {}; ingest some with `bleval ingest`", root_.string()));
  return all;
}

IpSet Store::ground_truth(const std::string& net, Day d, GroundTruthKind kind, std::uint64_t score_min) const {
  IpSet out;
  switch (kind) {
    case GroundTruthKind::scanner:
      for (const auto& v : detections(net, d)) out.insert(v.remote_ip);
      break;
    case GroundTruthKind::log_attacker:
      for (const auto& e : events(net, d)) out.insert(e.remote_ip);
      break;
    case GroundTruthKind::alerted_high_score:
      out = high_score_hosts(flows(net, d), score_min);
      break;
  }
  return out;
}

std::string ingest_network(const Store& store, const fs::path& file) {
  auto cfg = NetworkConfig::load(file);
  write_file_atomic(store.network_path(cfg.network_name), cfg.serialize());
  return fmt::format("network {}: {} local prefixes, {} admin prefixes, threshold {}\n", cfg.network_name,
                     cfg.local_prefixes.size(), cfg.admin_whitelist.size(), cfg.scanner_threshold);
}

std::string ingest_feed(const Store& store, const std::string& feed, Day d, const fs::path& file) {
  std::string text;
  try {
    text = read_text(file);
  } catch (const InputError&) {
    throw InputError(fmt::format("feed '{}' on {}: cannot read {}", feed, d.to_string(), file.string()));
  }
  auto snap = parse_blacklist(text, feed, d);
  auto st = store.feeds().save(snap);
  return fmt::format("feed {} {}: {} entries from {} lines, {} diagnostics, churn {}\n", feed, d.to_string(),
                     st.entry_count, st.raw_line_count, snap.diagnostics().size(),
                     st.churn_vs_previous_day ? format_ratio_cell(*st.churn_vs_previous_day) : std::string(kUndefined));
}

std::string ingest_flows(const Store& store, const std::string& net, Day d, const fs::path& file) {
  auto cfg = store.network(net);
  auto day = load_day(file, cfg, d);
  std::string text(kFlowHeader);
  text += '\n';
  for (const auto& r : day.flows()) text += format_flow_line(r) + '\n';
  write_file_atomic(store.flows_path(net, d), text);
  return fmt::format("flows {} {}: {} records, {} malformed, {} outside the day, {} local hosts\n", net, d.to_string(),
                     day.flows().size(), day.malformed_count(), day.out_of_window_count(),
                     day.local_activity().size());
}

std::string ingest_logs(const Store& store, const std::string& net, Day d, const fs::path& file) {
  store.network(net);
  auto text = read_text(file);
  write_file_atomic(store.logs_path(net, d), text);
  return fmt::format("logs {} {}: {} lines\n", net, d.to_string(), std::count(text.begin(), text.end(), '\n'));
}

std::string ingest_ports(const Store& store, const std::string& net, Day d, const fs::path& file) {
  store.network(net);
  auto events = parse_port_events(read_text(file));
  write_file_atomic(store.ports_path(net, d), format_port_events(events));
  const auto closed = std::count_if(events.begin(), events.end(),
                                    [](const PortContactEvent& e) { return e.port_state == PortState::closed; });
  return fmt::format("ports {} {}: {} contacts, {} on closed ports\n", net, d.to_string(), events.size(), closed);
}

std::string ingest_patterns(const Store& store, const fs::path& file) {
  auto text = read_text(file);
  auto patterns = parse_pattern_pack(text);
  write_file_atomic(store.patterns_path(), text);
  return fmt::format("patterns: {} matchers\n", patterns.size());
}

std::string ingest_tree(const Store& store, const fs::path& source) {
  if (!fs::is_directory(source)) throw InputError(fmt::format("{} is not a directory", source.string()));
  std::string out;
  auto sorted_dirs = [](const fs::path& dir) {
    std::vector<fs::path> v;
    if (fs::exists(dir)) {
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) v.push_back(e.path());
      }
    }
    std::sort(v.begin(), v.end());
    return v;
  };
  if (fs::exists(source / "patterns.conf")) out += ingest_patterns(store, source / "patterns.conf");
  if (fs::exists(source / "networks")) {
    std::vector<fs::path> confs;
    for (const auto& e : fs::directory_iterator(source / "networks")) {
      if (e.path().extension() == ".conf") confs.push_back(e.path());
    }
    std::sort(confs.begin(), confs.end());
    for (const auto& c : confs) out += ingest_network(store, c);
  }
  for (const auto& dir : sorted_dirs(source / "flows")) {
    for (Day d : dated_files(dir, ".csv")) {
      out += ingest_flows(store, dir.filename().string(), d, dir / (d.to_string() + ".csv"));
    }
  }
  for (const auto& dir : sorted_dirs(source / "logs")) {
    for (Day d : dated_files(dir, ".log")) {
      out += ingest_logs(store, dir.filename().string(), d, dir / (d.to_string() + ".log"));
    }
  }
  for (const auto& dir : sorted_dirs(source / "ports")) {
    for (Day d : dated_files(dir, ".csv")) {
      out += ingest_ports(store, dir.filename().string(), d, dir / (d.to_string() + ".csv"));
    }
  }
  for (const auto& base : {source / "incoming" / "feeds", source / "feeds"}) {
    if (fs::exists(base) && fs::exists(store.root() / "feeds") && fs::equivalent(base, store.root() / "feeds")) continue;
    for (const auto& dir : sorted_dirs(base)) {
      for (Day d : dated_files(dir, ".txt")) {
        out += ingest_feed(store, dir.filename().string(), d, dir / (d.to_string() + ".txt"));
      }
    }
  }
  if (out.empty()) throw InputError(fmt::format("nothing to ingest under {}", source.string()));
  return out;
}

std::string run_detect(const Store& store, const DetectOptions& o) {
  auto nets = o.networks.empty() ? store.networks() : o.networks;
  if (nets.empty()) throw InputError("no networks in the store; ingest a network configuration first");
  TextTable t({"Network", "Date", "Flows", "Receive-only hosts", "Scanners", "Auth events", "Probe events"});
  std::string csv = "network,date,flows,receive_only_hosts,scanners,auth_events,probe_events\n";
  const auto patterns = store.patterns();
  for (const auto& net : nets) {
    auto cfg = store.network(net);
    if (o.threshold) cfg.scanner_threshold = *o.threshold;
    if (o.exclude_ports) cfg.excluded_ports = *o.exclude_ports;
    cfg.validate();
    const auto days = o.range ? o.range->days() : store.flow_days(net);
    if (days.empty()) throw InputError(fmt::format("no flow days stored for network '{}'", net));
    const PrefixIndex whitelist(cfg.admin_whitelist);
    for (Day d : days) {
      auto day = store.flows(net, d);
      auto verdicts = detect_scanners(day, cfg);
      write_file_atomic(store.detections_path(net, d), format_verdicts(verdicts));

      std::vector<AttackEvent> events;
      std::size_t auth = 0, probes = 0;
      const bool have_logs = fs::exists(store.logs_path(net, d));
      const bool have_ports = fs::exists(store.ports_path(net, d));
      if (have_logs) {
        events = scan_logs(read_text(store.logs_path(net, d)), patterns, d, o.failure_threshold, whitelist);
        auth = events.size();
      }
      if (have_ports) {
        auto p = scan_port_events(parse_port_events(read_text(store.ports_path(net, d))), d, whitelist);
        probes = p.size();
        events.insert(events.end(), p.begin(), p.end());
      }
      if (have_logs || have_ports) write_file_atomic(store.events_path(net, d), format_events(events));

      const auto ro = receive_only_hosts(day).size();
      t.add_row({net, d.to_string(), std::to_string(day.flows().size()), std::to_string(ro),
                 std::to_string(verdicts.size()), have_logs ? std::to_string(auth) : "-",
                 have_ports ? std::to_string(probes) : "-"});
      csv += fmt::format("{},{},{},{},{},{},{}\n", net, d.to_string(), day.flows().size(), ro, verdicts.size(),
                         have_logs ? std::to_string(auth) : "", have_ports ? std::to_string(probes) : "");
    }
  }
  const auto stem = o.range ? fmt::format("detect_{}", range_tag(*o.range)) : std::string("detect_all");
  return emit(store, "detect", stem, csv, t.render("Ground-truth detection"));
}

std::string run_match(const Store& store, const MatchOptions& o) {
  store.network(o.network);
  const auto names = store.feed_names(o.feeds);
  const auto unions = parse_unions(o.unions);
  std::vector<MatchRateReport> reports;
  for (Day d : o.range.days()) {
    const auto feeds = load_feeds(store, names, d);
    GroundTruth gt{d, o.network, o.kind, store.ground_truth(o.network, d, o.kind, o.score_min)};
    reports.push_back(match_rate(gt, feeds, unions));
  }
  std::string table = match_table(reports);
  std::string csv = match_csv(reports);
  const auto stem = fmt::format("{}_{}_{}", o.network, to_string(o.kind), range_tag(o.range));
  if (reports.size() > 1) {
    auto summary = summarize_match_rates(reports);
    table += match_summary_table(o.network, o.kind, summary);
    write_file_atomic(store.out_dir("match") / (stem + "_summary.csv"), match_summary_csv(o.network, o.kind, summary));
  }
  return emit(store, "match", stem, csv, table);
}

std::string run_intersect(const Store& store, Day date, const std::vector<std::string>& feeds) {
  const auto names = store.feed_names(feeds);
  if (names.size() < 2) throw InputError("intersect needs at least two feeds");
  const auto snaps = load_feeds(store, names, date);
  const auto m = intersection_matrix(snaps);
  return emit(store, "intersect", date.to_string(), intersection_csv(m), intersection_table(m));
}

std::string run_decay(const Store& store, const DecayOptions& o) {
  store.network(o.network);
  const auto names = store.feed_names(o.feeds);
  const DateRange range{o.base, o.to};
  std::map<Day, IpSet> truth;
  for (Day d : range.days()) truth[d] = store.ground_truth(o.network, d, o.kind, o.score_min);
  std::string table, csv;
  for (const auto& name : names) {
    const auto base = store.feed(name, o.base);
    std::map<Day, BlacklistSnapshot> fresh;
    for (Day d : range.days()) {
      if (d != o.base && store.feeds().has(name, d)) fresh.emplace(d, store.feed(name, d));
    }
    const auto rep = decay(base, fresh, truth);
    table += decay_table(rep);
    auto part = decay_csv(rep);
    csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
  }
  return emit(store, "decay", fmt::format("{}_{}_{}", o.network, to_string(o.kind), range_tag(range)), csv, table);
}

std::string run_propagate(const Store& store, const std::string& source, const std::string& target, DateRange range) {
  store.network(source);
  store.network(target);
  std::map<Day, IpSet> src, dst;
  for (Day d : range.days()) {
    src[d] = store.ground_truth(source, d, GroundTruthKind::scanner, 0);
    dst[d] = store.ground_truth(target, d, GroundTruthKind::scanner, 0);
  }
  const auto curve = propagation(src, dst, range.to - range.from, source, target);
  return emit(store, "propagate", fmt::format("{}_to_{}_{}", source, target, range_tag(range)), propagation_csv(curve),
              propagation_table(curve));
}

std::string run_fp_check(const Store& store, const FpOptions& o) {
  store.network(o.network);
  const auto names = store.feed_names(o.feeds);
  std::vector<FalsePositiveReport> reports;
  for (Day d : o.range.days()) {
    reports.push_back(false_positive_overlap(store.flows(o.network, d), load_feeds(store, names, d), o.benign_score_max));
  }
  return emit(store, "fp-check", fmt::format("{}_{}", o.network, range_tag(o.range)), false_positive_csv(reports),
              false_positive_table(reports));
}

std::string run_cloud(const Store& store, const CloudOptions& o) {
  if (o.providers.empty()) throw InputError("cloud needs at least one --provider configuration");
  const IpSet truth = store.ground_truth(o.network, o.date, o.kind, o.score_min);
  const std::vector<IpAddress> ips(truth.begin(), truth.end());

  std::vector<std::unique_ptr<CloudClient>> clients;
  for (const auto& p : o.providers) {
    clients.push_back(std::make_unique<CloudClient>(CloudProviderConfig::load(p), store.root(), system_epoch_seconds,
                                                    o.max_age_seconds));
  }
  std::vector<std::future<BatchSummary>> jobs;
  for (auto& c : clients) {
    jobs.push_back(std::async(std::launch::async, [&c, &ips] { return c->batch_lookup(ips); }));
  }

  TextTable t({"Provider", "Listed", "Consensus", "From cache", "Queried", "Unserved"});
  std::string csv = "network,date,kind,provider,total,listed,consensus,from_cache,queried,unserved,rule\n";
  std::string failures;
  const auto stem = fmt::format("{}_{}_{}", o.network, o.date.to_string(), to_string(o.kind));
  for (std::size_t i = 0; i < clients.size(); ++i) {
    const auto s = jobs[i].get();
    const auto& cfg = clients[i]->config();
    std::uint64_t listed = 0, consensus = 0;
    for (const auto& v : s.verdicts) {
      listed += v.listed ? 1 : 0;
      consensus += v.consensus ? 1 : 0;
    }
    const Ratio lr{listed, ips.size()}, cr{consensus, ips.size()};
    t.add_row({cfg.provider_name, format_ratio_cell(lr), format_ratio_cell(cr), std::to_string(s.from_cache),
               std::to_string(s.from_network), std::to_string(s.unserved)});
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", o.network, o.date.to_string(), to_string(o.kind),
                       cfg.provider_name, ips.size(), listed, consensus, s.from_cache, s.from_network, s.unserved,
                       cfg.consensus_rule.describe());
    write_file_atomic(store.out_dir("cloud") / fmt::format("{}_{}_verdicts.csv", stem, cfg.provider_name),
                      verdicts_csv(s.verdicts));
    for (const auto& [ip, why] : s.failures) failures += fmt::format("  {}: {}\n", ip.to_string(), why);
  }
  auto table = t.render(fmt::format("Cloud reputation of {} IPs, {} on {} ({} addresses)", to_string(o.kind),
                                    o.network, o.date.to_string(), ips.size()));
  if (!failures.empty()) table += "Unserved lookups:\n" + failures;
  return emit(store, "cloud", stem, csv, table);
}

std::string run_report(const Store& store, const ReportOptions& o) {
  const auto names = store.feed_names(o.feeds);
  const auto days = o.range.days();
  const auto nets = store.networks();
  if (nets.empty()) throw InputError("no networks in the store");
  const auto unions = parse_unions(o.unions);
  std::string doc = fmt::format("Blacklist evaluation report, {} to {}\n\n", o.range.from.to_string(),
                                o.range.to.to_string());
  const auto dir = store.out_dir("report");
  const auto tag = range_tag(o.range);

  std::vector<FeedStatsRow> stats;
  for (const auto& n : names) {
    for (Day d : days) {
      const auto cur = store.feed(n, d);
      std::optional<BlacklistSnapshot> prev;
      if (store.feeds().has(n, d - 1)) prev = store.feed(n, d - 1);
      stats.push_back({n, d, feed_stats(cur, prev ? &*prev : nullptr)});
    }
  }
  doc += feed_stats_table(stats) + "\n";
  write_file_atomic(dir / fmt::format("feeds_{}.csv", tag), feed_stats_csv(stats));

  if (names.size() >= 2) {
    const auto m = intersection_matrix(load_feeds(store, names, o.range.to));
    doc += intersection_table(m) + "\n";
    write_file_atomic(dir / fmt::format("intersect_{}.csv", o.range.to.to_string()), intersection_csv(m));
  }

  std::map<std::string, std::map<Day, IpSet>> scanners;
  IpSet all_scanners;
  for (const auto& net : nets) {
    for (Day d : days) {
      scanners[net][d] = store.ground_truth(net, d, GroundTruthKind::scanner, 0);
      all_scanners.insert(scanners[net][d].begin(), scanners[net][d].end());
    }
  }

  for (const auto& net : nets) {
    std::vector<GroundTruthKind> kinds{GroundTruthKind::scanner, GroundTruthKind::alerted_high_score};
    if (std::all_of(days.begin(), days.end(), [&](Day d) { return store.has_events(net, d); })) {
      kinds.push_back(GroundTruthKind::log_attacker);
    }
    for (auto kind : kinds) {
      std::vector<MatchRateReport> reports;
      for (Day d : days) {
        GroundTruth gt{d, net, kind,
                       kind == GroundTruthKind::scanner ? scanners[net][d] : store.ground_truth(net, d, kind, o.score_min)};
        reports.push_back(match_rate(gt, load_feeds(store, names, d), unions));
      }
      const auto summary = summarize_match_rates(reports);
      doc += match_summary_table(net, kind, summary) + "\n";
      write_file_atomic(dir / fmt::format("match_{}_{}_{}.csv", net, to_string(kind), tag), match_csv(reports));
      write_file_atomic(dir / fmt::format("match_{}_{}_{}_summary.csv", net, to_string(kind), tag),
                        match_summary_csv(net, kind, summary));
    }
  }

  for (const auto& net : nets) {
    std::string csv;
    for (const auto& n : names) {
      std::map<Day, BlacklistSnapshot> fresh;
      for (Day d : days) {
        if (d != o.range.from) fresh.emplace(d, store.feed(n, d));
      }
      const auto rep = decay(store.feed(n, o.range.from), fresh, scanners[net]);
      doc += fmt::format("{}: ", net) + decay_table(rep) + "\n";
      auto part = decay_csv(rep);
      csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
    }
    write_file_atomic(dir / fmt::format("decay_{}_{}.csv", net, tag), csv);
  }

  for (const auto& src : nets) {
    for (const auto& dst : nets) {
      if (src == dst) continue;
      const auto curve = propagation(scanners[src], scanners[dst], o.range.to - o.range.from, src, dst);
      doc += propagation_table(curve) + "\n";
      write_file_atomic(dir / fmt::format("propagate_{}_to_{}_{}.csv", src, dst, tag), propagation_csv(curve));
    }
  }

  std::map<std::string, IpSet> remote_by_net;
  for (const auto& net : nets) {
    std::vector<FalsePositiveReport> fps;
    for (Day d : days) {
      const auto flows = store.flows(net, d);
      for (const auto& ip : remote_clients(flows)) remote_by_net[net].insert(ip);
      fps.push_back(false_positive_overlap(flows, load_feeds(store, names, d), o.benign_score_max));
    }
    doc += false_positive_table(fps) + "\n";
    write_file_atomic(dir / fmt::format("fp_{}_{}.csv", net, tag), false_positive_csv(fps));
  }

  const auto agg = aggregate_slash24(all_scanners);
  doc += aggregation_table(agg) + "\n";
  write_file_atomic(dir / fmt::format("aggregation_{}.csv", tag), aggregation_csv(agg));

  for (const auto& net : nets) {
    if (!std::all_of(days.begin(), days.end(), [&](Day d) { return store.has_events(net, d); })) continue;
    IpSet attackers, listed;
    for (Day d : days) {
      const auto gt = store.ground_truth(net, d, GroundTruthKind::log_attacker, 0);
      const auto feeds = load_feeds(store, names, d);
      for (const auto& ip : gt) {
        attackers.insert(ip);
        if (std::any_of(feeds.begin(), feeds.end(), [&](const BlacklistSnapshot& f) { return f.contains(ip); })) {
          listed.insert(ip);
        }
      }
    }
    std::map<std::string, IpSet> others;
    for (const auto& [other, remotes] : remote_by_net) {
      if (other != net) others[other] = remotes;
    }
    const auto visits = cross_visit(attackers, others);
    doc += cross_visit_table(net, attackers.size(), Ratio{listed.size(), attackers.size()}, visits) + "\n";
    write_file_atomic(dir / fmt::format("cross_visit_{}_{}.csv", net, tag), cross_visit_csv(net, visits));
  }

  write_file_atomic(dir / fmt::format("report_{}.txt", tag), doc);
  return doc;
}

}  // namespace bleval
