// bleval: blacklist evaluation over a store directory.

#include <cstdio>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bleval/scenario.hpp"
#include "bleval/workflow.hpp"

namespace {

using namespace bleval;

std::vector<std::string> comma_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& r : raw) {
    for (const auto& item : split(r, ',')) {
      auto t = trim(item);
      if (!t.empty()) out.emplace_back(t);
    }
  }
  return out;
}

std::set<std::uint16_t> port_list(const std::string& raw) {
  std::set<std::uint16_t> out;
  for (const auto& item : split(raw, ',')) {
    auto t = trim(item);
    if (t.empty() || t == "none") continue;
    unsigned long v = 0;
    try {
      std::size_t used = 0;
      v = std::stoul(std::string(t), &used);
      if (used != t.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError(fmt::format("--exclude-ports: '{}' is not a port number", t));
    }
    if (v < 1 || v > 65535) throw InputError(fmt::format("--exclude-ports: {} is out of range", v));
    out.insert(static_cast<std::uint16_t>(v));
  }
  return out;
}

struct Dates {
  std::string date, from, to;

  std::optional<DateRange> optional_range() const {
    if (!date.empty()) {
      if (!from.empty() || !to.empty()) throw InputError("use either --date or --from/--to");
      Day d = Day::parse(date);
      return DateRange{d, d};
    }
    if (from.empty() && to.empty()) return std::nullopt;
    if (from.empty() || to.empty()) throw InputError("--from and --to go together");
    DateRange r{Day::parse(from), Day::parse(to)};
    r.days();
    return r;
  }
  DateRange range() const {
    auto r = optional_range();
    if (!r) throw InputError("a --date or a --from/--to range is required");
    return *r;
  }
};

void add_dates(CLI::App* cmd, Dates& d) {
  cmd->add_option("--date", d.date, "single day, YYYY-MM-DD");
  cmd->add_option("--from", d.from, "first day of a range");
  cmd->add_option("--to", d.to, "last day of a range");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evaluate IP blacklists against flow- and log-derived ground truth"};
  app.require_subcommand(1);
  std::string store_root = ".";
  app.add_option("--store", store_root, "store directory")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "import flows, logs, port events, feeds and network configs");
  std::string source, network_config, feed_name, flows_net, logs_net, ports_net, patterns_file, ingest_date;
  std::string input_file;
  ingest->add_option("--source", source, "fixture or export tree to import wholesale");
  ingest->add_option("--network-config", network_config, "network configuration file");
  ingest->add_option("--patterns", patterns_file, "log pattern pack");
  ingest->add_option("--feed", feed_name, "feed name for FILE");
  ingest->add_option("--flows", flows_net, "network whose flows FILE holds");
  ingest->add_option("--logs", logs_net, "network whose server logs FILE holds");
  ingest->add_option("--ports", ports_net, "network whose port events FILE holds");
  ingest->add_option("--date", ingest_date, "day FILE covers");
  ingest->add_option("file", input_file, "input file");

  // detect
  auto* detect = app.add_subcommand("detect", "derive scanners and attack events");
  std::vector<std::string> detect_nets;
  Dates detect_dates;
  std::uint32_t threshold = 0;
  std::uint64_t failure_threshold = 3;
  std::string exclude_ports;
  detect->add_option("--network", detect_nets, "networks (default: all)");
  add_dates(detect, detect_dates);
  detect->add_option("--threshold", threshold, "receive-only hosts needed to flag a scanner");
  detect->add_option("--exclude-ports", exclude_ports, "comma list of server ports to ignore, or none");
  detect->add_option("--failures", failure_threshold, "log failures needed for an event")->capture_default_str();

  // match
  auto* match = app.add_subcommand("match", "match rate of feeds against ground truth");
  std::string match_net, kind = "scanner";
  Dates match_dates;
  std::vector<std::string> match_feeds, match_unions;
  std::uint64_t score_min = 5000;
  match->add_option("--network", match_net)->required();
  add_dates(match, match_dates);
  match->add_option("--feeds", match_feeds, "comma list (default: all)");
  match->add_option("--union", match_unions, "A+B combined feed, repeatable");
  match->add_option("--ground-truth", kind, "scanner, alerted or log")->capture_default_str();
  match->add_option("--score-min", score_min, "alerted: summed cyberscore must exceed this")->capture_default_str();

  // intersect
  auto* intersect = app.add_subcommand("intersect", "pairwise containment between feeds");
  std::string intersect_date;
  std::vector<std::string> intersect_feeds;
  intersect->add_option("--date", intersect_date)->required();
  intersect->add_option("--feeds", intersect_feeds, "comma list (default: all)");

  // decay
  auto* decay_cmd = app.add_subcommand("decay", "stale versus fresh feed match rates");
  std::string decay_net, decay_kind = "scanner";
  Dates decay_dates;
  std::vector<std::string> decay_feeds;
  decay_cmd->add_option("--network", decay_net)->required();
  add_dates(decay_cmd, decay_dates);
  decay_cmd->add_option("--feeds", decay_feeds, "comma list (default: all)");
  decay_cmd->add_option("--ground-truth", decay_kind, "scanner, alerted or log")->capture_default_str();

  // propagate
  auto* propagate = app.add_subcommand("propagate", "share of one network's scanners seen in another");
  std::string prop_source, prop_target;
  Dates prop_dates;
  propagate->add_option("--source", prop_source)->required();
  propagate->add_option("--target", prop_target)->required();
  add_dates(propagate, prop_dates);

  // fp-check
  auto* fp = app.add_subcommand("fp-check", "listed benign remote clients");
  std::string fp_net;
  Dates fp_dates;
  std::vector<std::string> fp_feeds;
  std::uint64_t benign_max = 100;
  fp->add_option("--network", fp_net)->required();
  add_dates(fp, fp_dates);
  fp->add_option("--feeds", fp_feeds, "comma list (default: all)");
  fp->add_option("--benign-max", benign_max, "highest cyberscore of a benign client")->capture_default_str();

  // cloud
  auto* cloud = app.add_subcommand("cloud", "query reputation services for ground-truth addresses");
  std::vector<std::string> providers;
  std::string cloud_net, cloud_date, cloud_kind = "scanner";
  std::int64_t max_age = -1;
  cloud->add_option("--provider", providers, "provider configuration JSON, repeatable")->required();
  cloud->add_option("--network", cloud_net)->required();
  cloud->add_option("--date", cloud_date)->required();
  cloud->add_option("--ground-truth", cloud_kind, "scanner, alerted or log")->capture_default_str();
  cloud->add_option("--max-age", max_age, "seconds before a cached verdict is refreshed (default: never)");

  // report
  auto* report = app.add_subcommand("report", "every metric for a date range in one document");
  Dates report_dates;
  std::vector<std::string> report_feeds, report_unions;
  add_dates(report, report_dates);
  report->add_option("--feeds", report_feeds, "comma list (default: all)");
  report->add_option("--union", report_unions, "A+B combined feed, repeatable");

  // simgen
  auto* simgen = app.add_subcommand("simgen", "write a synthetic fixture tree with its manifest");
  std::string scenario_file, simgen_out;
  std::int64_t seed = -1;
  simgen->add_option("--scenario", scenario_file)->required();
  simgen->add_option("--out", simgen_out, "output directory")->required();
  simgen->add_option("--seed", seed, "overrides the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const Store store{store_root};
    std::string out;
    if (*ingest) {
      if (!source.empty()) out += ingest_tree(store, source);
      if (!network_config.empty()) out += ingest_network(store, network_config);
      if (!patterns_file.empty()) out += ingest_patterns(store, patterns_file);
      const int targets = !feed_name.empty() + !flows_net.empty() + !logs_net.empty() + !ports_net.empty();
      if (targets > 1) throw InputError("pick one of --feed, --flows, --logs, --ports per FILE");
      if (targets == 1) {
        if (input_file.empty() || ingest_date.empty()) throw InputError("FILE and --date are required");
        const Day d = Day::parse(ingest_date);
        if (!feed_name.empty()) out += ingest_feed(store, feed_name, d, input_file);
        if (!flows_net.empty()) out += ingest_flows(store, flows_net, d, input_file);
        if (!logs_net.empty()) out += ingest_logs(store, logs_net, d, input_file);
        if (!ports_net.empty()) out += ingest_ports(store, ports_net, d, input_file);
      } else if (!input_file.empty()) {
        throw InputError("FILE needs one of --feed, --flows, --logs, --ports");
      }
      if (out.empty()) throw InputError("nothing to ingest; see `bleval ingest --help`");
    } else if (*detect) {
      DetectOptions o;
      o.networks = comma_list(detect_nets);
      o.range = detect_dates.optional_range();
      if (threshold > 0) o.threshold = threshold;
      if (!exclude_ports.empty()) o.exclude_ports = port_list(exclude_ports);
      o.failure_threshold = failure_threshold;
      if (o.failure_threshold < 1) throw InputError("--failures must be >= 1");
      out = run_detect(store, o);
    } else if (*match) {
      out = run_match(store, {match_net, match_dates.range(), comma_list(match_feeds), match_unions,
                              parse_ground_truth_kind(kind), score_min});
    } else if (*intersect) {
      out = run_intersect(store, Day::parse(intersect_date), comma_list(intersect_feeds));
    } else if (*decay_cmd) {
      auto r = decay_dates.range();
      out = run_decay(store, {decay_net, comma_list(decay_feeds), r.from, r.to, parse_ground_truth_kind(decay_kind),
                              score_min});
    } else if (*propagate) {
      out = run_propagate(store, prop_source, prop_target, prop_dates.range());
    } else if (*fp) {
      out = run_fp_check(store, {fp_net, fp_dates.range(), comma_list(fp_feeds), benign_max});
    } else if (*cloud) {
      CloudOptions o;
      for (const auto& p : providers) o.providers.emplace_back(p);
      o.network = cloud_net;
      o.date = Day::parse(cloud_date);
      o.kind = parse_ground_truth_kind(cloud_kind);
      if (max_age >= 0) o.max_age_seconds = max_age;
      out = run_cloud(store, o);
    } else if (*report) {
      out = run_report(store, {report_dates.range(), comma_list(report_feeds), report_unions});
    } else if (*simgen) {
      auto scenario = Scenario::load(scenario_file);
      if (seed >= 0) scenario.seed = static_cast<std::uint64_t>(seed);
      auto manifest = generate_fixture(scenario, simgen_out);
      out = fmt::format("fixture written to {} ({} networks, {} days, {} feeds)\n", simgen_out,
                        scenario.networks.size(), scenario.days, scenario.synthetic_feeds.size());
    }
    std::fwrite(out.data(), 1, out.size(), stdout);
    return 0;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}
