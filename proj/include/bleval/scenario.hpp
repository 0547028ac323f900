#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bleval/common.hpp"
#include "bleval/flow.hpp"
#include "bleval/ip.hpp"

namespace bleval {

/// Synthetic fixture description. Loaded from JSON; see data/scenario.json.
struct Scenario {
  struct Network {
    NetworkConfig config;
    std::uint32_t active_hosts = 40;
    std::uint32_t receive_only_pool = 600;
    std::uint32_t benign_clients = 80;
    std::uint32_t admin_sweep_fan_out = 0;  // whitelisted admin host sweeping the pool on port 22
    bool server_logs = false;
  };

  struct PlantedScanner {
    IpAddress ip;
    std::uint32_t fan_out = 0;
    std::vector<std::uint16_t> ports;
    Proto proto = Proto::tcp;
    std::uint64_t cyberscore = 150;
    std::vector<std::string> networks;  // empty: every network
    std::vector<int> days;              // day offsets; empty: every day
  };

  struct PlantedLogAttacker {
    IpAddress ip;
    std::uint32_t failures = 0;
    std::string service = "ssh";
    std::vector<std::string> networks;  // empty: every network with server logs
    std::vector<int> days;
  };

  struct ScannerPopulation {
    std::uint32_t per_network_day = 0;
    std::uint32_t fan_out_min = 128;
    std::uint32_t fan_out_max = 200;
    std::vector<std::uint16_t> ports{22, 23, 445, 3389, 5900};
    double carry_over = 0.5;
  };

  struct Propagation {
    std::string source;
    std::string target;
    std::uint32_t numerator = 2;
    std::uint32_t denominator = 3;
    int lag_days = 1;
  };

  struct LogPopulation {
    std::uint32_t attackers_per_network_day = 0;
    std::uint32_t failures_min = 3;
    std::uint32_t failures_max = 12;
    std::uint32_t near_miss_per_network_day = 0;
    std::uint32_t probers_per_network_day = 0;
    double visit_fraction = 0.0;  // share of a day's attackers also seen in each other network's flows
  };

  struct SyntheticFeed {
    std::string name;
    double fraction_of_planted_included = 0.0;
    std::uint32_t noise_entries = 0;
    std::uint32_t noise_prefixes = 0;
    std::uint32_t noise_v6 = 0;
    std::uint32_t benign_planted = 0;  // benign clients of the first network, to exercise false positives
  };

  std::uint64_t seed = 1;
  Day start_date;
  int days = 1;
  std::uint32_t failure_threshold = 3;
  std::uint64_t high_score_min = 5000;
  std::uint64_t benign_score_max = 100;
  std::vector<Network> networks;
  std::vector<PlantedScanner> planted_scanners;
  std::vector<PlantedLogAttacker> planted_log_attackers;
  ScannerPopulation scanner_population;
  std::optional<Propagation> propagation;
  LogPopulation log_population;
  std::vector<SyntheticFeed> synthetic_feeds;
  std::vector<std::string> unions;

  /// Throws InputError naming the violated constraint.
  void validate() const;
  const Network& network(const std::string& name) const;

  static Scenario from_json(const nlohmann::json& j);
  static Scenario load(const std::filesystem::path& path);
};

/// The pattern pack whose lines the generator emits; identical to
/// data/patterns.conf.
std::string_view default_pattern_pack();

/// Writes the fixture tree under `out` (networks/, flows/, logs/, ports/,
/// incoming/feeds/, patterns.conf, manifest.json) and returns the manifest.
/// Same scenario and seed give byte-identical trees.
nlohmann::json generate_fixture(const Scenario& scenario, const std::filesystem::path& out);

}  // namespace bleval
