#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bleval/flow.hpp"

namespace bleval {

struct ScannerVerdict {
  IpAddress remote_ip;
  Day date;
  std::uint64_t distinct_receive_only_contacted = 0;
  std::uint64_t evidence_flow_count = 0;
  std::string network_name;

  bool operator==(const ScannerVerdict&) const = default;
};

/// Remote hosts that reached at least `config.scanner_threshold` distinct
/// receive-only local hosts over TCP on non-excluded server ports.
/// Sorted by descending distinct count, then ascending address.
std::vector<ScannerVerdict> detect_scanners(const DailyFlowSet& day, const NetworkConfig& config);

inline constexpr std::string_view kVerdictHeader = "date,network,remote_ip,distinct_hosts,flows";

std::string format_verdicts(const std::vector<ScannerVerdict>& verdicts);
std::vector<ScannerVerdict> parse_verdicts(std::string_view text);

}  // namespace bleval
