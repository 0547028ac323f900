#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bleval {

// Bad input from the user or from a data file. CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A broken internal invariant. CLI exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Calendar day in UTC.
class Day {
 public:
  constexpr Day() = default;
  constexpr explicit Day(std::chrono::sys_days d) : days_(d) {}

  /// Parses `YYYY-MM-DD`; throws InputError on anything else.
  static Day parse(std::string_view text);
  static Day from_epoch_seconds(std::int64_t ts);

  std::string to_string() const;
  std::chrono::sys_days sys_days() const { return days_; }

  /// [begin, end) of the day in seconds since the epoch.
  std::int64_t begin_epoch() const;
  std::int64_t end_epoch() const { return begin_epoch() + 86400; }
  bool contains_epoch(std::int64_t ts) const { return ts >= begin_epoch() && ts < end_epoch(); }

  /// Monday of the ISO week containing this day.
  Day week_start() const;

  Day operator+(int n) const { return Day{days_ + std::chrono::days{n}}; }
  Day operator-(int n) const { return Day{days_ - std::chrono::days{n}}; }
  int operator-(Day other) const { return static_cast<int>((days_ - other.days_).count()); }

  auto operator<=>(const Day&) const = default;

 private:
  std::chrono::sys_days days_{};
};

/// A rate kept as its two integer counts so reports stay auditable.
/// A zero denominator means "undefined", which is never rendered as 0.
struct Ratio {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  bool defined() const { return denominator != 0; }
  std::optional<double> value() const {
    if (!defined()) return std::nullopt;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }

  bool operator==(const Ratio&) const = default;
};

inline constexpr std::string_view kUndefined = "undefined";

/// "50.0%" style, or the undefined marker.
std::string format_percent(const Ratio& r, int decimals = 1);
std::string format_percent(std::optional<double> fraction, int decimals = 1);
/// Plain decimal fraction for CSV ("0.500000"), or the undefined marker.
std::string format_fraction(const Ratio& r);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace bleval
