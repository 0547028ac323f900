#include "bleval/common.hpp"

#include <charconv>

#include <fmt/format.h>

namespace bleval {

namespace {

int parse_digits(std::string_view text, std::string_view whole) {
  int v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw InputError(fmt::format("invalid date '{}': expected YYYY-MM-DD", whole));
  }
  return v;
}

}  // namespace

Day Day::parse(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw InputError(fmt::format("invalid date '{}': expected YYYY-MM-DD", text));
  }
  using namespace std::chrono;
  year_month_day ymd{year{parse_digits(text.substr(0, 4), text)},
                     month{static_cast<unsigned>(parse_digits(text.substr(5, 2), text))},
                     day{static_cast<unsigned>(parse_digits(text.substr(8, 2), text))}};
  if (!ymd.ok()) throw InputError(fmt::format("invalid date '{}'", text));
  return Day{std::chrono::sys_days{ymd}};
}

Day Day::from_epoch_seconds(std::int64_t ts) {
  using namespace std::chrono;
  return Day{floor<days>(sys_seconds{seconds{ts}})};
}

std::string Day::to_string() const {
  std::chrono::year_month_day ymd{days_};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::int64_t Day::begin_epoch() const {
  return std::chrono::duration_cast<std::chrono::seconds>(days_.time_since_epoch()).count();
}

Day Day::week_start() const {
  std::chrono::weekday wd{days_};
  // iso_encoding: Monday=1 .. Sunday=7
  return *this - static_cast<int>(wd.iso_encoding() - 1);
}

std::string format_percent(const Ratio& r, int decimals) { return format_percent(r.value(), decimals); }

std::string format_percent(std::optional<double> fraction, int decimals) {
  if (!fraction) return std::string(kUndefined);
  double pct = *fraction * 100.0;
  if (pct == 0.0) pct = 0.0;  // no "-0.0%"
  return fmt::format("{:.{}f}%", pct, decimals);
}

std::string format_fraction(const Ratio& r) {
  if (!r.defined()) return std::string(kUndefined);
  return fmt::format("{:.6f}", *r.value());
}

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\v\f";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace bleval
