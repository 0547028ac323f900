#include "bleval/blacklist.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace bleval {

namespace fs = std::filesystem;

namespace {

void check_feed_name(const std::string& name) {
  if (name.empty()) throw InputError("feed name must not be empty");
  for (char c : name) {
    bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '+';
    if (!ok) throw InputError(fmt::format("feed name '{}' contains '{}'; allowed: letters, digits, - _ . +", name, c));
  }
  if (name == "." || name == "..") throw InputError(fmt::format("invalid feed name '{}'", name));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(fmt::format("cannot write {}", tmp.string()));
    out << content;
  }
  fs::rename(tmp, p);
}

std::map<std::string, std::string> read_meta(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[std::string(trim(std::string_view(line).substr(0, eq)))] = std::string(trim(std::string_view(line).substr(eq + 1)));
  }
  return kv;
}

}  // namespace

BlacklistSnapshot::BlacklistSnapshot(std::string feed_name, Day date, std::vector<IpPrefix> entries,
                                     std::size_t raw_line_count, std::size_t comment_line_count,
                                     std::vector<ParseDiagnostic> diagnostics)
    : feed_name_(std::move(feed_name)),
      date_(date),
      index_(std::make_shared<const PrefixIndex>(entries)),
      raw_line_count_(raw_line_count == 0 ? entries.size() : raw_line_count),
      comment_line_count_(comment_line_count),
      diagnostics_(std::move(diagnostics)) {
  check_feed_name(feed_name_);
}

BlacklistSnapshot parse_blacklist(std::string_view text, std::string feed_name, Day date) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<IpPrefix> entries;
  std::vector<ParseDiagnostic> diags;
  std::size_t comments = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;

    auto mark = line.find_first_of("#;");
    std::string_view content = trim(line.substr(0, mark));
    if (content.empty()) {
      if (mark != std::string_view::npos) ++comments;
      continue;
    }
    try {
      entries.push_back(IpPrefix::parse(content));
    } catch (const InputError& e) {
      diags.push_back({line_no, std::string(trim(line)), e.what()});
    }
  }
  if (entries.empty()) {
    throw EmptySnapshotError(fmt::format("empty snapshot: feed '{}' on {} has no valid entries ({} diagnostics)",
                                         feed_name, date.to_string(), diags.size()));
  }
  std::size_t raw = entries.size();
  return BlacklistSnapshot(std::move(feed_name), date, std::move(entries), raw, comments, std::move(diags));
}

std::string serialize_blacklist(const BlacklistSnapshot& s) {
  std::string out = fmt::format("# feed: {}\n# date: {}\n", s.feed_name(), s.date().to_string());
  for (const auto& p : s.entries()) {
    out += p.to_feed_string();
    out += '\n';
  }
  return out;
}

Ratio churn(const BlacklistSnapshot& prev, const BlacklistSnapshot& cur) {
  if (prev.feed_name() != cur.feed_name()) {
    throw InputError(fmt::format("churn: feed mismatch '{}' vs '{}'", prev.feed_name(), cur.feed_name()));
  }
  if (cur.date() - prev.date() != 1) {
    throw InputError(fmt::format("churn: {} and {} are not consecutive days", prev.date().to_string(),
                                 cur.date().to_string()));
  }
  std::set<IpPrefix> a(prev.entries().begin(), prev.entries().end());
  std::set<IpPrefix> b(cur.entries().begin(), cur.entries().end());
  std::vector<IpPrefix> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  return Ratio{diff.size(), a.size() + b.size()};
}

FeedStats feed_stats(const BlacklistSnapshot& cur, const BlacklistSnapshot* previous_day) {
  FeedStats st;
  st.entry_count = cur.entry_count();
  st.raw_line_count = cur.raw_line_count();
  st.expanded_ips = cur.index().expanded_address_count();
  if (previous_day != nullptr) st.churn_vs_previous_day = churn(*previous_day, cur);
  return st;
}

namespace {

void check_same_date(std::span<const BlacklistSnapshot> snapshots, std::string_view what) {
  for (const auto& s : snapshots) {
    if (s.date() != snapshots.front().date()) {
      throw InputError(fmt::format("{}: mixed dates ({} for '{}' vs {} for '{}')", what, s.date().to_string(),
                                   s.feed_name(), snapshots.front().date().to_string(),
                                   snapshots.front().feed_name()));
    }
  }
}

}  // namespace

IntersectionMatrix intersection_matrix(std::span<const BlacklistSnapshot> snapshots) {
  IntersectionMatrix m;
  if (snapshots.empty()) return m;
  check_same_date(snapshots, "intersection_matrix");
  m.date = snapshots.front().date();
  const std::size_t n = snapshots.size();
  m.cells.assign(n, std::vector<std::optional<std::size_t>>(n));
  for (std::size_t i = 0; i < n; ++i) {
    m.feed_names.push_back(snapshots[i].feed_name());
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) m.cells[i][j] = containment_count(snapshots[i].index(), snapshots[j].index());
    }
  }
  return m;
}

BlacklistSnapshot union_feed(std::span<const BlacklistSnapshot> snapshots, std::string name) {
  if (snapshots.empty()) throw InputError(fmt::format("union '{}' has no member feeds", name));
  check_same_date(snapshots, "union_feed");
  std::vector<IpPrefix> all;
  for (const auto& s : snapshots) all.insert(all.end(), s.entries().begin(), s.entries().end());
  return BlacklistSnapshot(std::move(name), snapshots.front().date(), std::move(all));
}

fs::path BlacklistStore::snapshot_path(const std::string& feed, Day date) const {
  check_feed_name(feed);
  return root_ / "feeds" / feed / (date.to_string() + ".txt");
}

fs::path BlacklistStore::meta_path(const std::string& feed, Day date) const {
  check_feed_name(feed);
  return root_ / "feeds" / feed / (date.to_string() + ".meta");
}

bool BlacklistStore::has(const std::string& feed, Day date) const { return fs::exists(snapshot_path(feed, date)); }

FeedStats BlacklistStore::save(const BlacklistSnapshot& s) const {
  std::optional<BlacklistSnapshot> prev;
  if (has(s.feed_name(), s.date() - 1)) prev = load(s.feed_name(), s.date() - 1);
  FeedStats st = feed_stats(s, prev ? &*prev : nullptr);

  write_file(snapshot_path(s.feed_name(), s.date()), serialize_blacklist(s));

  std::string meta = fmt::format("feed={}\ndate={}\nentries={}\nraw_lines={}\ncomment_lines={}\nexpanded_ips={}\n",
                                 s.feed_name(), s.date().to_string(), st.entry_count, st.raw_line_count,
                                 s.comment_line_count(), st.expanded_ips.str());
  if (st.churn_vs_previous_day) {
    meta += fmt::format("churn_changed={}\nchurn_total={}\nchurn={}\n", st.churn_vs_previous_day->numerator,
                        st.churn_vs_previous_day->denominator, format_fraction(*st.churn_vs_previous_day));
  } else {
    meta += fmt::format("churn={}\n", kUndefined);
  }
  meta += fmt::format("diagnostics={}\n", s.diagnostics().size());
  for (const auto& d : s.diagnostics()) {
    meta += fmt::format("diagnostic.{}={} ({})\n", d.line_number, d.content, d.reason);
  }
  write_file(meta_path(s.feed_name(), s.date()), meta);
  return st;
}

BlacklistSnapshot BlacklistStore::load(const std::string& feed, Day date) const {
  auto path = snapshot_path(feed, date);
  if (!fs::exists(path)) {
    throw InputError(fmt::format("no snapshot for feed '{}' on {} (expected {})", feed, date.to_string(),
                                 path.string()));
  }
  BlacklistSnapshot parsed = parse_blacklist(read_file(path), feed, date);
  auto meta = read_meta(meta_path(feed, date));
  std::size_t raw = parsed.raw_line_count();
  std::size_t comments = 0;
  if (auto it = meta.find("raw_lines"); it != meta.end()) raw = std::stoull(it->second);
  if (auto it = meta.find("comment_lines"); it != meta.end()) comments = std::stoull(it->second);
  return BlacklistSnapshot(feed, date, parsed.entries(), raw, comments);
}

std::vector<std::string> BlacklistStore::feeds() const {
  std::vector<std::string> out;
  fs::path dir = root_ / "feeds";
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Day> BlacklistStore::dates(const std::string& feed) const {
  std::vector<Day> out;
  check_feed_name(feed);
  fs::path dir = root_ / "feeds" / feed;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".txt") out.push_back(Day::parse(e.path().stem().string()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bleval
