#include "armswing/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace armswing {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool to_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  return out;
}

}  // namespace

Config Config::parse(std::string_view text, const std::string& origin) {
  Config c;
  c.origin_ = origin;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string t = trim(raw);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError((origin.empty() ? "" : origin + ": ") + "line " +
                        std::to_string(line) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw ConfigError((origin.empty() ? "" : origin + ": ") + "line " +
                        std::to_string(line) + ": empty key");
    }
    c.entries_.emplace(key, Entry{trim(t.substr(eq + 1)), line});
    if (std::find(c.order_.begin(), c.order_.end(), key) == c.order_.end()) {
      c.order_.push_back(key);
    }
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

const Config::Entry* Config::find(const std::string& key) const {
  used_.insert(key);
  const auto range = entries_.equal_range(key);
  if (range.first == range.second) return nullptr;
  return &std::prev(range.second)->second;
}

void Config::fail(const std::string& key, const Entry& e,
                  const std::string& what) const {
  std::string where = origin_.empty() ? "" : origin_ + ": ";
  if (e.line > 0) where += "line " + std::to_string(e.line) + ": ";
  throw ConfigError(where + "field '" + key + "' " + what + ", got '" +
                    e.value + "'");
}

bool Config::has(const std::string& key) const {
  return entries_.count(key) > 0;
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  double v;
  if (!to_double(e->value, v)) fail(key, *e, "must be a number");
  return v;
}

int Config::get_int(const std::string& key, int fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  double v;
  if (!to_double(e->value, v) || v != static_cast<int>(v)) {
    fail(key, *e, "must be an integer");
  }
  return static_cast<int>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1") return true;
  if (e->value == "false" || e->value == "0") return false;
  fail(key, *e, "must be true or false");
}

std::vector<double> Config::get_doubles(
    const std::string& key, const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(e->value)) {
    double v;
    if (!to_double(item, v)) fail(key, *e, "must be a comma-separated number list");
    out.push_back(v);
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& key,
                                  const std::vector<int>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<int> out;
  for (const auto& item : split_list(e->value)) {
    double v;
    if (!to_double(item, v) || v != static_cast<int>(v)) {
      fail(key, *e, "must be a comma-separated integer list");
    }
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<std::string> Config::get_all(const std::string& key) const {
  used_.insert(key);
  std::vector<std::pair<int, std::string>> found;
  const auto range = entries_.equal_range(key);
  for (auto it = range.first; it != range.second; ++it) {
    found.emplace_back(it->second.line, it->second.value);
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (auto& [line, v] : found) out.push_back(v);
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto range = entries_.equal_range(key);
  entries_.erase(range.first, range.second);
  entries_.emplace(key, Entry{value, 0});
  if (std::find(order_.begin(), order_.end(), key) == order_.end()) {
    order_.push_back(key);
  }
}

void Config::check_all_used(const std::vector<std::string>& ignore_prefixes) const {
  for (const auto& key : order_) {
    const bool ignored = std::any_of(ignore_prefixes.begin(), ignore_prefixes.end(),
                                     [&](const std::string& p) { return key.rfind(p, 0) == 0; });
    if (!ignored && !used_.count(key)) {
      const auto it = entries_.find(key);
      std::string where = origin_.empty() ? "" : origin_ + ": ";
      if (it->second.line > 0) where += "line " + std::to_string(it->second.line) + ": ";
      throw ConfigError(where + "unknown field '" + key + "'");
    }
  }
}

std::string Config::dump() const {
  std::ostringstream out;
  for (const auto& key : order_) {
    const auto range = entries_.equal_range(key);
    for (auto it = range.first; it != range.second; ++it) {
      out << key << " = " << it->second.value << "\n";
    }
  }
  return out.str();
}

}  // namespace armswing
