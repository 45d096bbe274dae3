#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "armswing/spatial.hpp"

namespace armswing {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text config. `#` starts a comment. A key may repeat
/// only where a list is expected (get_all). Every lookup is recorded so
/// that unused keys can be reported as unknown.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& origin = "");
  static Config load(const std::string& path);

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key,
                            const std::vector<int>& fallback) const;
  // Every value of a repeated key, in file order.
  std::vector<std::string> get_all(const std::string& key) const;

  /// Later values win. Used for command-line overrides.
  void set(const std::string& key, const std::string& value);

  /// Throws ConfigError naming the first key never looked up. Keys starting
  /// with one of `ignore_prefixes` are skipped.
  void check_all_used(const std::vector<std::string>& ignore_prefixes = {}) const;

  std::string dump() const;
  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry* find(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const Entry& e,
                         const std::string& what) const;

  std::multimap<std::string, Entry> entries_;
  std::vector<std::string> order_;
  mutable std::set<std::string> used_;
  std::string origin_;
};

}  // namespace armswing
