#pragma once

/** @file config.hpp
    @brief Flat `section.key = value` run configuration.

    One assignment per line, `#` starts a comment, list values are comma
    separated. Unknown keys are rejected.
*/

#include "msgfem/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace msgfem {

class RunConfig {
 public:
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string str(const std::string& key, const std::string& fallback) const;
  std::string str(const std::string& key) const;
  double num(const std::string& key, double fallback) const;
  double num(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> nums(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) const;

  void set(const std::string& key, const std::string& value);
  /// FNV-1a of the normalized assignments, hex.
  std::string hash() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Every key the commands understand.
const std::vector<std::string>& known_config_keys();

}  // namespace msgfem
