// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace msgs {

/// Sectioned key=value configuration (INI layout). Used for manifests, training
/// configs and CLI config files. Keys may contain dots; lookups never split them.
class Config {
 public:
  using Entry = std::pair<std::string, std::string>;

  static Config parse(std::string_view text, std::string_view origin = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(std::string_view section, std::string_view key) const;
  std::optional<std::string> get(std::string_view section, std::string_view key) const;

  std::string get_string(std::string_view section, std::string_view key,
                         std::string_view fallback) const;
  double get_double(std::string_view section, std::string_view key, double fallback) const;
  long long get_int(std::string_view section, std::string_view key, long long fallback) const;
  bool get_bool(std::string_view section, std::string_view key, bool fallback) const;

  void set(std::string_view section, std::string_view key, std::string_view value);
  /// Copies every entry of `other` over this config.
  void merge(const Config& other);

  std::vector<std::string> sections() const;
  std::vector<Entry> entries(std::string_view section) const;

  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

 private:
  boost::property_tree::ptree tree_;
};

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

}  // namespace msgs
