// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/common/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "msgs/common/error.hpp"

namespace msgs {
namespace pt = boost::property_tree;

namespace {

const pt::ptree* find_child(const pt::ptree& tree, std::string_view name) {
  for (const auto& [key, child] : tree) {
    if (key == name) return &child;
  }
  return nullptr;
}

pt::ptree& ensure_child(pt::ptree& tree, std::string_view name) {
  for (auto& [key, child] : tree) {
    if (key == name) return child;
  }
  return tree.push_back({std::string(name), pt::ptree{}})->second;
}

std::string qualified(std::string_view section, std::string_view key) {
  return std::string(section) + "." + std::string(key);
}

}  // namespace

Config Config::parse(std::string_view text, std::string_view origin) {
  Config cfg;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, cfg.tree_);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::Parse, std::string(origin) + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

bool Config::has(std::string_view section, std::string_view key) const {
  return get(section, key).has_value();
}

std::optional<std::string> Config::get(std::string_view section, std::string_view key) const {
  const pt::ptree* sec = find_child(tree_, section);
  if (sec == nullptr) return std::nullopt;
  const pt::ptree* value = find_child(*sec, key);
  if (value == nullptr) return std::nullopt;
  return value->data();
}

std::string Config::get_string(std::string_view section, std::string_view key,
                               std::string_view fallback) const {
  auto v = get(section, key);
  return v ? *v : std::string(fallback);
}

double Config::get_double(std::string_view section, std::string_view key, double fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  double out = 0.0;
  const char* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::InvalidArgument, "config key " + qualified(section, key) +
                                         ": expected a number, got '" + *v + "'");
  }
  return out;
}

long long Config::get_int(std::string_view section, std::string_view key, long long fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  long long out = 0;
  const char* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::InvalidArgument, "config key " + qualified(section, key) +
                                         ": expected an integer, got '" + *v + "'");
  }
  return out;
}

bool Config::get_bool(std::string_view section, std::string_view key, bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes" || *v == "on") return true;
  if (*v == "0" || *v == "false" || *v == "no" || *v == "off") return false;
  fail(ErrorCode::InvalidArgument,
       "config key " + qualified(section, key) + ": expected a boolean, got '" + *v + "'");
}

void Config::set(std::string_view section, std::string_view key, std::string_view value) {
  pt::ptree& sec = ensure_child(tree_, section);
  ensure_child(sec, key).put_value(std::string(value));
}

void Config::merge(const Config& other) {
  for (const auto& section : other.sections()) {
    for (const auto& [key, value] : other.entries(section)) set(section, key, value);
  }
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [key, child] : tree_) out.push_back(key);
  return out;
}

std::vector<Config::Entry> Config::entries(std::string_view section) const {
  std::vector<Entry> out;
  const pt::ptree* sec = find_child(tree_, section);
  if (sec == nullptr) return out;
  for (const auto& [key, child] : *sec) out.emplace_back(key, child.data());
  return out;
}

std::string Config::to_text() const {
  std::ostringstream out;
  pt::ini_parser::write_ini(out, tree_);
  return out.str();
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write config file " + path.string());
  out << to_text();
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace msgs
