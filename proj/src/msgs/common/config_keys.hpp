// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include "msgs/common/config.hpp"
#include "msgs/common/error.hpp"

namespace msgs {

/// One documented, typed key of a settings struct.
template <class T>
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(T&, const std::string&)> set;
  std::function<std::string(const T&)> get;
};

namespace detail {

template <class V>
V parse_value(const std::string& key, const std::string& text) {
  const auto bad = [&]() -> V {
    fail(ErrorCode::InvalidArgument, "invalid value '" + text + "' for key '" + key + "'");
  };
  if constexpr (std::is_same_v<V, bool>) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    return bad();
  } else if constexpr (std::is_same_v<V, std::string>) {
    return text;
  } else {
    V v{};
    const char* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) return bad();
    return v;
  }
}

template <class V>
std::string format_value(const V& v) {
  if constexpr (std::is_same_v<V, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<V, std::string>) {
    return v;
  } else if constexpr (std::is_floating_point_v<V>) {
    return format_number(v);
  } else {
    return std::to_string(v);
  }
}

}  // namespace detail

/// Key bound to the field returned by `ref`.
template <class T, class F>
ConfigKey<T> make_key(std::string name, std::string help, F ref) {
  ConfigKey<T> k;
  k.name = name;
  k.help = std::move(help);
  k.set = [ref, name](T& t, const std::string& text) {
    auto& field = ref(t);
    field = detail::parse_value<std::remove_reference_t<decltype(field)>>(name, text);
  };
  k.get = [ref](const T& t) { return detail::format_value(ref(const_cast<T&>(t))); };
  return k;
}

/// Applies every entry of `section` to `target`; unknown keys are rejected.
template <class T>
void apply_section(const Config& config, const std::string& section, const std::vector<ConfigKey<T>>& keys,
                   T& target) {
  for (const auto& [key, value] : config.entries(section)) {
    bool found = false;
    for (const auto& k : keys) {
      if (k.name == key) {
        k.set(target, value);
        found = true;
        break;
      }
    }
    if (!found) fail(ErrorCode::InvalidArgument, "unknown [" + section + "] key '" + key + "'");
  }
}

template <class T>
Config section_to_config(const std::string& section, const std::vector<ConfigKey<T>>& keys, const T& source) {
  Config c;
  for (const auto& k : keys) c.set(section, k.name, k.get(source));
  return c;
}

}  // namespace msgs
