// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#include "msgs/msgs.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "msgs/common/config.hpp"
#include "msgs/common/error.hpp"
#include "msgs/common/parallel.hpp"
#include "msgs/pipeline/commands.hpp"

struct msgs_config {
  msgs::Config cfg;
};

namespace {

thread_local std::string g_last_error;

msgs_status to_status(msgs::ErrorCode code) {
  switch (code) {
    case msgs::ErrorCode::InvalidArgument: return MSGS_ERR_INVALID_ARGUMENT;
    case msgs::ErrorCode::Parse: return MSGS_ERR_PARSE;
    case msgs::ErrorCode::Io: return MSGS_ERR_IO;
    case msgs::ErrorCode::Numeric: return MSGS_ERR_NUMERIC;
    case msgs::ErrorCode::Unsupported: return MSGS_ERR_UNSUPPORTED;
  }
  return MSGS_ERR_INTERNAL;
}

template <class F>
msgs_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MSGS_OK;
  } catch (const msgs::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MSGS_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return MSGS_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MSGS_ERR_INTERNAL;
  }
}

msgs_status invalid(const char* message) {
  g_last_error = message;
  return MSGS_ERR_INVALID_ARGUMENT;
}

msgs_status copy_out(const std::string& s, char* buf, size_t size, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && size > s.size()) std::memcpy(buf, s.c_str(), s.size() + 1);
  else if (buf && size > 0) buf[0] = '\0';
  g_last_error.clear();
  return MSGS_OK;
}

}  // namespace

extern "C" {

const char* msgs_last_error(void) { return g_last_error.c_str(); }

const char* msgs_status_name(msgs_status status) {
  switch (status) {
    case MSGS_OK: return "ok";
    case MSGS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MSGS_ERR_PARSE: return "parse";
    case MSGS_ERR_IO: return "io";
    case MSGS_ERR_NUMERIC: return "numeric";
    case MSGS_ERR_UNSUPPORTED: return "unsupported";
    case MSGS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* msgs_version(void) { return MSGS_VERSION; }

msgs_status msgs_set_threads(int threads) {
  if (threads < 0) return invalid("thread count must be non-negative");
  return guarded([&] { msgs::set_thread_count(threads); });
}

msgs_status msgs_config_create(msgs_config** out) {
  if (!out) return invalid("out is null");
  return guarded([&] { *out = new msgs_config{}; });
}

msgs_status msgs_config_load(const char* path, msgs_config** out) {
  if (!path || !out) return invalid("path or out is null");
  return guarded([&] { *out = new msgs_config{msgs::Config::load(path)}; });
}

msgs_status msgs_config_parse(const char* text, msgs_config** out) {
  if (!text || !out) return invalid("text or out is null");
  return guarded([&] { *out = new msgs_config{msgs::Config::parse(text, "<string>")}; });
}

void msgs_config_destroy(msgs_config* config) { delete config; }

msgs_status msgs_config_set(msgs_config* config, const char* section, const char* key, const char* value) {
  if (!config || !section || !key || !value) return invalid("null argument");
  return guarded([&] { config->cfg.set(section, key, value); });
}

msgs_status msgs_config_get(const msgs_config* config, const char* section, const char* key, char* buf, size_t size,
                            size_t* needed) {
  if (!config || !section || !key) return invalid("null argument");
  const auto v = config->cfg.get(section, key);
  if (!v) {
    g_last_error = std::string("no key ") + section + "." + key;
    return MSGS_ERR_INVALID_ARGUMENT;
  }
  return copy_out(*v, buf, size, needed);
}

msgs_status msgs_config_to_text(const msgs_config* config, char* buf, size_t size, size_t* needed) {
  if (!config) return invalid("config is null");
  return copy_out(config->cfg.to_text(), buf, size, needed);
}

size_t msgs_command_count(void) { return msgs::commands().size(); }

const char* msgs_command_name(size_t index) {
  const auto& all = msgs::commands();
  return index < all.size() ? all[index].name.c_str() : nullptr;
}

const char* msgs_command_summary(size_t index) {
  const auto& all = msgs::commands();
  return index < all.size() ? all[index].summary.c_str() : nullptr;
}

msgs_status msgs_command_key_count(const char* command, size_t* count) {
  if (!command || !count) return invalid("null argument");
  return guarded([&] { *count = msgs::command_info(command).keys.size(); });
}

msgs_status msgs_command_key(const char* command, size_t index, msgs_key_info* info) {
  if (!command || !info) return invalid("null argument");
  return guarded([&] {
    const auto& keys = msgs::command_info(command).keys;
    if (index >= keys.size()) msgs::fail(msgs::ErrorCode::InvalidArgument, "key index out of range");
    const auto& k = keys[index];
    info->section = k.section.c_str();
    info->key = k.key.c_str();
    info->default_value = k.default_value.c_str();
    info->help = k.help.c_str();
    info->kind = static_cast<msgs_key_kind>(k.kind);
  });
}

msgs_status msgs_check(const char* command, const msgs_config* config) {
  if (!command) return invalid("command is null");
  return guarded([&] {
    const auto& info = msgs::command_info(command);
    msgs::check_inputs(info, msgs::effective_config(info, config ? config->cfg : msgs::Config{}));
  });
}

msgs_status msgs_run(const char* command, const msgs_config* config, const char* output_dir, msgs_log_fn log,
                     void* user_data) {
  if (!command || !output_dir) return invalid("command or output_dir is null");
  return guarded([&] {
    msgs::LogFn fn;
    if (log) fn = [log, user_data](const std::string& m) { log(m.c_str(), user_data); };
    msgs::run_command(command, config ? config->cfg : msgs::Config{}, output_dir, fn);
  });
}

}  // extern "C"
