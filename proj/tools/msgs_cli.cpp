// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Everything goes through the C API.

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msgs/msgs.h"

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct Key {
  std::string section;
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::string config_path;
  std::string output = ".";
  int threads = 0;
  std::vector<std::string> overrides;
  std::vector<Key> keys;
};

std::string flag_name(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

int report(msgs_status status, int exit_code) {
  std::fprintf(stderr, "error: code=%s message=\"%s\"\n", msgs_status_name(status),
               escape(msgs_last_error()).c_str());
  return exit_code;
}

int usage(const std::string& message) {
  std::fprintf(stderr, "error: code=usage message=\"%s\"\n", escape(message).c_str());
  return kUsageError;
}

void print_log(const char* message, void*) {
  std::fprintf(stdout, "%s\n", message);
  std::fflush(stdout);
}

using ConfigPtr = std::unique_ptr<msgs_config, decltype(&msgs_config_destroy)>;

int run(Command& cmd) {
  msgs_config* raw = nullptr;
  msgs_status st = MSGS_OK;
  if (!cmd.config_path.empty()) {
    st = msgs_config_load(cmd.config_path.c_str(), &raw);
    if (st == MSGS_ERR_IO) return report(st, kUsageError);
  } else {
    st = msgs_config_create(&raw);
  }
  if (st != MSGS_OK) return report(st, kRuntimeError);
  ConfigPtr config(raw, &msgs_config_destroy);

  for (const std::string& o : cmd.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) return usage("override '" + o + "' is not key=value");
    std::string name = o.substr(0, eq);
    const std::string value = o.substr(eq + 1);
    std::string section;
    const auto dot = name.find('.');
    if (dot != std::string::npos) {
      section = name.substr(0, dot);
      name = name.substr(dot + 1);
    }
    const Key* match = nullptr;
    for (const Key& k : cmd.keys) {
      if (k.key == name && (section.empty() || section == k.section)) match = &k;
    }
    if (!match) return usage("unknown key '" + o.substr(0, eq) + "' for " + cmd.name);
    msgs_config_set(config.get(), match->section.c_str(), match->key.c_str(), value.c_str());
  }
  for (const Key& k : cmd.keys) {
    if (k.option->count() > 0) msgs_config_set(config.get(), k.section.c_str(), k.key.c_str(), k.value.c_str());
  }

  st = msgs_check(cmd.name.c_str(), config.get());
  if (st != MSGS_OK) return report(st, kUsageError);
  st = msgs_set_threads(cmd.threads);
  if (st != MSGS_OK) return report(st, kUsageError);
  st = msgs_run(cmd.name.c_str(), config.get(), cmd.output.c_str(), &print_log, nullptr);
  if (st != MSGS_OK) return report(st, kRuntimeError);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-sequence Gaussian splatting and UAV data generation", "msgs"};
  app.set_version_flag("--version", msgs_version());
  app.require_subcommand(1);

  std::vector<Command> cmds(msgs_command_count());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    Command& cmd = cmds[i];
    cmd.name = msgs_command_name(i);
    cmd.app = app.add_subcommand(cmd.name, msgs_command_summary(i));
    cmd.app->add_option("-c,--config", cmd.config_path, "INI config file; flags override it");
    cmd.app->add_option("-o,--output", cmd.output, "output directory")->capture_default_str();
    cmd.app->add_option("-j,--threads", cmd.threads, "worker threads (0: all logical cores)")->check(CLI::NonNegativeNumber);
    cmd.app->add_option("overrides", cmd.overrides, "extra [section.]key=value overrides");

    std::size_t n = 0;
    msgs_command_key_count(cmd.name.c_str(), &n);
    cmd.keys.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      msgs_key_info info{};
      msgs_command_key(cmd.name.c_str(), j, &info);
      Key& k = cmd.keys[j];
      k.section = info.section;
      k.key = info.key;
      std::string help = std::string("[") + info.section + "] " + info.help;
      if (info.kind == MSGS_KEY_INPUT_PATH) help += " (required)";
      k.option = cmd.app->add_option("--" + flag_name(k.key), k.value, help)->default_str(info.default_value);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }
  for (Command& cmd : cmds) {
    if (cmd.app->parsed()) return run(cmd);
  }
  return kUsageError;
}
