// Copyright Contributors to the msgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "msgs/common/config.hpp"

namespace msgs {

enum class KeyKind {
  Value,
  InputPath,     // required existing file or directory
  OptionalPath,  // existing file or directory when non-empty
};

struct CommandKey {
  std::string section;
  std::string key;
  std::string default_value;
  std::string help;
  KeyKind kind = KeyKind::Value;
};

struct CommandInfo {
  std::string name;
  std::string summary;
  std::vector<CommandKey> keys;

  const CommandKey* find(const std::string& key) const;
};

/// train, render, refine-masks, extract-mesh, gen-trajectory, composite, eval.
const std::vector<CommandInfo>& commands();
const CommandInfo& command_info(const std::string& name);

/// Defaults overlaid with `user`. Unknown sections or keys are rejected.
Config effective_config(const CommandInfo& info, const Config& user);

/// Throws InvalidArgument naming the first required input path that is unset or missing.
void check_inputs(const CommandInfo& info, const Config& effective);

using LogFn = std::function<void(const std::string&)>;

/// Runs one subcommand; every output goes under `output_dir`, including the
/// effective configuration as config.ini.
void run_command(const std::string& name, const Config& user, const std::filesystem::path& output_dir,
                 const LogFn& log = {});

}  // namespace msgs
