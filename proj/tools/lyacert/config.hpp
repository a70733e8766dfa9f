#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lyacert/certifier.hpp"
#include "lyacert/sim.hpp"
#include "lyacert/trajectory.hpp"

namespace lyacert::cli {

using KeyValues = std::map<std::string, std::string>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

struct RunConfig {
  std::string preset = "stable";
  ErrorSystemSpec system;
  SimConfig sim;
  CertConfig cert;
  std::optional<TrajectoryFormat> format;  // unset: infer from file extension
};

// Every recognised key with its default and a one-line description.
struct KeyInfo {
  std::string key;
  std::string fallback;
  std::string help;
};
const std::vector<KeyInfo>& known_keys();

// Parses `key = value` lines; `#` starts a comment. Throws Error(InvalidConfig)
// with the line number on malformed lines or unknown keys.
KeyValues parse_config_text(const std::string& text);

// Layers default < file < environment (LYACERT_SEED) < flags and converts the
// result. The preset, wherever it comes from, only supplies defaults for the
// simulation keys.
RunConfig resolve_config(const KeyValues& file, const EnvLookup& env, const KeyValues& flags);

TrajectoryFormat format_for(const RunConfig& config, const std::string& path);

}  // namespace lyacert::cli
