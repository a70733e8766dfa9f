#include "config.hpp"

#include <charconv>
#include <sstream>

#include "lyacert/error.hpp"

namespace lyacert::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* kind) {
  throw Error(ErrorCode::InvalidConfig, "key '" + key + "' expects " + kind + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (value.empty() || ec != std::errc{} || ptr != last) bad_value(key, value, "a number");
  return out;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
    bad_value(key, value, "an integer");
  }
  return out;
}

std::vector<std::size_t> to_widths(const std::string& key, const std::string& value) {
  std::vector<std::size_t> widths;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    widths.push_back(to_int<std::size_t>(key, item));
  }
  return widths;
}

// Simulation defaults for each named fixture.
const std::map<std::string, KeyValues>& presets() {
  static const std::map<std::string, KeyValues> table = {
      {"stable",
       {{"a", "-4"}, {"b", "-2"}, {"e0", "1"}, {"edot0", "0"}, {"noise_sigma", "0.001"},
        {"dt", "0.01"}, {"t_end", "10"}}},
      {"unstable",
       {{"a", "1"}, {"b", "0"}, {"e0", "0.01"}, {"edot0", "0"}, {"noise_sigma", "0.001"},
        {"dt", "0.01"}, {"t_end", "10"}}},
  };
  return table;
}

}  // namespace

const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> keys = {
      {"preset", "stable", "simulation fixture: stable | unstable"},
      {"m", "1", "error dimension"},
      {"a", "", "stiffness in e_ddot = a e + b e_dot (preset)"},
      {"b", "", "damping in e_ddot = a e + b e_dot (preset)"},
      {"noise_sigma", "", "measurement noise standard deviation (preset)"},
      {"t_end", "", "simulated duration in seconds (preset)"},
      {"dt", "", "sample period in seconds (preset)"},
      {"e0", "", "initial error (preset)"},
      {"edot0", "", "initial error rate (preset)"},
      {"reference", "sinusoid", "reference signal: sinusoid | constant"},
      {"amplitude", "1", "sinusoid amplitude"},
      {"angular_frequency", "1", "sinusoid angular frequency in rad/s"},
      {"level", "0", "constant reference level"},
      {"gamma", "0.01", "training margin (loss enforces V_dot <= -gamma)"},
      {"epsilon", "0", "certification threshold (V_dot <= epsilon)"},
      {"alpha", "0.05", "tolerated violation fraction"},
      {"diag_floor", "0.05", "lower bound added to every diagonal entry of L"},
      {"equilibrium_radius", "0", "states with |xi| below this are not judged"},
      {"epochs", "500", "Adam steps"},
      {"lr", "0.001", "Adam learning rate"},
      {"seed", "0", "seed for simulation noise and network initialisation"},
      {"smoothing_window", "101", "odd moving-average width applied before differencing"},
      {"weight_decay", "0", "decoupled weight decay"},
      {"train_fraction", "0.8", "leading fraction of samples used for training"},
      {"hidden", "16,16", "hidden layer widths, comma separated (empty for none)"},
      {"format", "", "trajectory format: csv | jsonl (default: by file extension)"},
  };
  return keys;
}

KeyValues parse_config_text(const std::string& text) {
  KeyValues out;
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "expected 'key = value'", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool known = false;
    for (const auto& info : known_keys()) known = known || info.key == key;
    if (!known) throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'", line_no);
    out[key] = value;
  }
  return out;
}

RunConfig resolve_config(const KeyValues& file, const EnvLookup& env, const KeyValues& flags) {
  KeyValues merged;
  for (const auto& info : known_keys()) {
    if (!info.fallback.empty()) merged[info.key] = info.fallback;
  }
  for (const auto& [key, value] : file) merged[key] = value;
  if (env) {
    if (auto seed = env("LYACERT_SEED")) merged["seed"] = *seed;
  }
  for (const auto& [key, value] : flags) merged[key] = value;

  RunConfig config;
  config.preset = merged.at("preset");
  const auto preset = presets().find(config.preset);
  if (preset == presets().end()) {
    throw Error(ErrorCode::InvalidConfig, "unknown preset '" + config.preset + "'");
  }
  // Preset values sit below everything the user supplied.
  for (const auto& [key, value] : preset->second) {
    if (!file.contains(key) && !flags.contains(key)) merged[key] = value;
  }

  auto number = [&](const char* key) { return to_double(key, merged.at(key)); };

  config.system.m = to_int<std::size_t>("m", merged.at("m"));
  config.system.a = number("a");
  config.system.b = number("b");
  config.system.noise_sigma = number("noise_sigma");
  config.system.seed = to_int<std::uint64_t>("seed", merged.at("seed"));

  config.sim.t_end = number("t_end");
  config.sim.dt = number("dt");
  config.sim.e0 = number("e0");
  config.sim.edot0 = number("edot0");
  const std::string& reference = merged.at("reference");
  if (reference == "sinusoid") {
    config.sim.reference.kind = Reference::Kind::Sinusoid;
  } else if (reference == "constant") {
    config.sim.reference.kind = Reference::Kind::Constant;
  } else {
    bad_value("reference", reference, "sinusoid or constant");
  }
  config.sim.reference.amplitude = number("amplitude");
  config.sim.reference.angular_frequency = number("angular_frequency");
  config.sim.reference.level = number("level");

  auto& cert = config.cert;
  cert.gamma = number("gamma");
  cert.epsilon = number("epsilon");
  cert.alpha = number("alpha");
  cert.diag_floor = number("diag_floor");
  cert.equilibrium_radius = number("equilibrium_radius");
  cert.epochs = to_int<std::size_t>("epochs", merged.at("epochs"));
  cert.lr = number("lr");
  cert.seed = config.system.seed;
  cert.smoothing_window = to_int<int>("smoothing_window", merged.at("smoothing_window"));
  cert.weight_decay = number("weight_decay");
  cert.train_fraction = number("train_fraction");
  cert.hidden = to_widths("hidden", merged.contains("hidden") ? merged.at("hidden") : "");
  cert.validate();

  if (auto it = merged.find("format"); it != merged.end() && !it->second.empty()) {
    if (it->second == "csv") {
      config.format = TrajectoryFormat::Csv;
    } else if (it->second == "jsonl") {
      config.format = TrajectoryFormat::Jsonl;
    } else {
      bad_value("format", it->second, "csv or jsonl");
    }
  }
  return config;
}

TrajectoryFormat format_for(const RunConfig& config, const std::string& path) {
  if (config.format) return *config.format;
  const auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".jsonl") return TrajectoryFormat::Jsonl;
  return TrajectoryFormat::Csv;
}

}  // namespace lyacert::cli
