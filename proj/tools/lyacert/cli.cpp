#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lyacert/error.hpp"
#include "lyacert/network.hpp"

namespace lyacert::cli {

namespace {

// Raised inside a command to leave with a specific exit code.
struct Exit {
  int code;
  std::string message;
};

std::string flag_name(const std::string& key) {
  std::string out = "--";
  for (char c : key) out += c == '_' ? '-' : c;
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Exit{kIoError, "cannot open '" + path + "' for reading"};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Exit{kIoError, "cannot open '" + path + "' for writing"};
  writer(out);
  out.flush();
  if (!out) throw Exit{kIoError, "failed writing '" + path + "'"};
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.rfind('.');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? path.substr(0, dot) : path) + suffix;
}

RunConfig load_config(const std::string& config_path, const KeyValues& flags, const EnvLookup& env) {
  KeyValues file;
  if (!config_path.empty()) {
    const std::string text = read_file(config_path);
    try {
      file = parse_config_text(text);
    } catch (const Error& e) {
      throw Exit{kConfigError, config_path + ": " + e.what()};
    }
  }
  try {
    return resolve_config(file, env, flags);
  } catch (const Error& e) {
    throw Exit{kConfigError, e.what()};
  }
}

Trajectory load_trajectory(const std::string& path, const RunConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Exit{kIoError, "cannot open '" + path + "' for reading"};
  try {
    return parse_trajectory(in, format_for(config, path));
  } catch (const Error& e) {
    throw Exit{kIoError, path + ": " + e.what()};
  }
}

StateSeries states_for(const Trajectory& traj, const RunConfig& config) {
  try {
    return make_states(traj, config.cert.smoothing_window);
  } catch (const Error& e) {
    throw Exit{kConfigError, e.what()};
  }
}

std::string describe(const ErrorSystemSpec& spec) {
  return spec.is_stable() ? "stable" : "unstable";
}

int cmd_simulate(const RunConfig& config, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  ErrorSystemSpec spec = config.system;
  try {
    const Trajectory traj = simulate(spec, config.sim);
    write_file(out_path, [&](std::ostream& os) { write_csv(os, traj); });
    out << "N=" << traj.size() << " m=" << traj.dim() << " mode=" << describe(spec) << '\n';
  } catch (const DivergenceError& e) {
    const auto& partial = e.partial();
    write_file(out_path, [&](std::ostream& os) {
      write_csv(os, std::span<const TrajectorySample>(partial));
    });
    err << "warning: " << e.what() << "; wrote " << partial.size() << " samples\n";
    out << "N=" << partial.size() << " m=" << spec.m << " mode=" << describe(spec) << '\n';
  } catch (const Error& e) {
    throw Exit{kConfigError, e.what()};
  }
  return kOk;
}

int cmd_train(const RunConfig& config, const std::string& traj_path, const std::string& model_out,
              std::string history_out, std::ostream& out) {
  const Trajectory traj = load_trajectory(traj_path, config);
  const StateSeries states = states_for(traj, config);
  TrainResult result;
  try {
    result = train(states, config.cert);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NonFiniteLoss) throw Exit{kNonFiniteLoss, e.what()};
    throw Exit{kConfigError, e.what()};
  }
  if (history_out.empty()) history_out = sibling_path(model_out, ".history.csv");
  write_file(model_out, [&](std::ostream& os) { save_model(os, result.params); });
  write_file(history_out, [&](std::ostream& os) { write_history_csv(os, result.history); });
  out << "samples=" << states.size() << " n=" << states.dim()
      << " train_samples=" << training_sample_count(states.size(), config.cert.train_fraction)
      << " epochs=" << config.cert.epochs << '\n';
  out << "final loss: " << std::setprecision(10) << result.history.back() << '\n';
  return kOk;
}

int cmd_certify(const RunConfig& config, const std::string& model_path,
                const std::string& traj_path, const std::string& report_out,
                std::string plot_out, std::ostream& out, std::ostream& err) {
  NetworkParameters params;
  {
    std::ifstream in(model_path, std::ios::binary);
    if (!in) throw Exit{kIoError, "cannot open '" + model_path + "' for reading"};
    try {
      params = load_model(in);
    } catch (const Error& e) {
      throw Exit{kIoError, model_path + ": " + e.what()};
    }
  }
  const Trajectory traj = load_trajectory(traj_path, config);
  if (params.spec.input_dim != 2 * traj.dim()) {
    throw Exit{kDimensionMismatch, "model expects stacked states of dimension " +
                                       std::to_string(params.spec.input_dim) +
                                       " but the trajectory has m=" + std::to_string(traj.dim()) +
                                       " (n=" + std::to_string(2 * traj.dim()) + ")"};
  }
  const StateSeries states = states_for(traj, config);
  Certificate cert;
  try {
    cert = certify(params, states, config.cert);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DimensionMismatch) throw Exit{kDimensionMismatch, e.what()};
    throw Exit{kConfigError, e.what()};
  }
  for (const auto& warning : cert.warnings) err << "warning: " << warning << '\n';

  if (plot_out.empty()) plot_out = sibling_path(report_out, ".plot.dat");
  write_file(report_out, [&](std::ostream& os) { write_certificate_json(os, cert); });
  write_file(plot_out, [&](std::ostream& os) {
    write_plot_data(os, params, states, config.cert.diag_floor);
  });
  out << "certified: " << (cert.certified ? "true" : "false") << '\n'
      << "violation_rate: " << cert.violation_rate << " (alpha " << config.cert.alpha << ")\n"
      << "evaluated_samples: " << cert.evaluated_samples
      << " excluded_samples: " << cert.excluded_samples << '\n';
  return cert.certified ? kOk : kNotCertified;
}

std::string number_or_null(const nlohmann::json& value) {
  if (value.is_null()) return "n/a";
  std::ostringstream os;
  os << value.get<double>();
  return os.str();
}

int cmd_report(const std::string& report_path, std::ostream& out) {
  const std::string text = read_file(report_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    const auto& cfg = doc.at("config");
    out << "certified: " << (doc.at("certified").get<bool>() ? "true" : "false") << '\n'
        << "violation_rate: " << number_or_null(doc.at("violation_rate")) << '\n'
        << "alpha: " << number_or_null(cfg.at("alpha")) << '\n'
        << "epsilon: " << number_or_null(cfg.at("epsilon")) << '\n'
        << "max_vdot: " << number_or_null(doc.at("max_vdot")) << '\n'
        << "mean_vdot: " << number_or_null(doc.at("mean_vdot")) << '\n'
        << "min_v: " << number_or_null(doc.at("min_v")) << '\n'
        << "final_loss: " << number_or_null(doc.at("final_loss")) << '\n'
        << "evaluated_samples: " << doc.at("evaluated_samples").get<std::size_t>() << '\n'
        << "excluded_samples: " << doc.at("excluded_samples").get<std::size_t>() << '\n';
  } catch (const nlohmann::json::exception& e) {
    throw Exit{kIoError, report_path + ": invalid report: " + e.what()};
  }
  return kOk;
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* value = std::getenv(name.c_str())) return std::string(value);
    return std::nullopt;
  };
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const EnvLookup& env) {
  CLI::App app{"Learn and check trajectory-based Lyapunov stability certificates", "lyacert"};
  app.require_subcommand(1);

  KeyValues flags;
  std::string config_path;
  auto add_config_flags = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file");
    for (const auto& info : known_keys()) {
      std::string help = info.help;
      if (!info.fallback.empty()) help += " [default: " + info.fallback + "]";
      sub->add_option_function<std::string>(
          flag_name(info.key), [&flags, key = info.key](const std::string& v) { flags[key] = v; },
          help);
    }
  };

  std::string out_path, traj_path, model_out, history_out, model_path, report_out, plot_out,
      report_path;

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "write a synthetic trajectory CSV");
  add_config_flags(simulate_cmd);
  simulate_cmd->add_option("--out", out_path, "output trajectory CSV")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "fit a Lyapunov candidate to a trajectory");
  add_config_flags(train_cmd);
  train_cmd->add_option("--traj", traj_path, "trajectory file (csv or jsonl)")->required();
  train_cmd->add_option("--model-out", model_out, "model JSON output")->required();
  train_cmd->add_option("--history-out", history_out, "loss history CSV [default: <model>.history.csv]");

  CLI::App* certify_cmd = app.add_subcommand("certify", "check a trajectory against a model");
  add_config_flags(certify_cmd);
  certify_cmd->add_option("--model", model_path, "model JSON")->required();
  certify_cmd->add_option("--traj", traj_path, "trajectory file (csv or jsonl)")->required();
  certify_cmd->add_option("--report-out", report_out, "certificate JSON output")->required();
  certify_cmd->add_option("--plot-out", plot_out, "plot data output [default: <report>.plot.dat]");

  CLI::App* report_cmd = app.add_subcommand("report", "summarise a certificate JSON");
  report_cmd->add_option("report", report_path, "certificate JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failing->help();
    return kConfigError;
  }

  try {
    if (report_cmd->parsed()) return cmd_report(report_path, out);
    const RunConfig config = load_config(config_path, flags, env);
    if (simulate_cmd->parsed()) return cmd_simulate(config, out_path, out, err);
    if (train_cmd->parsed()) return cmd_train(config, traj_path, model_out, history_out, out);
    if (certify_cmd->parsed()) {
      return cmd_certify(config, model_path, traj_path, report_out, plot_out, out, err);
    }
  } catch (const Exit& e) {
    err << "error: " << e.message << '\n';
    return e.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}

}  // namespace lyacert::cli
