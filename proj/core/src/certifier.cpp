#include "lyacert/certifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "lyacert/error.hpp"
#include "lyacert/lyapunov.hpp"

namespace lyacert {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

void check_network_matches(const NetworkParameters& params, const StateSeries& states) {
  if (params.spec.input_dim != states.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "network input dimension " + std::to_string(params.spec.input_dim) +
                    " does not match state dimension " + std::to_string(states.dim()));
  }
  if (params.spec.output_dim != factor_entry_count(states.dim())) {
    throw Error(ErrorCode::DimensionMismatch,
                "network output dimension " + std::to_string(params.spec.output_dim) +
                    " is not n(n+1)/2 for n=" + std::to_string(states.dim()));
  }
}

struct SampleEval {
  ForwardResult net;
  CholeskyFactor factor;
  double value;
};

SampleEval evaluate_sample(const NetworkParameters& params, const Eigen::VectorXd& xi,
                           double diag_floor) {
  ForwardResult net = forward(params, xi);
  CholeskyFactor factor = assemble_factor(std::span<const double>(net.raw.data(), net.raw.size()),
                                          static_cast<std::size_t>(xi.size()), diag_floor);
  const double value = lyapunov_value(factor, xi);
  return SampleEval{std::move(net), std::move(factor), value};
}

std::string format_number(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

nlohmann::json config_json(const CertConfig& c) {
  return {{"gamma", c.gamma},
          {"epsilon", c.epsilon},
          {"alpha", c.alpha},
          {"diag_floor", c.diag_floor},
          {"equilibrium_radius", c.equilibrium_radius},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"seed", c.seed},
          {"smoothing_window", c.smoothing_window},
          {"weight_decay", c.weight_decay},
          {"train_fraction", c.train_fraction},
          {"hidden", c.hidden}};
}

}  // namespace

void CertConfig::validate() const {
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be > 0");
  require(std::isfinite(epsilon) && epsilon >= 0.0, "epsilon must be >= 0");
  require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
  require(std::isfinite(diag_floor) && diag_floor >= 0.0, "diag_floor must be >= 0");
  require(std::isfinite(equilibrium_radius) && equilibrium_radius >= 0.0,
          "equilibrium_radius must be >= 0");
  require(std::isfinite(lr) && lr > 0.0, "lr must be > 0");
  require(smoothing_window >= 1 && smoothing_window % 2 == 1,
          "smoothing_window must be an odd integer >= 1");
  require(std::isfinite(weight_decay) && weight_decay >= 0.0, "weight_decay must be >= 0");
  require(train_fraction > 0.0 && train_fraction <= 1.0, "train_fraction must lie in (0, 1]");
  for (std::size_t width : hidden) require(width > 0, "hidden layer widths must be > 0");
}

ValueSeries v_series(const NetworkParameters& params, const StateSeries& states,
                     double diag_floor) {
  check_network_matches(params, states);
  ValueSeries out;
  out.reserve(states.size());
  for (const auto& entry : states.entries()) {
    out.push_back({entry.t, evaluate_sample(params, entry.v, diag_floor).value});
  }
  return out;
}

ValueSeries vdot_series(const ValueSeries& values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "V_dot needs at least 2 samples");
  }
  ValueSeries out;
  out.reserve(values.size() - 1);
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    const double dt = values[k + 1].t - values[k].t;
    if (!(dt > 0.0)) {
      throw Error(ErrorCode::NonMonotoneTime, "timestamps not increasing at sample " +
                                                  std::to_string(k + 1));
    }
    out.push_back({values[k].t, (values[k + 1].value - values[k].value) / dt});
  }
  return out;
}

double hinge_loss(double vdot, double gamma) { return std::max(0.0, vdot + gamma); }

double hinge_slope(double vdot, double gamma) { return vdot + gamma > 0.0 ? 1.0 : 0.0; }

LossAndGrad epoch_gradient(const NetworkParameters& params, const StateSeries& states,
                           const CertConfig& config) {
  check_network_matches(params, states);
  const std::size_t n = states.size();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "loss needs at least 2 samples");

  std::vector<SampleEval> evals;
  evals.reserve(n);
  for (const auto& entry : states.entries()) {
    evals.push_back(evaluate_sample(params, entry.v, config.diag_floor));
  }

  // dLoss/dV_k collects -slope_k/dt_k from its own difference and
  // +slope_{k-1}/dt_{k-1} from the previous one.
  const double scale = 1.0 / static_cast<double>(n - 1);
  std::vector<double> value_weight(n, 0.0);
  double loss = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = states[k + 1].t - states[k].t;
    const double vdot = (evals[k + 1].value - evals[k].value) / dt;
    loss += hinge_loss(vdot, config.gamma);
    const double slope = hinge_slope(vdot, config.gamma);
    if (slope != 0.0) {
      value_weight[k] -= scale * slope / dt;
      value_weight[k + 1] += scale * slope / dt;
    }
  }

  LossAndGrad out{loss * scale, ParameterGrads::zeros_like(params)};
  for (std::size_t k = 0; k < n; ++k) {
    if (value_weight[k] == 0.0) continue;
    const auto& eval = evals[k];
    const Eigen::MatrixXd grad_factor = value_grad_factor(eval.factor, states[k].v);
    const Eigen::VectorXd cotangent =
        value_weight[k] *
        factor_grad_to_raw(std::span<const double>(eval.net.raw.data(), eval.net.raw.size()),
                           grad_factor);
    out.grads += backward(params, eval.net.trace, cotangent);
  }
  return out;
}

double epoch_loss(const NetworkParameters& params, const StateSeries& states,
                  const CertConfig& config) {
  const ValueSeries vdot = vdot_series(v_series(params, states, config.diag_floor));
  double loss = 0.0;
  for (const auto& d : vdot) loss += hinge_loss(d.value, config.gamma);
  return loss / static_cast<double>(vdot.size());
}

std::size_t training_sample_count(std::size_t n, double train_fraction) {
  const auto count =
      static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(count, std::min<std::size_t>(2, n), n);
}

TrainResult train(const StateSeries& states, const CertConfig& config) {
  config.validate();
  if (states.dim() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "training needs a stacked state of dimension >= 2");
  }
  const StateSeries slice = states.head(training_sample_count(states.size(), config.train_fraction));
  if (slice.size() < 2) throw Error(ErrorCode::TooFewSamples, "training slice has < 2 samples");

  TrainResult result{init_params(LayerSpec::for_state_dim(states.dim(), config.hidden), config.seed),
                     {}};
  result.history.reserve(config.epochs + 1);
  AdamState adam = AdamState::zeros_like(result.params);
  const AdamOptions options{config.lr, 0.9, 0.999, 1e-8, config.weight_decay};

  auto check_finite = [](double loss, std::size_t epoch) {
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::NonFiniteLoss,
                  "loss became non-finite at epoch " + std::to_string(epoch));
    }
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    LossAndGrad step = epoch_gradient(result.params, slice, config);
    check_finite(step.loss, epoch);
    result.history.push_back(step.loss);
    adam_step(result.params, step.grads, adam, options);
  }
  const double final_loss = epoch_loss(result.params, slice, config);
  check_finite(final_loss, config.epochs);
  result.history.push_back(final_loss);
  return result;
}

std::vector<std::size_t> violating_samples(const ValueSeries& vdot, const StateSeries& states,
                                           double epsilon, double equilibrium_radius) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < vdot.size(); ++k) {
    if (states[k].v.norm() < equilibrium_radius) continue;
    if (vdot[k].value > epsilon) out.push_back(k);
  }
  return out;
}

Certificate certify(const NetworkParameters& params, const StateSeries& states,
                    const CertConfig& config) {
  config.validate();
  const ValueSeries values = v_series(params, states, config.diag_floor);
  const ValueSeries vdot = vdot_series(values);

  Certificate cert;
  cert.config = config;
  cert.violations.assign(vdot.size(), false);

  std::size_t violations = 0;
  double sum_vdot = 0.0;
  double max_vdot = -std::numeric_limits<double>::infinity();
  double loss = 0.0;
  for (std::size_t k = 0; k < vdot.size(); ++k) {
    const double d = vdot[k].value;
    loss += hinge_loss(d, config.gamma);
    if (states[k].v.norm() < config.equilibrium_radius) {
      ++cert.excluded_samples;
      continue;
    }
    ++cert.evaluated_samples;
    sum_vdot += d;
    max_vdot = std::max(max_vdot, d);
    if (d > config.epsilon) {
      ++violations;
      cert.violations[k] = true;
    }
  }

  if (cert.evaluated_samples == 0) {
    cert.violation_rate = 1.0;
    cert.certified = false;
    cert.max_vdot = std::numeric_limits<double>::quiet_NaN();
    cert.mean_vdot = std::numeric_limits<double>::quiet_NaN();
    cert.warnings.push_back("every sample lies inside the equilibrium radius; nothing to certify");
  } else {
    cert.violation_rate =
        static_cast<double>(violations) / static_cast<double>(cert.evaluated_samples);
    cert.certified = cert.violation_rate <= config.alpha;
    cert.max_vdot = max_vdot;
    cert.mean_vdot = sum_vdot / static_cast<double>(cert.evaluated_samples);
  }

  cert.min_v = std::numeric_limits<double>::infinity();
  for (const auto& v : values) cert.min_v = std::min(cert.min_v, v.value);
  cert.final_loss = loss / static_cast<double>(vdot.size());

  std::vector<std::size_t> by_norm(states.size());
  std::iota(by_norm.begin(), by_norm.end(), 0);
  std::stable_sort(by_norm.begin(), by_norm.end(), [&](std::size_t a, std::size_t b) {
    return states[a].v.norm() < states[b].v.norm();
  });
  for (std::size_t k : {std::size_t{0}, by_norm[(states.size() - 1) / 2], states.size() - 1}) {
    const auto eval = evaluate_sample(params, states[k].v, config.diag_floor);
    cert.q_snapshots.push_back({states[k].v, gram(eval.factor).matrix()});
  }
  return cert;
}

void write_certificate_json(std::ostream& out, const Certificate& cert) {
  using nlohmann::json;
  json snapshots = json::array();
  for (const auto& snap : cert.q_snapshots) {
    json q = json::array();
    for (Eigen::Index i = 0; i < snap.q.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < snap.q.cols(); ++j) row.push_back(snap.q(i, j));
      q.push_back(std::move(row));
    }
    snapshots.push_back({{"xi", std::vector<double>(snap.xi.data(), snap.xi.data() + snap.xi.size())},
                         {"q", std::move(q)}});
  }
  json doc = {{"certified", cert.certified},
              {"violation_rate", cert.violation_rate},
              {"evaluated_samples", cert.evaluated_samples},
              {"excluded_samples", cert.excluded_samples},
              {"max_vdot", cert.max_vdot},
              {"mean_vdot", cert.mean_vdot},
              {"min_v", cert.min_v},
              {"final_loss", cert.final_loss},
              {"config", config_json(cert.config)},
              {"q_snapshots", std::move(snapshots)}};
  out << doc.dump(2) << '\n';
}

void write_history_csv(std::ostream& out, const std::vector<double>& history) {
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    out << e << ',' << format_number(history[e]) << '\n';
  }
}

void write_plot_data(std::ostream& out, const NetworkParameters& params, const StateSeries& states,
                     double diag_floor) {
  const ValueSeries values = v_series(params, states, diag_floor);
  const ValueSeries vdot = vdot_series(values);
  out << "# t V vdot xi_norm\n";
  for (std::size_t k = 0; k < vdot.size(); ++k) {
    out << format_number(values[k].t) << ' ' << format_number(values[k].value) << ' '
        << format_number(vdot[k].value) << ' ' << format_number(states[k].v.norm()) << '\n';
  }
}

}  // namespace lyacert
