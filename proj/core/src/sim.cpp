#include "lyacert/sim.hpp"

#include <cmath>
#include <random>
#include <string>

namespace lyacert {

namespace {

void validate(const ErrorSystemSpec& spec, const SimConfig& cfg) {
  if (spec.m == 0) throw Error(ErrorCode::InvalidConfig, "error dimension m must be >= 1");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw Error(ErrorCode::InvalidConfig, "noise_sigma must be finite and >= 0");
  }
  if (!std::isfinite(spec.a) || !std::isfinite(spec.b)) {
    throw Error(ErrorCode::InvalidConfig, "a and b must be finite");
  }
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw Error(ErrorCode::InvalidConfig, "dt must be > 0");
  }
  if (!(cfg.t_end >= 3.0 * cfg.dt) || !std::isfinite(cfg.t_end)) {
    throw Error(ErrorCode::InvalidConfig, "t_end must be at least 3 * dt");
  }
  if (!std::isfinite(cfg.e0) || !std::isfinite(cfg.edot0)) {
    throw Error(ErrorCode::InvalidConfig, "initial conditions must be finite");
  }
}

// State layout [e_0..e_{m-1}, edot_0..edot_{m-1}].
VectorField error_dynamics(const ErrorSystemSpec& spec) {
  const auto m = static_cast<Eigen::Index>(spec.m);
  const double a = spec.a;
  const double b = spec.b;
  return [m, a, b](double, const Eigen::VectorXd& s) {
    Eigen::VectorXd ds(2 * m);
    ds.head(m) = s.tail(m);
    ds.tail(m) = a * s.head(m) + b * s.tail(m);
    return ds;
  };
}

template <typename OnSample>
void run(const ErrorSystemSpec& spec, const SimConfig& cfg, OnSample&& on_sample) {
  validate(spec, cfg);
  const auto m = static_cast<Eigen::Index>(spec.m);
  const VectorField f = error_dynamics(spec);
  Eigen::VectorXd state(2 * m);
  state.head(m).setConstant(cfg.e0);
  state.tail(m).setConstant(cfg.edot0);

  const std::size_t count = sample_count(cfg);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (k > 0) state = rk4_step(f, state, static_cast<double>(k - 1) * cfg.dt, cfg.dt);
    on_sample(k, t, state.head(m));
  }
}

}  // namespace

double Reference::at(double t) const {
  switch (kind) {
    case Kind::Sinusoid: return amplitude * std::sin(angular_frequency * t);
    case Kind::Constant: return level;
  }
  return 0.0;
}

Eigen::VectorXd rk4_step(const VectorField& f, const Eigen::VectorXd& state, double t, double dt) {
  auto checked = [](Eigen::VectorXd v, const char* stage) {
    if (!v.allFinite()) {
      throw Error(ErrorCode::NonFiniteState, std::string("RK4 stage ") + stage + " is not finite");
    }
    return v;
  };
  const Eigen::VectorXd k1 = checked(f(t, state), "k1");
  const Eigen::VectorXd k2 = checked(f(t + 0.5 * dt, state + 0.5 * dt * k1), "k2");
  const Eigen::VectorXd k3 = checked(f(t + 0.5 * dt, state + 0.5 * dt * k2), "k3");
  const Eigen::VectorXd k4 = checked(f(t + dt, state + dt * k3), "k4");
  return checked(state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), "result");
}

std::size_t sample_count(const SimConfig& cfg) {
  const double steps = std::floor(cfg.t_end / cfg.dt + 1e-9);
  return static_cast<std::size_t>(steps) + 1;
}

Trajectory simulate(const ErrorSystemSpec& spec, const SimConfig& cfg) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<TrajectorySample> samples;
  samples.reserve(sample_count(cfg));
  const auto m = static_cast<Eigen::Index>(spec.m);

  run(spec, cfg, [&](std::size_t k, double t, const Eigen::VectorXd& e) {
    if (e.cwiseAbs().maxCoeff() > kDivergenceCap) {
      throw DivergenceError("error magnitude exceeded " + std::to_string(kDivergenceCap) +
                                " at t=" + std::to_string(t) + " (sample " + std::to_string(k) +
                                ")",
                            std::move(samples));
    }
    TrajectorySample s;
    s.t = t;
    s.r = Eigen::VectorXd::Constant(m, cfg.reference.at(t));
    s.x = s.r - e;
    if (spec.noise_sigma > 0.0) {
      for (Eigen::Index j = 0; j < m; ++j) s.x[j] += spec.noise_sigma * noise(rng);
    }
    samples.push_back(std::move(s));
  });
  return Trajectory(std::move(samples));
}

std::vector<Eigen::VectorXd> integrate_error(const ErrorSystemSpec& spec, const SimConfig& cfg) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(sample_count(cfg));
  run(spec, cfg, [&](std::size_t, double, const Eigen::VectorXd& e) { out.push_back(e); });
  return out;
}

}  // namespace lyacert
