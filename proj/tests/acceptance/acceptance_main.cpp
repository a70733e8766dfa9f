// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every threshold is fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>

#include "lyacert/certifier.hpp"
#include "lyacert/cli.hpp"
#include "lyacert/lyapunov.hpp"
#include "lyacert/network.hpp"
#include "lyacert/sim.hpp"
#include "lyacert/trajectory.hpp"
#include "oracles.hpp"

namespace {

using namespace lyacert;
namespace fs = std::filesystem;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// 1. Loss gradient against central differences.
Outcome gradient_check() {
  constexpr double kStep = 1e-6;
  constexpr double kTolerance = 1e-4;
  constexpr double kBudgetSeconds = 10.0;
  constexpr double kKinkMargin = 1e-4;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    CertConfig config;
    config.smoothing_window = 1;
    NetworkParameters p;
    StateSeries states;
    // Redraw instances with a difference sitting on the hinge kink, where the
    // loss is not differentiable.
    for (;;) {
      p = init_params(LayerSpec::for_state_dim(2, {8}), seed);
      testing::randomize(p, rng, 0.7);
      states = testing::random_states(20, 2, rng);
      bool near_kink = false;
      for (const auto& d : vdot_series(v_series(p, states, config.diag_floor))) {
        near_kink = near_kink || std::abs(d.value + config.gamma) < kKinkMargin;
      }
      if (!near_kink) break;
    }
    const LossAndGrad lg = epoch_gradient(p, states, config);
    const auto numeric = testing::finite_difference_grad(
        p, [&](const NetworkParameters& q) { return epoch_loss(q, states, config); }, kStep);
    worst = std::max(worst, testing::max_relative_error(testing::flatten(lg.grads), numeric));
  }
  const double elapsed = seconds_since(start);
  return {worst <= kTolerance && elapsed < kBudgetSeconds,
          "max rel err " + fmt(worst) + ", " + fmt(elapsed) + " s"};
}

// 2. Positive definiteness by construction.
Outcome positive_definiteness() {
  constexpr int kDraws = 1000;
  constexpr double kBudgetSeconds = 5.0;
  // N(0, 1) parameters. Much larger draws push gram's condition number past
  // 1/eps and the floating-point Cholesky witness fails even though the
  // factor's diagonal is still >= the floor.
  constexpr double kParameterScale = 1.0;
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  int failures = 0;
  for (int draw = 0; draw < kDraws; ++draw) {
    const std::size_t n = 2 + static_cast<std::size_t>(draw % 3) * 2;
    NetworkParameters p = init_params(LayerSpec::for_state_dim(n, {8}), static_cast<std::uint64_t>(draw));
    testing::randomize(p, rng, kParameterScale);
    Eigen::VectorXd xi(static_cast<Eigen::Index>(n));
    do {
      for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);
    } while (xi.isZero(0.0));
    const Eigen::VectorXd raw = evaluate(p, xi);
    const CholeskyFactor l = assemble_factor({raw.data(), static_cast<std::size_t>(raw.size())}, n, 0.05);
    const bool ok = lyapunov_value(l, xi) > 0.0 &&
                    Eigen::LLT<Eigen::MatrixXd>(gram(l).matrix()).info() == Eigen::Success &&
                    lyapunov_value(l, Eigen::VectorXd::Zero(xi.size())) == 0.0;
    failures += ok ? 0 : 1;
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < kBudgetSeconds,
          std::to_string(failures) + "/" + std::to_string(kDraws) + " failures, " + fmt(elapsed) + " s"};
}

constexpr std::uint64_t kFixtureSeed = 1;
constexpr double kEquilibriumRadius = 0.05;

ErrorSystemSpec fixture_system(bool stable) {
  ErrorSystemSpec spec;
  spec.a = stable ? -4.0 : 1.0;
  spec.b = stable ? -2.0 : 0.0;
  spec.noise_sigma = 0.001;
  spec.seed = kFixtureSeed;
  return spec;
}

SimConfig fixture_sim(bool stable) {
  SimConfig cfg;
  cfg.t_end = 10.0;
  cfg.dt = 0.01;
  cfg.e0 = stable ? 1.0 : 0.01;
  cfg.edot0 = 0.0;
  return cfg;
}

CertConfig fixture_cert() {
  CertConfig cfg;
  cfg.seed = kFixtureSeed;
  cfg.equilibrium_radius = kEquilibriumRadius;
  cfg.diag_floor = 0.05;
  return cfg;
}

// Simulates a fixture, trains on it with the default budget and certifies the
// same trajectory.
Certificate train_and_certify(bool stable, const CertConfig& cfg) {
  const Trajectory traj = simulate(fixture_system(stable), fixture_sim(stable));
  const StateSeries states = make_states(traj, cfg.smoothing_window);
  return certify(train(states, cfg).params, states, cfg);
}

// 3. Stable fixture is certified.
Outcome certify_stable() {
  constexpr double kAlpha = 0.05;
  constexpr double kBudgetSeconds = 60.0;
  const auto start = std::chrono::steady_clock::now();
  CertConfig cfg = fixture_cert();
  cfg.alpha = kAlpha;
  const Certificate c = train_and_certify(true, cfg);
  const double elapsed = seconds_since(start);
  return {c.certified && c.violation_rate <= kAlpha && elapsed < kBudgetSeconds,
          "violation rate " + fmt(c.violation_rate) + ", " + fmt(elapsed) + " s"};
}

// 4. Unstable fixture is rejected.
Outcome reject_unstable() {
  constexpr double kMinRate = 0.20;
  constexpr double kBudgetSeconds = 60.0;
  const auto start = std::chrono::steady_clock::now();
  const Certificate c = train_and_certify(false, fixture_cert());
  const double elapsed = seconds_since(start);
  return {!c.certified && c.violation_rate >= kMinRate && elapsed < kBudgetSeconds,
          "violation rate " + fmt(c.violation_rate) + ", " + fmt(elapsed) + " s"};
}

// 5. Scalar case with Q = I: xi = [e, e_dot] with e = e0 exp(-t) gives
// V = 2 e^2 and V_dot = -2V. The horizon keeps 2V above 0.5 so both gammas
// leave the hinge inactive.
Outcome scalar_closed_form() {
  constexpr double kDt = 0.001;
  constexpr double kTEnd = 1.0;
  constexpr double kE0 = 1.0;
  constexpr double kTolerance = 2e-2;

  NetworkParameters p = init_params(LayerSpec::for_state_dim(2, {}), 0);
  p.layers[0].weight.setZero();
  const double unit_diag = std::log(std::expm1(1.0));
  p.layers[0].bias << unit_diag, unit_diag, 0.0;

  std::vector<TrajectorySample> samples;
  const auto count = static_cast<int>(std::lround(kTEnd / kDt));
  for (int k = 0; k <= count; ++k) {
    const double t = kDt * k;
    samples.push_back({t, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, -kE0 * std::exp(-t))});
  }
  // e_dot comes from one-sided differences at the two ends, which bias the
  // first and last V_dot by O(1) relative; the window is the interior where
  // central differences apply.
  const StateSeries full = make_states(Trajectory(std::move(samples)), 1);
  const StateSeries states(TimeSeries(full.entries().begin() + 1, full.entries().end() - 1));
  const ValueSeries v = v_series(p, states, 0.0);
  const ValueSeries vd = vdot_series(v);
  double worst = 0.0;
  double min_two_v = INFINITY;
  for (std::size_t k = 0; k < vd.size(); ++k) {
    worst = std::max(worst, testing::relative_error(vd[k].value, -2.0 * v[k].value));
  }
  for (const auto& value : v) min_two_v = std::min(min_two_v, 2.0 * value.value);

  CertConfig cfg;
  cfg.diag_floor = 0.0;
  cfg.smoothing_window = 1;
  double loss = 0.0;
  for (double gamma : {0.5, 0.9 * min_two_v}) {
    cfg.gamma = gamma;
    loss = std::max(loss, epoch_loss(p, states, cfg));
  }
  return {worst <= kTolerance && loss == 0.0,
          "max rel err " + fmt(worst) + ", hinge loss " + fmt(loss)};
}

// 6. Differentiation accuracy and RK4 convergence order.
Outcome numerics() {
  constexpr double kDerivTolerance = 1e-4;
  constexpr double kMinOrderRatio = 12.0;
  TimeSeries sine;
  for (int k = 0; k <= 1000; ++k) {
    const double t = 0.01 * k;
    sine.push_back({t, Eigen::VectorXd::Constant(1, std::sin(t))});
  }
  const TimeSeries d = differentiate(sine);
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < d.size(); ++k) {
    worst = std::max(worst, std::abs(d[k].v[0] - std::cos(d[k].t)));
  }

  ErrorSystemSpec spec;
  SimConfig coarse;
  coarse.t_end = 2.0;
  coarse.dt = 0.1;
  SimConfig fine = coarse;
  fine.dt = 0.05;
  const double exact = testing::underdamped_error(spec.a, spec.b, coarse.e0, coarse.edot0, coarse.t_end);
  const double ratio = std::abs(integrate_error(spec, coarse).back()[0] - exact) /
                       std::abs(integrate_error(spec, fine).back()[0] - exact);
  return {worst <= kDerivTolerance && ratio >= kMinOrderRatio,
          "max |d sin - cos| " + fmt(worst) + ", rk4 error ratio " + fmt(ratio)};
}

// 7. End-to-end determinism through the CLI.
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("lyacert_acceptance_" + std::to_string(std::random_device{}()));
  const auto no_env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
  std::string reports[2];
  bool ok = true;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / std::to_string(run);
    fs::create_directories(dir);
    const auto p = [&](const char* name) { return (dir / name).string(); };
    std::ostringstream out, err;
    ok = ok && cli::run({"simulate", "--seed", "7", "--out", p("traj.csv")}, out, err, no_env) == 0;
    ok = ok && cli::run({"train", "--seed", "7", "--traj", p("traj.csv"), "--model-out", p("model.json")},
                        out, err, no_env) == 0;
    const int verdict = cli::run({"certify", "--seed", "7", "--model", p("model.json"), "--traj",
                                  p("traj.csv"), "--report-out", p("report.json")},
                                 out, err, no_env);
    ok = ok && (verdict == 0 || verdict == 1);
    std::ifstream in(p("report.json"));
    std::stringstream buf;
    buf << in.rdbuf();
    reports[run] = buf.str();
  }
  fs::remove_all(root);
  const bool identical = !reports[0].empty() && reports[0] == reports[1];
  return {ok && identical, identical ? "reports byte-identical" : "reports differ"};
}

// 8. Violation sets shrink as epsilon grows.
Outcome epsilon_nesting() {
  std::mt19937_64 rng(8);
  NetworkParameters p = init_params(LayerSpec::for_state_dim(2, {8}), 8);
  testing::randomize(p, rng, 0.6);
  const StateSeries states = testing::random_states(200, 2, rng);
  const ValueSeries vd = vdot_series(v_series(p, states, 0.05));
  std::vector<std::size_t> previous;
  bool nested = true;
  bool first = true;
  for (double eps : {0.0, 0.01, 0.1, 1.0, 10.0}) {
    const std::vector<std::size_t> current = violating_samples(vd, states, eps, 0.0);
    if (!first) nested = nested && std::includes(previous.begin(), previous.end(), current.begin(), current.end());
    previous = current;
    first = false;
  }
  return {nested, nested ? "nested over 5 thresholds" : "nesting violated"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"gradient matches finite differences", gradient_check},
      {"candidate is positive definite", positive_definiteness},
      {"stable fixture certified", certify_stable},
      {"unstable fixture rejected", reject_unstable},
      {"scalar closed form", scalar_closed_form},
      {"differentiation and rk4 accuracy", numerics},
      {"end-to-end determinism", determinism},
      {"violation sets nested in epsilon", epsilon_nesting},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    failures += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " [" << index++ << "] " << name << ": "
              << outcome.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
