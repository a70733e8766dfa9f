#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "lyacert/error.hpp"
#include "lyacert/trajectory.hpp"

namespace lyacert {

// Componentwise error dynamics e_ddot = a e + b e_dot (stable iff a < 0, b < 0).
struct ErrorSystemSpec {
  enum class Mode { SecondOrderLinear };

  std::size_t m = 1;
  Mode mode = Mode::SecondOrderLinear;
  double a = -4.0;
  double b = -2.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  bool is_stable() const noexcept { return a < 0.0 && b < 0.0; }
};

struct Reference {
  enum class Kind { Sinusoid, Constant };

  Kind kind = Kind::Sinusoid;
  double amplitude = 1.0;
  double angular_frequency = 1.0;
  double level = 0.0;

  double at(double t) const;
};

struct SimConfig {
  double t_end = 10.0;
  double dt = 0.01;
  Reference reference;
  double e0 = 1.0;     // initial error, every component
  double edot0 = 0.0;  // initial error rate, every component
};

using VectorField = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& state)>;

// Classical fourth-order Runge-Kutta step. Throws NonFiniteState if any stage
// or the result is not finite.
Eigen::VectorXd rk4_step(const VectorField& f, const Eigen::VectorXd& state, double t, double dt);

// Raised when |state| exceeds the divergence cap; carries the samples produced
// before the cap was hit.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<TrajectorySample> partial)
      : Error(ErrorCode::NonFiniteState, what), partial_(std::move(partial)) {}

  const std::vector<TrajectorySample>& partial() const noexcept { return partial_; }

 private:
  std::vector<TrajectorySample> partial_;
};

inline constexpr double kDivergenceCap = 1e12;

// floor(t_end / dt) + 1, tolerant of representation error in the ratio.
std::size_t sample_count(const SimConfig& cfg);

// Integrates (e, e_dot) with RK4 and emits r(t_k) and
// x(t_k) = r(t_k) - e(t_k) + noise with noise ~ N(0, noise_sigma^2) drawn from
// a std::mt19937_64 seeded with spec.seed, sample by sample, component by
// component.
Trajectory simulate(const ErrorSystemSpec& spec, const SimConfig& cfg);

// Noise-free error samples e(t_k) of the same integration, for tests.
std::vector<Eigen::VectorXd> integrate_error(const ErrorSystemSpec& spec, const SimConfig& cfg);

}  // namespace lyacert
