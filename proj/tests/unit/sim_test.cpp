#include "lyacert/sim.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace lyacert {
namespace {

TEST(Rk4Step, ZeroFieldIsIdentity) {
  const VectorField zero = [](double, const Eigen::VectorXd& s) {
    return Eigen::VectorXd::Zero(s.size()).eval();
  };
  const Eigen::Vector3d s(1, -2, 3);
  EXPECT_EQ(rk4_step(zero, s, 0.0, 0.5), Eigen::VectorXd(s));
}

TEST(Rk4Step, ExponentialGrowth) {
  const VectorField f = [](double, const Eigen::VectorXd& s) { return s; };
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  EXPECT_NEAR(rk4_step(f, one, 0.0, 0.1)[0], std::exp(0.1), 1e-7);
}

TEST(Rk4Step, LinearSystemMatchesTaylorPolynomial) {
  // For x' = A x one RK4 step is exactly (I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24) x.
  Eigen::Matrix2d a;
  a << 0, 1, -4, -2;
  const VectorField f = [&](double, const Eigen::VectorXd& s) { return (a * s).eval(); };
  const double h = 0.05;
  const Eigen::Matrix2d ha = h * a;
  const Eigen::Matrix2d poly = Eigen::Matrix2d::Identity() + ha + ha * ha / 2 + ha * ha * ha / 6 +
                               ha * ha * ha * ha / 24;
  const Eigen::Vector2d s(0.7, -1.1);
  EXPECT_TRUE(rk4_step(f, s, 0.0, h).isApprox(poly * s, 1e-14));
}

TEST(Rk4Step, NonFiniteStageThrows) {
  const VectorField f = [](double, const Eigen::VectorXd& s) {
    return Eigen::VectorXd::Constant(s.size(), std::nan("")).eval();
  };
  try {
    rk4_step(f, Eigen::VectorXd::Ones(2), 0.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteState);
  }
}

TEST(Reference, Kinds) {
  Reference r;
  r.amplitude = 2.0;
  r.angular_frequency = 3.0;
  EXPECT_NEAR(r.at(0.5), 2.0 * std::sin(1.5), 1e-15);
  r.kind = Reference::Kind::Constant;
  r.level = -0.25;
  EXPECT_EQ(r.at(7.0), -0.25);
}

TEST(SampleCount, FloorPlusOne) {
  SimConfig c;
  EXPECT_EQ(sample_count(c), 1001u);
  c.t_end = 0.3;
  c.dt = 0.1;
  EXPECT_EQ(sample_count(c), 4u);
  c.t_end = 0.35;
  EXPECT_EQ(sample_count(c), 4u);
}

TEST(Simulate, ZeroErrorTracksReference) {
  ErrorSystemSpec spec;
  spec.m = 2;
  SimConfig cfg;
  cfg.e0 = 0.0;
  cfg.edot0 = 0.0;
  const Trajectory traj = simulate(spec, cfg);
  EXPECT_EQ(traj.dim(), 2u);
  EXPECT_EQ(traj.size(), sample_count(cfg));
  for (const auto& s : traj.samples()) EXPECT_EQ(s.x, s.r);
}

TEST(Simulate, StableErrorDecays) {
  ErrorSystemSpec spec;
  const std::vector<Eigen::VectorXd> e = integrate_error(spec, SimConfig{});
  EXPECT_EQ(e.front()[0], 1.0);
  EXPECT_LT(std::abs(e.back()[0]), 1e-3);
}

TEST(Simulate, UnstableErrorGrows) {
  ErrorSystemSpec spec;
  spec.a = 1.0;
  spec.b = 0.0;
  SimConfig cfg;
  cfg.t_end = 5.0;
  cfg.e0 = 0.01;
  EXPECT_FALSE(spec.is_stable());
  const std::vector<Eigen::VectorXd> e = integrate_error(spec, cfg);
  for (std::size_t k = 1; k < e.size(); ++k) EXPECT_GT(e[k][0], e[k - 1][0]);
  EXPECT_GT(e.back()[0], 0.7);
}

TEST(Simulate, SeededNoiseIsDeterministic) {
  ErrorSystemSpec spec;
  spec.noise_sigma = 0.01;
  spec.seed = 17;
  spec.m = 2;
  const Trajectory a = simulate(spec, SimConfig{});
  const Trajectory b = simulate(spec, SimConfig{});
  spec.seed = 18;
  const Trajectory c = simulate(spec, SimConfig{});
  bool any_difference = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].x, b[k].x);
    any_difference = any_difference || a[k].x != c[k].x;
  }
  EXPECT_TRUE(any_difference);
}

TEST(Simulate, NoiseFreeMatchesIntegratedError) {
  ErrorSystemSpec spec;
  spec.m = 3;
  const SimConfig cfg;
  const Trajectory traj = simulate(spec, cfg);
  const std::vector<Eigen::VectorXd> e = integrate_error(spec, cfg);
  ASSERT_EQ(e.size(), traj.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    EXPECT_NEAR(traj[k].t, cfg.dt * static_cast<double>(k), 1e-12);
    EXPECT_LE((traj[k].r - traj[k].x - e[k]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Simulate, FourthOrderConvergence) {
  // a = -4, b = -2 is underdamped; compare e(t_end) against the closed form.
  ErrorSystemSpec spec;
  SimConfig coarse;
  coarse.t_end = 2.0;
  coarse.dt = 0.1;
  SimConfig fine = coarse;
  fine.dt = 0.05;
  const double exact = testing::underdamped_error(spec.a, spec.b, 1.0, 0.0, 2.0);
  const double err_coarse = std::abs(integrate_error(spec, coarse).back()[0] - exact);
  const double err_fine = std::abs(integrate_error(spec, fine).back()[0] - exact);
  EXPECT_GE(err_coarse / err_fine, 12.0);
}

TEST(Simulate, DivergenceCarriesPartialSamples) {
  ErrorSystemSpec spec;
  spec.a = 100.0;
  spec.b = 0.0;
  try {
    simulate(spec, SimConfig{});
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_FALSE(e.partial().empty());
    EXPECT_LT(e.partial().size(), sample_count(SimConfig{}));
    for (const auto& s : e.partial()) EXPECT_TRUE(s.x.allFinite());
  }
}

}  // namespace
}  // namespace lyacert
